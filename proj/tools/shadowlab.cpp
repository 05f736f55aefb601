#include <shadowlab/experiment.hpp>

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace shadowlab;

namespace {

enum ExitCode { kOk = 0, kConfig = 2, kNumerical = 3, kInconclusive = 4 };

struct Common {
    std::string config;
    std::string out;
    std::string recipe;
    std::uint64_t seed = 0;
    bool seed_given = false;
    unsigned workers = 0;
    bool workers_given = false;
};

Config load_config(const Common& c)
{
    Config cfg = c.config.empty() ? Config::parse("") : Config::load(c.config);
    if (c.seed_given) cfg.set("seed", std::to_string(c.seed));
    if (c.workers_given) cfg.set("workers", std::to_string(c.workers));
    return cfg;
}

std::string out_path(const Common& c, const std::string& file)
{
    fs::path dir = c.out.empty() ? fs::path(".") : fs::path(c.out);
    fs::create_directories(dir);
    return (dir / file).string();
}

void write_text(const std::string& path, const std::string& text)
{
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot write '" + path + "'");
    os << text;
}

FlowOptions flow_options(const Config& c)
{
    ExperimentConfig defaults;
    FlowOptions f = defaults.flow;
    f.tol.abs = c.get_double("integrator.abs_tol", f.tol.abs);
    f.tol.rel = c.get_double("integrator.rel_tol", f.tol.rel);
    f.max_step = c.get_double("integrator.max_step", f.max_step);
    f.escape_radius = c.get_double("integrator.escape_radius", f.escape_radius);
    return f;
}

VectorField model_of(const Config& c)
{
    return make_model(c.get_string("model.name", "lorenz"), c.get_list("model.params", {}));
}

Vec3 point_of(const Config& c, const std::string& key, const Vec3& fallback)
{
    return detail::vec3_from_list(key, c.get_list(key, {fallback[0], fallback[1], fallback[2]}));
}

std::string required(const Config& c, const std::string& key)
{
    auto v = c.get_string(key, "");
    if (v.empty()) throw ConfigError("missing config key '" + key + "'");
    return v;
}

UnstableBranches landmarks_of(const VectorField& field, const Config& c, const FlowOptions& flow)
{
    if (field.singularities.empty()) throw ConfigError("model has no singularity");
    auto e = experiment_config(c);
    auto sections = build_singular_sections(field, field.singularities.front(), e.sections, flow);
    LandmarkOptions lo = e.landmarks;
    lo.seed = CounterRng(e.seed).split("landmarks")();
    return branch_landmarks(field, sections, lo, flow);
}

int simulate(const Common& cm)
{
    Config c = load_config(cm);
    auto field = model_of(c);
    auto flow = flow_options(c);
    Vec3 x0 = point_of(c, "simulate.x0", Vec3(1, 1, 1));
    double duration = c.get_double("simulate.duration", 10.0);
    auto samples = c.get_uint("simulate.samples", 1001);
    if (!(duration > 0.0) || samples < 2) throw ConfigError("simulate needs duration > 0 and samples >= 2");
    auto traj = integrate(field, x0, duration, flow);
    std::ostringstream os;
    os.precision(17);
    os << "t,x,y,z\n";
    for (std::uint64_t k = 0; k < samples; ++k) {
        double t = duration * static_cast<double>(k) / static_cast<double>(samples - 1);
        Vec3 x = traj.at(t);
        os << t << "," << x[0] << "," << x[1] << "," << x[2] << "\n";
    }
    write_text(out_path(cm, "trajectory.csv"), os.str());
    return kOk;
}

int sample_attractor_cmd(const Common& cm)
{
    Config c = load_config(cm);
    auto e = experiment_config(c);
    auto field = make_model(e.model, e.model_params);
    PointCloud cloud;
    if (field.singularities.empty()) {
        cloud = sample_attractor(field, e.attractor, e.flow);
    } else {
        auto frame = singular_frame(field, field.singularities.front());
        cloud = refined_attractor_cloud(field, frame, e.attractor, e.refinement, e.flow);
    }
    save_point_cloud(out_path(cm, "attractor.cloud"), cloud);
    std::cout << cloud.points.size() << " points\n";
    return kOk;
}

int build_chain_cmd(const Common& cm)
{
    Config c = load_config(cm);
    auto field = model_of(c);
    auto flow = flow_options(c);
    auto kind = c.get_string("build.kind", "perturbed");
    auto seed = c.get_uint("seed", 1);
    if (kind == "perturbed") {
        auto chain = build_perturbed_chain(field, point_of(c, "build.x0", Vec3(1, 1, 1)),
                                           c.get_list("build.durations", {1.0, 1.0, 1.0}),
                                           c.get_double("build.noise", 1e-3), seed, flow);
        save_chain(out_path(cm, "chain.txt"), chain);
    } else if (kind == "adversarial") {
        auto ub = landmarks_of(field, c, flow);
        auto e = experiment_config(c);
        Vec3 p = branch_point_beyond(ub, 1, e.side_offset);
        int branch = static_cast<int>(c.get_double("build.branch", 0));
        if (branch == 0) {
            auto frame = singular_frame(field, ub.sigma);
            branch = -exit_branch(field, frame, p, 1.0, 20.0, flow);
        }
        auto adv = build_adversarial_chain(field, p, ub, branch, c.get_double("build.delta", 1e-2), e.T, {}, flow);
        save_chain(out_path(cm, "chain.txt"), adv.chain);
    } else {
        throw ConfigError("build.kind must be perturbed or adversarial");
    }
    return kOk;
}

int verify_trace_cmd(const Common& cm)
{
    Config c = load_config(cm);
    auto e = experiment_config(c);
    auto chain = load_chain(required(c, "verify.chain"), e.flow);
    double eps = c.get_double("verify.eps", e.eps);
    std::optional<AttractorSample> sample;
    auto sample_path = c.get_string("verify.sample", "");
    if (!sample_path.empty()) sample.emplace(load_point_cloud(sample_path));
    CandidateSpec cs = e.candidates;
    if (!sample) cs.subsample = 0;
    TraceOptions opt;
    opt.grid = e.grid;
    opt.cap = e.cap;
    opt.workers = e.workers;
    opt.flow = e.flow;
    opt.refine_rounds = e.refine_rounds;
    opt.refine_samples = e.refine_samples;
    opt.seed = CounterRng(e.seed).split("refine")();
    const AttractorSample* sp = sample ? &*sample : nullptr;
    auto v = verify_trace(chain, eps, e.cls, trace_candidates(chain, eps, sp, cs), opt);
    v.candidates = describe_candidates(cs, sp);
    write_text(out_path(cm, "verdict.json"), to_json(v).dump(2) + "\n");
    std::cout << "traced=" << v.traced << " error=" << v.achieved_error << " candidates=" << v.candidate_count
              << "\n";
    return v.inconclusive ? kInconclusive : kOk;
}

int classify_side_cmd(const Common& cm)
{
    Config c = load_config(cm);
    auto field = model_of(c);
    auto flow = flow_options(c);
    AttractorSample sample(load_point_cloud(required(c, "classify.sample")));
    auto flat = c.get_list("classify.points", {});
    if (flat.empty() || flat.size() % 3 != 0) throw ConfigError("classify.points needs a non-empty list of triples");
    nlohmann::json out = nlohmann::json::array();
    for (std::size_t i = 0; i < flat.size(); i += 3) {
        auto s = classify_side(field, Vec3(flat[i], flat[i + 1], flat[i + 2]), sample, {}, {}, flow);
        out.push_back(detail::side_to_json(s, "point " + std::to_string(i / 3)));
    }
    write_text(out_path(cm, "side.json"), out.dump(2) + "\n");
    return kOk;
}

int landmarks_cmd(const Common& cm)
{
    Config c = load_config(cm);
    auto field = model_of(c);
    auto flow = flow_options(c);
    auto ub = landmarks_of(field, c, flow);
    auto j = landmarks_to_json(ub);
    write_text(out_path(cm, "landmarks.json"), j.dump(2) + "\n");
    std::cout << "beta=" << ub.beta << " pass=" << ub.certificate.pass() << "\n";
    return ub.certificate.pass() ? kOk : kNumerical;
}

int growth_cmd(const Common& cm)
{
    Config c = load_config(cm);
    auto field = model_of(c);
    GrowthOptions go;
    go.flow = flow_options(c);
    Vec3 x0 = point_of(c, "growth.x0", Vec3(1, 1, 20));
    double horizon = c.get_double("growth.horizon", 50.0);
    double r = c.get_double("growth.probe_radius", 0.0);
    auto g = r > 0.0 ? hyperbolicity_probe(field, x0, horizon, r, go) : sectional_growth(field, x0, horizon, go);
    write_text(out_path(cm, "growth.json"), detail::growth_to_json(g).dump(2) + "\n");
    return kOk;
}

int run_experiment_cmd(const Common& cm)
{
    Config c = load_config(cm);
    auto e = experiment_config(c, cm.recipe);
    auto rep = run_experiment(e);
    write_text(out_path(cm, "report.json"), serialize_report(rep));
    write_text(out_path(cm, "timing.json"), rep.timing.dump(2) + "\n");
    std::cout << e.recipe << ": " << (rep.pass ? "expected outcome reproduced" : "expected outcome NOT reproduced")
              << "\n";
    if (rep.inconclusive) return kInconclusive;
    return rep.pass ? kOk : kNumerical;
}

int emit_plot_data_cmd(const Common& cm, const std::string& report, const std::string& kind)
{
    std::ifstream in(report);
    if (!in) throw ConfigError("cannot read report '" + report + "'");
    nlohmann::json body;
    try {
        in >> body;
    } catch (const nlohmann::json::exception& ex) {
        throw ConfigError("report '" + report + "' is not valid JSON: " + ex.what());
    }
    auto csv = emit_plot_data(body, kind);
    if (cm.out.empty()) {
        std::cout << csv;
    } else {
        write_text(out_path(cm, kind + ".csv"), csv);
    }
    return kOk;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Shadowing and tracing experiments for flows with singularities"};
    app.require_subcommand(1);
    Common cm;
    std::string report, kind;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", cm.config, "flat key = value configuration file");
        sub->add_option("--out", cm.out, "output directory");
        sub->add_option("--seed", cm.seed, "master seed")->each([&](const std::string&) { cm.seed_given = true; });
        sub->add_option("--workers", cm.workers, "worker threads (0 = hardware)")->each([&](const std::string&) {
            cm.workers_given = true;
        });
    };

    std::vector<std::pair<CLI::App*, std::function<int()>>> subs;
    auto add = [&](const std::string& name, const std::string& help, std::function<int()> fn) {
        auto* sub = app.add_subcommand(name, help);
        add_common(sub);
        subs.emplace_back(sub, std::move(fn));
        return sub;
    };
    add("simulate", "integrate one orbit and write t,x,y,z samples", [&] { return simulate(cm); });
    add("sample-attractor", "sample the attractor into a point cloud", [&] { return sample_attractor_cmd(cm); });
    add("build-chain", "build a perturbed or adversarial chain", [&] { return build_chain_cmd(cm); });
    add("verify-trace", "search for an orbit tracing a chain", [&] { return verify_trace_cmd(cm); });
    add("classify-side", "classify points against the attractor sample", [&] { return classify_side_cmd(cm); });
    add("landmarks", "unstable branches, landmarks and beta", [&] { return landmarks_cmd(cm); });
    add("growth", "finite-time growth rates along an orbit", [&] { return growth_cmd(cm); });
    auto* run = add("run-experiment", "run a full recipe", [&] { return run_experiment_cmd(cm); });
    run->add_option("--recipe", cm.recipe, "fpotp-failure or hyperbolic-control");
    auto* plot = add("emit-plot-data", "CSV tables from a report", [&] { return emit_plot_data_cmd(cm, report, kind); });
    plot->add_option("--report", report, "report.json")->required();
    plot->add_option("--kind", kind, "trace-distance, error-vs-delta, branches or side-map")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? kOk : kConfig;
    }
    try {
        for (auto& [sub, fn] : subs)
            if (sub->parsed()) return fn();
    } catch (const StageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.kind();
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const InconclusiveError& e) {
        std::cerr << "inconclusive: " << e.what() << "\n";
        return kInconclusive;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kNumerical;
    }
    return kOk;
}
