// Flat configuration files: one "a.b.c = value" per line, '#' starts a
// comment. Values are numbers, booleans, bare strings or lists "[v, v, ...]".

#ifndef SHADOWLAB_CONFIG_HPP
#define SHADOWLAB_CONFIG_HPP

#include "core.hpp"

#include <cctype>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace shadowlab {

class Config {
public:
    static Config parse(const std::string& text, const std::string& origin = "<config>")
    {
        Config c;
        std::istringstream in(text);
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
            line = trim(line);
            if (line.empty()) continue;
            auto eq = line.find('=');
            if (eq == std::string::npos) {
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
            }
            std::string key = trim(line.substr(0, eq));
            std::string value = trim(line.substr(eq + 1));
            if (key.empty() || value.empty()) {
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key or value");
            }
            for (char ch : key) {
                if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '.' || ch == '_')) {
                    throw ConfigError(origin + ":" + std::to_string(lineno) + ": bad key '" + key + "'");
                }
            }
            if (c.values_.count(key)) {
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
            }
            c.values_[key] = value;
        }
        return c;
    }

    static Config load(const std::string& path)
    {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot read config file '" + path + "'");
        std::stringstream ss;
        ss << in.rdbuf();
        return parse(ss.str(), path);
    }

    bool has(const std::string& key) const { return values_.count(key) > 0; }
    void set(const std::string& key, const std::string& value) { values_[key] = value; }
    const std::map<std::string, std::string>& values() const { return values_; }

    std::string get_string(const std::string& key, const std::string& fallback) const
    {
        used_.insert(key);
        auto it = values_.find(key);
        return it == values_.end() ? fallback : it->second;
    }

    double get_double(const std::string& key, double fallback) const
    {
        used_.insert(key);
        auto it = values_.find(key);
        return it == values_.end() ? fallback : to_double(key, it->second);
    }

    std::uint64_t get_uint(const std::string& key, std::uint64_t fallback) const
    {
        used_.insert(key);
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        std::uint64_t v = 0;
        const auto& s = it->second;
        auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || p != s.data() + s.size()) {
            // Allow "1e4" style counts.
            double d = to_double(key, s);
            if (!(d >= 0) || d != static_cast<double>(static_cast<std::uint64_t>(d))) {
                throw ConfigError("'" + key + "' must be a non-negative integer, got '" + s + "'");
            }
            return static_cast<std::uint64_t>(d);
        }
        return v;
    }

    bool get_bool(const std::string& key, bool fallback) const
    {
        used_.insert(key);
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        if (it->second == "true") return true;
        if (it->second == "false") return false;
        throw ConfigError("'" + key + "' must be true or false, got '" + it->second + "'");
    }

    std::vector<double> get_list(const std::string& key, const std::vector<double>& fallback) const
    {
        used_.insert(key);
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        std::string s = it->second;
        if (s.size() < 2 || s.front() != '[' || s.back() != ']') {
            throw ConfigError("'" + key + "' must be a list '[a, b, ...]', got '" + s + "'");
        }
        std::vector<double> out;
        std::string body = trim(s.substr(1, s.size() - 2));
        if (body.empty()) return out;
        std::stringstream ss(body);
        std::string item;
        while (std::getline(ss, item, ',')) out.push_back(to_double(key, trim(item)));
        return out;
    }

    /// Keys present in the file that no getter asked for.
    std::vector<std::string> unused() const
    {
        std::vector<std::string> out;
        for (const auto& [k, v] : values_)
            if (!used_.count(k)) out.push_back(k);
        return out;
    }

private:
    static std::string trim(const std::string& s)
    {
        auto a = s.find_first_not_of(" \t\r\n");
        if (a == std::string::npos) return "";
        auto b = s.find_last_not_of(" \t\r\n");
        return s.substr(a, b - a + 1);
    }

    static double to_double(const std::string& key, const std::string& s)
    {
        double v = 0.0;
        auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || p != s.data() + s.size()) {
            throw ConfigError("'" + key + "' must be a number, got '" + s + "'");
        }
        return v;
    }

    std::map<std::string, std::string> values_;
    mutable std::set<std::string> used_;
};

} // namespace shadowlab

#endif
