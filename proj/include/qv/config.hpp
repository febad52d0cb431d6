#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace qv {

/// Raised for malformed or unknown configuration; maps to exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Flat key = value run configuration. One pair per line, '#' comments.
/// Unknown keys are errors, and every run writes a config_echo copy next to
/// its outputs.
class RunConfig {
  public:
    static RunConfig parse_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("config: cannot open " + path);
        std::stringstream ss;
        ss << in.rdbuf();
        return parse_text(ss.str());
    }

    static RunConfig parse_text(const std::string& text) {
        RunConfig cfg;
        cfg.raw_ = text;
        std::istringstream in(text);
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line = line.substr(0, hash);
            const auto is_space = [](unsigned char c) { return std::isspace(c); };
            line.erase(line.begin(),
                       std::find_if_not(line.begin(), line.end(), is_space));
            line.erase(std::find_if_not(line.rbegin(), line.rend(), is_space).base(),
                       line.end());
            if (line.empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw ConfigError("config: line " + std::to_string(lineno) +
                                  " is not key = value");
            std::string key = line.substr(0, eq);
            std::string val = line.substr(eq + 1);
            key.erase(std::find_if_not(key.rbegin(), key.rend(), is_space).base(),
                      key.end());
            val.erase(val.begin(), std::find_if_not(val.begin(), val.end(), is_space));
            if (key.empty() || val.empty())
                throw ConfigError("config: empty key or value at line " +
                                  std::to_string(lineno));
            if (cfg.kv_.count(key))
                throw ConfigError("config: duplicate key " + key);
            cfg.kv_[key] = val;
        }
        return cfg;
    }

    bool has(const std::string& key) const { return kv_.count(key) != 0; }

    std::string get_string(const std::string& key) const {
        const auto it = kv_.find(key);
        if (it == kv_.end()) throw ConfigError("config: missing key " + key);
        used_.insert(key);
        return it->second;
    }

    std::string get_string(const std::string& key, const std::string& dflt) const {
        used_.insert(key);
        const auto it = kv_.find(key);
        return it == kv_.end() ? dflt : it->second;
    }

    double get_real(const std::string& key) const { return to_real(key, get_string(key)); }
    double get_real(const std::string& key, double dflt) const {
        if (!has(key)) {
            used_.insert(key);
            return dflt;
        }
        return to_real(key, get_string(key));
    }

    long get_int(const std::string& key) const { return to_int(key, get_string(key)); }
    long get_int(const std::string& key, long dflt) const {
        if (!has(key)) {
            used_.insert(key);
            return dflt;
        }
        return to_int(key, get_string(key));
    }

    bool get_bool(const std::string& key, bool dflt) const {
        if (!has(key)) {
            used_.insert(key);
            return dflt;
        }
        const std::string v = get_string(key);
        if (v == "true" || v == "1" || v == "yes") return true;
        if (v == "false" || v == "0" || v == "no") return false;
        throw ConfigError("config: key " + key + " is not a boolean: " + v);
    }

    std::vector<long> get_int_list(const std::string& key) const {
        const std::string v = get_string(key);
        std::vector<long> out;
        std::istringstream ss(v);
        std::string tok;
        while (std::getline(ss, tok, ','))
            if (!tok.empty()) out.push_back(to_int(key, tok));
        if (out.empty()) throw ConfigError("config: empty list for key " + key);
        return out;
    }

    /// Every key must have been consumed by get_* calls; anything else is a
    /// typo or an option the command does not understand.
    void reject_unknown_keys() const {
        std::string unknown;
        for (const auto& [k, v] : kv_)
            if (!used_.count(k)) unknown += (unknown.empty() ? "" : ", ") + k;
        if (!unknown.empty()) throw ConfigError("config: unknown keys: " + unknown);
    }

    const std::string& raw_text() const { return raw_; }

  private:
    static double to_real(const std::string& key, const std::string& v) {
        try {
            std::size_t pos = 0;
            const double x = std::stod(v, &pos);
            if (pos != v.size()) throw std::invalid_argument("trailing");
            return x;
        } catch (const std::exception&) {
            throw ConfigError("config: key " + key + " is not a number: " + v);
        }
    }
    static long to_int(const std::string& key, const std::string& v) {
        try {
            std::size_t pos = 0;
            const long x = std::stol(v, &pos);
            if (pos != v.size()) throw std::invalid_argument("trailing");
            return x;
        } catch (const std::exception&) {
            throw ConfigError("config: key " + key + " is not an integer: " + v);
        }
    }

    std::map<std::string, std::string> kv_;
    mutable std::set<std::string> used_;
    std::string raw_;
};

}  // namespace qv
