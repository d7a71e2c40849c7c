#pragma once

#include <map>
#include <string>
#include <vector>

#include "window.hpp"

namespace lsad {

/// Flat `key = value` text format used by scenario and harness config files.
/// '#' starts a comment; keys are case-sensitive; later duplicates win.
class KeyValueFile {
public:
    static KeyValueFile load(const std::string& path);
    static KeyValueFile parse(const std::string& text, const std::string& origin);

    bool has(const std::string& key) const { return values_.count(key) > 0; }

    std::string get_string(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    long long get_int(const std::string& key) const;
    long long get_int(const std::string& key, long long fallback) const;
    std::vector<double> get_double_list(const std::string& key) const;

    const std::string& origin() const { return origin_; }
    const std::map<std::string, std::string>& values() const { return values_; }

private:
    std::map<std::string, std::string> values_;
    std::string origin_;
};

}  // namespace lsad
