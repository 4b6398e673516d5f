#pragma once

#include <string>
#include <vector>

namespace wakesteer {

// Flat, hand-editable configuration text: `[section]` headers and
// `key = value` lines, `#` comments, arrays as comma-separated scalars.
// Keys carry their units in the name (e.g. wind_speed_ms).
class ConfigMap {
public:
    static ConfigMap parse(const std::string& text);
    static ConfigMap load(const std::string& path);

    std::string serialize() const;

    bool has(const std::string& key) const;
    std::string get_string(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    long long get_int(const std::string& key, long long fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<double> get_doubles(const std::string& key) const;
    std::vector<double> get_doubles(const std::string& key,
                                    std::vector<double> fallback) const;

    void set(const std::string& key, const std::string& value);
    void set(const std::string& key, const char* value);
    void set(const std::string& key, double value);
    void set(const std::string& key, long long value);
    void set(const std::string& key, bool value);
    void set(const std::string& key, const std::vector<double>& values);

private:
    // insertion-ordered; key is "section.name"
    std::vector<std::pair<std::string, std::string>> entries_;

    const std::string* find(const std::string& key) const;
};

// shortest decimal representation that parses back to the same double
std::string format_double(double value);
double parse_double(const std::string& text);

} // namespace wakesteer
