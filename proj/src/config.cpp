#include "wakesteer/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "wakesteer/errors.hpp"

namespace wakesteer {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

} // namespace

std::string format_double(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& text) {
    const std::string t = trim(text);
    double v = 0.0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (res.ec != std::errc{} || res.ptr != t.data() + t.size())
        throw config_error("cannot parse number: '" + text + "'");
    return v;
}

ConfigMap ConfigMap::parse(const std::string& text) {
    ConfigMap cfg;
    std::istringstream in(text);
    std::string line, section;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw config_error("malformed section header at line " +
                                   std::to_string(line_no));
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw config_error("expected 'key = value' at line " +
                               std::to_string(line_no));
        std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw config_error("empty key at line " + std::to_string(line_no));
        if (!section.empty()) key = section + "." + key;
        cfg.set(key, value);
    }
    return cfg;
}

ConfigMap ConfigMap::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

std::string ConfigMap::serialize() const {
    std::ostringstream out;
    std::string section;
    for (const auto& [key, value] : entries_) {
        const auto dot = key.find('.');
        const std::string sec = dot == std::string::npos ? "" : key.substr(0, dot);
        const std::string name = dot == std::string::npos ? key : key.substr(dot + 1);
        if (sec != section) {
            if (out.tellp() > 0) out << "\n";
            out << "[" << sec << "]\n";
            section = sec;
        }
        out << name << " = " << value << "\n";
    }
    return out.str();
}

const std::string* ConfigMap::find(const std::string& key) const {
    for (const auto& [k, v] : entries_)
        if (k == key) return &v;
    return nullptr;
}

bool ConfigMap::has(const std::string& key) const { return find(key) != nullptr; }

std::string ConfigMap::get_string(const std::string& key) const {
    const auto* v = find(key);
    if (!v) throw config_error("missing config key: " + key);
    return *v;
}

std::string ConfigMap::get_string(const std::string& key,
                                  const std::string& fallback) const {
    const auto* v = find(key);
    return v ? *v : fallback;
}

double ConfigMap::get_double(const std::string& key) const {
    return parse_double(get_string(key));
}

double ConfigMap::get_double(const std::string& key, double fallback) const {
    const auto* v = find(key);
    return v ? parse_double(*v) : fallback;
}

long long ConfigMap::get_int(const std::string& key, long long fallback) const {
    const auto* v = find(key);
    if (!v) return fallback;
    return static_cast<long long>(parse_double(*v));
}

bool ConfigMap::get_bool(const std::string& key, bool fallback) const {
    const auto* v = find(key);
    if (!v) return fallback;
    if (*v == "true" || *v == "1" || *v == "yes") return true;
    if (*v == "false" || *v == "0" || *v == "no") return false;
    throw config_error("cannot parse boolean for key " + key + ": '" + *v + "'");
}

std::vector<double> ConfigMap::get_doubles(const std::string& key) const {
    const std::string raw = get_string(key);
    std::vector<double> values;
    std::string item;
    std::istringstream in(raw);
    while (std::getline(in, item, ',')) values.push_back(parse_double(item));
    if (values.empty()) throw config_error("empty array for key: " + key);
    return values;
}

std::vector<double> ConfigMap::get_doubles(const std::string& key,
                                           std::vector<double> fallback) const {
    return has(key) ? get_doubles(key) : fallback;
}

void ConfigMap::set(const std::string& key, const std::string& value) {
    for (auto& [k, v] : entries_) {
        if (k == key) {
            v = value;
            return;
        }
    }
    entries_.emplace_back(key, value);
}

void ConfigMap::set(const std::string& key, const char* value) {
    set(key, std::string(value));
}

void ConfigMap::set(const std::string& key, double value) {
    set(key, format_double(value));
}

void ConfigMap::set(const std::string& key, long long value) {
    set(key, std::to_string(value));
}

void ConfigMap::set(const std::string& key, bool value) {
    set(key, std::string(value ? "true" : "false"));
}

void ConfigMap::set(const std::string& key, const std::vector<double>& values) {
    std::string joined;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) joined += ", ";
        joined += format_double(values[i]);
    }
    set(key, joined);
}

} // namespace wakesteer
