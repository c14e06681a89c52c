#include "mdsc/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "mdsc/error.hpp"

namespace mdsc {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
    T v{};
    const char* first = text.data();
    const char* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last) throw ConfigError("config: key '" + key + "' has invalid value '" + text + "'");
    return v;
}

}  // namespace

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

Config Config::parse(const std::string& text) {
    Config c;
    std::istringstream is(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config: line " + std::to_string(lineno) + " is not 'key = value'");
        }
        const std::string key = trim(t.substr(0, eq));
        if (key.empty()) throw ConfigError("config: empty key on line " + std::to_string(lineno));
        // Only the single separating space is stripped on the right of '=' so
        // values may begin or end with meaningful spaces (e.g. a charset).
        std::string value = t.substr(eq + 1);
        if (!value.empty() && value[0] == ' ') value.erase(0, 1);
        c.values_[key] = value;
    }
    return c;
}

Config Config::load(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ValidationError("config: cannot open " + path.string());
    std::stringstream ss;
    ss << is.rdbuf();
    return parse(ss.str());
}

std::string Config::serialize() const {
    std::string out;
    for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
    return out;
}

const std::string& Config::get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("config: missing key '" + key + "'");
    return it->second;
}

std::string Config::get_or(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

long long Config::get_int(const std::string& key) const { return parse_number<long long>(key, trim(get(key))); }

long long Config::get_int_or(const std::string& key, long long fallback) const {
    return has(key) ? get_int(key) : fallback;
}

std::uint64_t Config::get_u64_or(const std::string& key, std::uint64_t fallback) const {
    return has(key) ? parse_number<std::uint64_t>(key, trim(get(key))) : fallback;
}

double Config::get_double(const std::string& key) const { return parse_number<double>(key, trim(get(key))); }

double Config::get_double_or(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
}

std::vector<std::string> Config::get_list(const std::string& key, char sep) const {
    std::vector<std::string> out;
    const std::string& v = get(key);
    std::size_t start = 0;
    while (start <= v.size()) {
        auto end = v.find(sep, start);
        if (end == std::string::npos) end = v.size();
        std::string item = trim(v.substr(start, end - start));
        if (!item.empty()) out.push_back(item);
        start = end + 1;
    }
    return out;
}

void Config::set(const std::string& key, const std::string& value) {
    if (value.find('\n') != std::string::npos) throw ConfigError("config: value for '" + key + "' contains a newline");
    values_[key] = value;
}

void Config::set(const std::string& key, double value) { set(key, format_double(value)); }

std::vector<std::string> Config::keys_with_prefix(const std::string& prefix) const {
    std::vector<std::string> out;
    for (auto it = values_.lower_bound(prefix); it != values_.end() && it->first.rfind(prefix, 0) == 0; ++it) {
        out.push_back(it->first);
    }
    return out;
}

void Config::merge(const Config& other) {
    for (const auto& [k, v] : other.values_) values_[k] = v;
}

}  // namespace mdsc
