#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace mdsc {

/// Flat "key = value" configuration with dotted keys and '#' comments.
/// Serialization sorts keys, so equal configs produce identical text.
class Config {
public:
    static Config parse(const std::string& text);
    static Config load(const std::filesystem::path& path);
    std::string serialize() const;

    bool has(const std::string& key) const { return values_.count(key) != 0; }
    const std::string& get(const std::string& key) const;  // ConfigError if missing
    std::string get_or(const std::string& key, const std::string& fallback) const;
    long long get_int(const std::string& key) const;
    long long get_int_or(const std::string& key, long long fallback) const;
    std::uint64_t get_u64_or(const std::string& key, std::uint64_t fallback) const;
    double get_double(const std::string& key) const;
    double get_double_or(const std::string& key, double fallback) const;
    std::vector<std::string> get_list(const std::string& key, char sep = ',') const;

    void set(const std::string& key, const std::string& value);
    void set(const std::string& key, long long value) { set(key, std::to_string(value)); }
    void set(const std::string& key, int value) { set(key, std::to_string(value)); }
    void set(const std::string& key, std::uint64_t value) { set(key, std::to_string(value)); }
    void set(const std::string& key, double value);
    void erase(const std::string& key) { values_.erase(key); }

    /// Keys beginning with prefix (prefix included in the returned keys).
    std::vector<std::string> keys_with_prefix(const std::string& prefix) const;
    void merge(const Config& other);  // other wins on conflicts

    const std::map<std::string, std::string>& values() const { return values_; }
    friend bool operator==(const Config&, const Config&) = default;

private:
    std::map<std::string, std::string> values_;
};

/// Shortest decimal string that round-trips the double exactly.
std::string format_double(double v);

}  // namespace mdsc
