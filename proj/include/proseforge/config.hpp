#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

namespace proseforge {

// Flat key=value configuration. Later set() calls (flag overrides) win over
// file values.
class Config {
public:
    Config() = default;
    static Config load(const std::filesystem::path& path);

    bool has(const std::string& key) const;
    std::string get(const std::string& key, const std::string& fallback = "") const;
    std::string require(const std::string& key) const; // ConfigError when absent
    double get_double(const std::string& key, double fallback) const;
    int get_int(const std::string& key, int fallback) const;
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    void set(const std::string& key, const std::string& value);

    const std::map<std::string, std::string>& entries() const { return kv_; }

private:
    std::map<std::string, std::string> kv_;
};

} // namespace proseforge
