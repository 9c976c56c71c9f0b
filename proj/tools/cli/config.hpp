#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace miloc::cli {

// Flat "key = value" settings. Lines starting with '#' are comments; later
// assignments replace earlier ones.
class Config {
public:
    static Config parse(std::istream& in, const std::string& source = "<config>");
    static Config load(const std::filesystem::path& path);

    void set(const std::string& key, const std::string& value);
    // "key=value"
    void apply_override(const std::string& assignment);

    bool has(const std::string& key) const { return entries_.count(key) > 0; }
    const std::string& get(const std::string& key) const;
    std::string get_or(const std::string& key, const std::string& fallback) const;
    long long get_int(const std::string& key, long long fallback) const;
    double get_double(const std::string& key, double fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<std::string> get_list(const std::string& key, const std::vector<std::string>& fallback = {}) const;

    // Mandatory.
    std::uint64_t seed() const;
    const std::map<std::string, std::string>& entries() const { return entries_; }

    // Sorted "key=value\n" lines. Paths (out, data) and require.* keys never
    // take part.
    std::string canonical(bool include_seed = true) const;
    // SHA-256 of canonical(), lower-case hex.
    std::string digest(bool include_seed = true) const;
    // require.<metric>.<split> -> condition text
    std::map<std::string, std::string> requirements() const;

private:
    std::map<std::string, std::string> entries_;
};

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

std::vector<std::string> split_list(const std::string& text, char sep = ',');
std::string trim(const std::string& text);

} // namespace miloc::cli
