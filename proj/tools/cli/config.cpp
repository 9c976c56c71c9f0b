#include "cli/config.hpp"

#include <openssl/evp.h>

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace miloc::cli {

std::string trim(const std::string& text)
{
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first == std::string::npos)
        return "";
    const auto last = text.find_last_not_of(" \t\r\n");
    return text.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& text, char sep)
{
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(text);
    while (std::getline(in, item, sep))
        if (auto t = trim(item); !t.empty())
            out.push_back(t);
    return out;
}

Config Config::parse(std::istream& in, const std::string& source)
{
    Config config;
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        const auto text = trim(line);
        if (text.empty() || text[0] == '#')
            continue;
        const auto eq = text.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error(source + ":" + std::to_string(number) + ": expected key = value");
        const auto key = trim(text.substr(0, eq));
        if (key.empty())
            throw std::runtime_error(source + ":" + std::to_string(number) + ": empty key");
        config.set(key, trim(text.substr(eq + 1)));
    }
    return config;
}

Config Config::load(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot read config " + path.string());
    return parse(in, path.string());
}

void Config::set(const std::string& key, const std::string& value) { entries_[key] = value; }

void Config::apply_override(const std::string& assignment)
{
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || trim(assignment.substr(0, eq)).empty())
        throw std::invalid_argument("override '" + assignment + "' is not key=value");
    set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

const std::string& Config::get(const std::string& key) const
{
    const auto it = entries_.find(key);
    if (it == entries_.end())
        throw std::invalid_argument("missing config key '" + key + "'");
    return it->second;
}

std::string Config::get_or(const std::string& key, const std::string& fallback) const
{
    return has(key) ? get(key) : fallback;
}

long long Config::get_int(const std::string& key, long long fallback) const
{
    if (!has(key))
        return fallback;
    std::size_t used = 0;
    const auto& text = get(key);
    long long value = 0;
    try {
        value = std::stoll(text, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != text.size())
        throw std::invalid_argument("config key '" + key + "' is not an integer: " + text);
    return value;
}

double Config::get_double(const std::string& key, double fallback) const
{
    if (!has(key))
        return fallback;
    std::size_t used = 0;
    const auto& text = get(key);
    double value = 0.0;
    try {
        value = std::stod(text, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != text.size())
        throw std::invalid_argument("config key '" + key + "' is not a number: " + text);
    return value;
}

bool Config::get_bool(const std::string& key, bool fallback) const
{
    if (!has(key))
        return fallback;
    const auto& text = get(key);
    if (text == "true" || text == "1" || text == "yes")
        return true;
    if (text == "false" || text == "0" || text == "no")
        return false;
    throw std::invalid_argument("config key '" + key + "' is not a boolean: " + text);
}

std::vector<std::string> Config::get_list(const std::string& key, const std::vector<std::string>& fallback) const
{
    return has(key) ? split_list(get(key)) : fallback;
}

std::uint64_t Config::seed() const
{
    if (!has("seed"))
        throw std::invalid_argument("config key 'seed' is mandatory");
    const auto value = get_int("seed", 0);
    if (value < 0)
        throw std::invalid_argument("seed must be non-negative");
    return static_cast<std::uint64_t>(value);
}

std::string Config::canonical(bool include_seed) const
{
    std::string out;
    for (const auto& [key, value] : entries_) {
        if (key.rfind("require.", 0) == 0 || key == "out" || key == "data" || (!include_seed && key == "seed"))
            continue;
        out += key + "=" + value + "\n";
    }
    return out;
}

std::string Config::digest(bool include_seed) const { return sha256_hex(canonical(include_seed)); }

std::map<std::string, std::string> Config::requirements() const
{
    std::map<std::string, std::string> out;
    for (const auto& [key, value] : entries_)
        if (key.rfind("require.", 0) == 0)
            out[key.substr(8)] = value;
    return out;
}

std::string sha256_hex(const std::string& bytes)
{
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("SHA-256 failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[md[i] >> 4]);
        out.push_back(hex[md[i] & 15]);
    }
    return out;
}

std::string sha256_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot read " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return sha256_hex(buffer.str());
}

} // namespace miloc::cli
