#pragma once

#include "cli/config.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace miloc::cli {

struct Metric {
    std::string name;
    std::string split;
    double value = 0.0;
    std::optional<double> std_error;
};

struct ReportRecord {
    std::string verb;
    std::string task;
    std::string label;         // row name in consolidated tables
    std::string config_digest; // full config
    std::string merge_digest;  // config without the seed
    std::uint64_t seed = 0;
    std::vector<Metric> metrics;
    double wall_seconds = 0.0;
    std::map<std::string, std::string> artifacts;
    nlohmann::json config;

    void add(const std::string& name, const std::string& split, double value,
             std::optional<double> std_error = std::nullopt);
    const Metric* find(const std::string& name, const std::string& split) const;
};

ReportRecord make_record(const std::string& verb, const Config& config);

nlohmann::json to_json(const ReportRecord& record);
ReportRecord record_from_json(const nlohmann::json& j);
void save_record(const std::filesystem::path& path, const ReportRecord& record);
ReportRecord load_record(const std::filesystem::path& path);

// Conditions: ">=x", "<=x", ">x", "<x" or "lo..hi" (inclusive). Keys are
// "<metric>.<split>". Requirements on metrics the record does not carry are
// left to the verb that produces them. Returns one message per failure.
std::vector<std::string> check_requirements(const ReportRecord& record,
                                            const std::map<std::string, std::string>& requirements);

struct ReportRow {
    std::string label;
    std::string verb;
    std::string merge_digest;
    std::vector<std::uint64_t> seeds;
    // metric "<name>.<split>" -> per-seed values (seed order)
    std::map<std::string, std::vector<double>> values;
};

// Groups records by (label, verb); every group must share one merge digest.
std::vector<ReportRow> merge_records(const std::vector<ReportRecord>& records);
std::string render_table(const std::vector<ReportRow>& rows);
nlohmann::json rows_to_json(const std::vector<ReportRow>& rows);
std::vector<ReportRow> rows_from_json(const nlohmann::json& j);

} // namespace miloc::cli
