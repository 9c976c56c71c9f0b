#include "cli/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace miloc::cli {

void ReportRecord::add(const std::string& name, const std::string& split, double value,
                       std::optional<double> std_error)
{
    metrics.push_back({name, split, value, std_error});
}

const Metric* ReportRecord::find(const std::string& name, const std::string& split) const
{
    for (const auto& m : metrics)
        if (m.name == name && m.split == split)
            return &m;
    return nullptr;
}

ReportRecord make_record(const std::string& verb, const Config& config)
{
    ReportRecord r;
    r.verb = verb;
    r.task = config.get_or("task", "");
    r.seed = config.seed();
    r.config_digest = config.digest(true);
    r.merge_digest = config.digest(false);
    r.label = config.get_or("label", r.task);
    for (const auto& [key, value] : config.entries())
        r.config[key] = value;
    return r;
}

nlohmann::json to_json(const ReportRecord& record)
{
    nlohmann::json metrics = nlohmann::json::array();
    for (const auto& m : record.metrics) {
        nlohmann::json j = {{"name", m.name}, {"split", m.split}, {"value", m.value}};
        if (m.std_error)
            j["std_error"] = *m.std_error;
        metrics.push_back(j);
    }
    return {{"verb", record.verb},
            {"task", record.task},
            {"label", record.label},
            {"config_digest", record.config_digest},
            {"merge_digest", record.merge_digest},
            {"seed", record.seed},
            {"metrics", metrics},
            {"wall_seconds", record.wall_seconds},
            {"artifacts", record.artifacts},
            {"config", record.config}};
}

ReportRecord record_from_json(const nlohmann::json& j)
{
    ReportRecord r;
    r.verb = j.at("verb").get<std::string>();
    r.task = j.at("task").get<std::string>();
    r.label = j.at("label").get<std::string>();
    r.config_digest = j.at("config_digest").get<std::string>();
    r.merge_digest = j.at("merge_digest").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& m : j.at("metrics")) {
        Metric metric{m.at("name").get<std::string>(), m.at("split").get<std::string>(), m.at("value").get<double>(),
                      std::nullopt};
        if (m.contains("std_error"))
            metric.std_error = m.at("std_error").get<double>();
        r.metrics.push_back(metric);
    }
    r.wall_seconds = j.value("wall_seconds", 0.0);
    if (j.contains("artifacts"))
        r.artifacts = j.at("artifacts").get<std::map<std::string, std::string>>();
    if (j.contains("config"))
        r.config = j.at("config");
    return r;
}

void save_record(const std::filesystem::path& path, const ReportRecord& record)
{
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    out << to_json(record).dump(2) << '\n';
}

ReportRecord load_record(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot read record " + path.string());
    return record_from_json(nlohmann::json::parse(in));
}

namespace {

bool satisfies(double value, const std::string& condition)
{
    auto number = [&](const std::string& text) {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size())
            throw std::invalid_argument("bad requirement '" + condition + "'");
        return v;
    };
    const auto c = trim(condition);
    if (const auto dots = c.find(".."); dots != std::string::npos) {
        const double lo = number(trim(c.substr(0, dots))), hi = number(trim(c.substr(dots + 2)));
        return value >= lo && value <= hi;
    }
    if (c.rfind(">=", 0) == 0)
        return value >= number(trim(c.substr(2)));
    if (c.rfind("<=", 0) == 0)
        return value <= number(trim(c.substr(2)));
    if (c.rfind(">", 0) == 0)
        return value > number(trim(c.substr(1)));
    if (c.rfind("<", 0) == 0)
        return value < number(trim(c.substr(1)));
    throw std::invalid_argument("bad requirement '" + condition + "'");
}

} // namespace

std::vector<std::string> check_requirements(const ReportRecord& record,
                                            const std::map<std::string, std::string>& requirements)
{
    std::vector<std::string> failures;
    for (const auto& [key, condition] : requirements) {
        const auto dot = key.rfind('.');
        if (dot == std::string::npos)
            throw std::invalid_argument("requirement key '" + key + "' must be <metric>.<split>");
        const auto* metric = record.find(key.substr(0, dot), key.substr(dot + 1));
        if (!metric)
            continue;
        if (!satisfies(metric->value, condition)) {
            std::ostringstream msg;
            msg.precision(6);
            msg << key << " = " << metric->value << " violates " << condition;
            failures.push_back(msg.str());
        }
    }
    return failures;
}

std::vector<ReportRow> merge_records(const std::vector<ReportRecord>& records)
{
    std::vector<ReportRecord> sorted = records;
    std::stable_sort(sorted.begin(), sorted.end(), [](const ReportRecord& a, const ReportRecord& b) {
        return std::tie(a.label, a.verb, a.seed) < std::tie(b.label, b.verb, b.seed);
    });
    std::vector<ReportRow> rows;
    for (const auto& r : sorted) {
        if (rows.empty() || rows.back().label != r.label || rows.back().verb != r.verb) {
            rows.push_back({r.label, r.verb, r.merge_digest, {}, {}});
        } else if (rows.back().merge_digest != r.merge_digest) {
            throw std::runtime_error("records for row '" + r.label + "' (" + r.verb
                                     + ") come from different configurations");
        }
        auto& row = rows.back();
        row.seeds.push_back(r.seed);
        for (const auto& m : r.metrics)
            row.values[m.name + "." + m.split].push_back(m.value);
    }
    return rows;
}

std::string render_table(const std::vector<ReportRow>& rows)
{
    std::ostringstream out;
    char buf[160];
    for (const auto& row : rows) {
        out << row.label << " [" << row.verb << "] seeds:";
        for (auto s : row.seeds)
            out << ' ' << s;
        out << '\n';
        for (const auto& [metric, values] : row.values) {
            double mean = 0.0;
            for (double v : values)
                mean += v / static_cast<double>(values.size());
            double var = 0.0;
            for (double v : values)
                var += (v - mean) * (v - mean);
            const double sd = values.size() > 1 ? std::sqrt(var / static_cast<double>(values.size() - 1)) : 0.0;
            if (values.size() > 1)
                std::snprintf(buf, sizeof buf, "  %-36s %10.4f +- %.4f  (n=%zu)\n", metric.c_str(), mean, sd,
                              values.size());
            else
                std::snprintf(buf, sizeof buf, "  %-36s %10.4f\n", metric.c_str(), mean);
            out << buf;
        }
    }
    return out.str();
}

nlohmann::json rows_to_json(const std::vector<ReportRow>& rows)
{
    nlohmann::json out = nlohmann::json::array();
    for (const auto& row : rows)
        out.push_back({{"label", row.label},
                       {"verb", row.verb},
                       {"merge_digest", row.merge_digest},
                       {"seeds", row.seeds},
                       {"values", row.values}});
    return out;
}

std::vector<ReportRow> rows_from_json(const nlohmann::json& j)
{
    std::vector<ReportRow> rows;
    for (const auto& r : j)
        rows.push_back({r.at("label").get<std::string>(), r.at("verb").get<std::string>(),
                        r.at("merge_digest").get<std::string>(), r.at("seeds").get<std::vector<std::uint64_t>>(),
                        r.at("values").get<std::map<std::string, std::vector<double>>>()});
    return rows;
}

} // namespace miloc::cli
