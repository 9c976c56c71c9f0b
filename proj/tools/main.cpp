#include "cli/commands.hpp"
#include "cli/report.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <future>
#include <iostream>

using namespace miloc::cli;

namespace {

Config build_config(const std::string& path, const std::vector<std::string>& overrides)
{
    Config config = path.empty() ? Config{} : Config::load(path);
    for (const auto& o : overrides)
        config.apply_override(o);
    return config;
}

// Runs `verb` for one config or, with `seeds = a,b,...`, once per seed in
// <out>/seed-<s>. Returns the process exit code.
int run(const std::string& verb, Config config, int jobs)
{
    std::vector<Config> configs;
    if (config.has("seeds")) {
        const auto base = out_dir([&] {
            Config c = config;
            c.set("seed", split_list(config.get("seeds")).at(0));
            return c;
        }());
        const auto root = config.has("out") ? std::filesystem::path(config.get("out")) : base.parent_path() / config.get("task");
        for (const auto& s : split_list(config.get("seeds"))) {
            Config c = config;
            c.set("seed", s);
            c.set("out", (root / ("seed-" + s)).string());
            if (config.has("data"))
                c.set("data", (std::filesystem::path(config.get("data")) / ("seed-" + s)).string());
            configs.push_back(c);
        }
    } else {
        configs.push_back(config);
    }
    for (auto& c : configs)
        c.seed(); // mandatory

    std::vector<ReportRecord> records(configs.size());
    if (jobs > 1 && configs.size() > 1) {
        std::vector<std::future<ReportRecord>> pending;
        for (std::size_t i = 0; i < configs.size(); ++i) {
            pending.push_back(std::async(std::launch::async, [&, i] { return run_verb(verb, configs[i]); }));
            if (pending.size() >= static_cast<std::size_t>(jobs) || i + 1 == configs.size()) {
                const auto first = i + 1 - pending.size();
                for (std::size_t k = 0; k < pending.size(); ++k)
                    records[first + k] = pending[k].get();
                pending.clear();
            }
        }
    } else {
        for (std::size_t i = 0; i < configs.size(); ++i)
            records[i] = run_verb(verb, configs[i]);
    }

    int status = 0;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        std::cout << verb << " seed " << r.seed << " -> " << (out_dir(configs[i]) / (verb + ".json")).string() << '\n';
        for (const auto& m : r.metrics) {
            std::cout << "  " << m.name << " [" << m.split << "] " << m.value;
            if (m.std_error)
                std::cout << " +- " << *m.std_error;
            std::cout << '\n';
        }
        for (const auto& failure : check_requirements(r, configs[i].requirements())) {
            std::cout << "  REQUIREMENT FAILED: " << failure << '\n';
            status = 1;
        }
    }
    return status;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Mutual-information classifiers and infoCAM localization"};
    app.require_subcommand(1);
    std::string config_path;
    std::vector<std::string> overrides;
    int jobs = 1;

    auto add_experiment_verb = [&](const std::string& name, const std::string& help) {
        auto* cmd = app.add_subcommand(name, help);
        cmd->add_option("-c,--config", config_path, "key = value config file");
        cmd->add_option("-s,--set", overrides, "override, key=value (repeatable; wins over the file)");
        cmd->add_option("-j,--jobs", jobs, "run independent seeds concurrently")->check(CLI::PositiveNumber);
        return cmd;
    };
    add_experiment_verb("gen", "generate a dataset and its manifest");
    add_experiment_verb("train", "train a classifier and save the selected checkpoint");
    add_experiment_verb("eval-mi", "model-based and Monte-Carlo mutual information");
    add_experiment_verb("eval-cls", "classification accuracy");
    add_experiment_verb("localize", "CAM / infoCAM / infoCAM+ localization suite");

    auto* report = app.add_subcommand("report", "merge report records into a table");
    std::vector<std::string> record_paths;
    std::string json_out;
    report->add_option("records", record_paths, "record files (<verb>.json)")->required()->check(CLI::ExistingFile);
    report->add_option("--json", json_out, "also write the merged rows as JSON");

    CLI11_PARSE(app, argc, argv);

    try {
        if (report->parsed()) {
            std::vector<ReportRecord> records;
            for (const auto& p : record_paths)
                records.push_back(load_record(p));
            const auto rows = merge_records(records);
            std::cout << render_table(rows);
            if (!json_out.empty())
                std::ofstream(json_out) << rows_to_json(rows).dump(2) << '\n';
            return 0;
        }
        const auto* verb = app.get_subcommands().front();
        return run(verb->get_name(), build_config(config_path, overrides), jobs);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
