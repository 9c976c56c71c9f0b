#pragma once

#include "cli/config.hpp"
#include "cli/report.hpp"

#include <filesystem>
#include <string>

namespace miloc::cli {

std::filesystem::path out_dir(const Config& config);
std::filesystem::path data_dir(const Config& config);

ReportRecord cmd_gen(const Config& config);
ReportRecord cmd_train(const Config& config);
ReportRecord cmd_eval_mi(const Config& config);
ReportRecord cmd_eval_cls(const Config& config);
ReportRecord cmd_localize(const Config& config);

// Dispatches one of the verbs above, stores <out>/<verb>.json and returns the
// record.
ReportRecord run_verb(const std::string& verb, const Config& config);

} // namespace miloc::cli
