#pragma once

#include "config.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace kinvfp::cli {

std::uint64_t fnv1a_file(const std::filesystem::path& p);
std::string hex64(std::uint64_t v);

struct CommandOptions {
    std::filesystem::path out = "kinvfp_out";
    std::filesystem::path manifest;  // verify/report: defaults to out/manifest.json
    std::filesystem::path snapshot;  // norms
    double lambda = -1.0;            // norms: < 0 takes lambda0
};

const std::vector<std::string>& command_names();

// Returns the exit status; InvalidInput / AssertionFailure / NumericalAbort
// propagate to the caller for mapping onto exit codes 1 / 2 / 3.
int run_command(const std::string& name, const RunConfig& cfg, const CommandOptions& opt, std::ostream& log);

// Configuration echoed by a manifest file.
ConfigEcho manifest_config(const std::filesystem::path& manifest);

}  // namespace kinvfp::cli
