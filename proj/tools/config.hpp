#pragma once

#include "kinvfp/linear_fp.hpp"
#include "kinvfp/particles.hpp"
#include "kinvfp/phase_grid.hpp"
#include "kinvfp/picard.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace kinvfp::cli {

struct ParticleConfig {
    long N = 100000;
    double dt = 0.01;
    int steps = 100;
    int n_bins = 32;
    DriftMode drift = DriftMode::self_consistent;
    double smoothing = 1.0;
    int stats_every = 10;
    double u_cut = 0.0;  // 0: the grid cutoff
};

struct RunConfig {
    // top level
    int threads = 0;
    std::uint64_t seed = 1;
    int oracle_paths = 100000;
    double oracle_dt_sde = 1e-3;
    double tol_run = 5e-4;

    int s = 4;  // [weight]
    PhaseGrid grid;  // [grid]
    ModelParams params;  // [model]
    InitialDataSpec data;  // [model]
    PicardConfig picard;  // [picard]; T = 0 takes the certificate T
    double T_floor = 1e-8;
    int scan_points = 64;
    ParticleConfig particles;  // [particles]

    RunConfig();
};

// Every key as "section.key" -> canonical text ("" section for top level).
using ConfigEcho = std::map<std::string, std::string>;

struct KeyInfo {
    std::string section;
    std::string key;
    std::string help;
};
const std::vector<KeyInfo>& config_keys();

// Layers file values, then overrides ("key" or "section.key" -> text), then
// validates everything. All problems are reported in one InvalidInput.
RunConfig build_config(const ConfigEcho& file_values, const std::map<std::string, std::string>& overrides);

// Flat key=value file with [section] headers.
ConfigEcho read_ini(const std::string& path);
ConfigEcho parse_ini(std::istream& is);

ConfigEcho echo(const RunConfig& c);

// Named substream seed derived from the run seed.
std::uint64_t substream_seed(const RunConfig& c, const char* name);

}  // namespace kinvfp::cli
