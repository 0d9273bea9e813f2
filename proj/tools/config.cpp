#include "config.hpp"

#include "kinvfp/error.hpp"
#include "kinvfp/rng.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <optional>
#include <set>
#include <sstream>

namespace kinvfp::cli {

namespace {

struct Entry {
    KeyInfo info;
    std::function<void(RunConfig&, const std::string&)> set;  // throws std::string on a type mismatch
    std::function<std::string(const RunConfig&)> get;
    std::function<std::optional<std::string>(const RunConfig&)> check;
};

template <class T>
T parse_integer(const std::string& s) {
    T v{};
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw std::string("expected an integer, got '" + s + "'");
    return v;
}

double parse_real(const std::string& s) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v))
        throw std::string("expected a number, got '" + s + "'");
    return v;
}

bool parse_bool(const std::string& s) {
    if (s == "true" || s == "1") return true;
    if (s == "false" || s == "0") return false;
    throw std::string("expected true or false, got '" + s + "'");
}

std::optional<std::string> when(bool bad, const std::string& msg) {
    return bad ? std::optional<std::string>(msg) : std::nullopt;
}

using Check = std::function<std::optional<std::string>(const RunConfig&)>;

template <class T>
Entry integer(std::string sec, std::string key, std::string help, T RunConfig::*p, Check chk) {
    return {{sec, key, help}, [p](RunConfig& c, const std::string& v) { c.*p = parse_integer<T>(v); },
            [p](const RunConfig& c) { return std::to_string(c.*p); }, chk};
}

template <class S, class T>
Entry integer_in(std::string sec, std::string key, std::string help, S RunConfig::*o, T S::*p, Check chk) {
    return {{sec, key, help}, [o, p](RunConfig& c, const std::string& v) { c.*o.*p = parse_integer<T>(v); },
            [o, p](const RunConfig& c) { return std::to_string(c.*o.*p); }, chk};
}

Entry real(std::string sec, std::string key, std::string help, double RunConfig::*p, Check chk) {
    return {{sec, key, help}, [p](RunConfig& c, const std::string& v) { c.*p = parse_real(v); },
            [p](const RunConfig& c) { return format_double(c.*p); }, chk};
}

template <class S>
Entry real_in(std::string sec, std::string key, std::string help, S RunConfig::*o, double S::*p, Check chk) {
    return {{sec, key, help}, [o, p](RunConfig& c, const std::string& v) { c.*o.*p = parse_real(v); },
            [o, p](const RunConfig& c) { return format_double(c.*o.*p); }, chk};
}

bool power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

const std::vector<Entry>& entries() {
    static const std::vector<Entry> table = [] {
        std::vector<Entry> t;
        t.push_back(integer<int>("", "threads", "worker threads (0: KINVFP_THREADS, then all cores)", &RunConfig::threads,
                                 [](const RunConfig& c) { return when(c.threads < 0, "must be >= 0"); }));
        t.push_back({{"", "seed", "run seed; every random stream derives from it"},
                     [](RunConfig& c, const std::string& v) { c.seed = parse_integer<std::uint64_t>(v); },
                     [](const RunConfig& c) { return std::to_string(c.seed); },
                     [](const RunConfig&) { return std::optional<std::string>(); }});
        t.push_back(integer<int>("", "oracle_paths", "Feynman-Kac paths per probe", &RunConfig::oracle_paths,
                                 [](const RunConfig& c) { return when(c.oracle_paths < 1000, "must be >= 1000"); }));
        t.push_back(real("", "oracle_dt_sde", "Feynman-Kac SDE step", &RunConfig::oracle_dt_sde,
                         [](const RunConfig& c) { return when(!(c.oracle_dt_sde > 0), "must be > 0"); }));
        t.push_back(real("", "tol_run", "incompressibility tolerance for certified runs", &RunConfig::tol_run,
                         [](const RunConfig& c) { return when(!(c.tol_run > 0), "must be > 0"); }));

        t.push_back(integer<int>("weight", "s", "weight exponent (even, >= 4)", &RunConfig::s,
                                 [](const RunConfig& c) { return when(c.s < 4 || c.s % 2, "must be even and >= 4"); }));

        t.push_back(integer_in("grid", "nx", "x points (power of two >= 8)", &RunConfig::grid, &PhaseGrid::nx,
                               [](const RunConfig& c) {
                                   return when(!power_of_two(c.grid.nx) || c.grid.nx < 8, "must be a power of two >= 8");
                               }));
        t.push_back(integer_in("grid", "nu", "u points (odd >= 5)", &RunConfig::grid, &PhaseGrid::nu,
                               [](const RunConfig& c) { return when(c.grid.nu < 5 || c.grid.nu % 2 == 0, "must be odd and >= 5"); }));
        t.push_back(real_in("grid", "u_max", "velocity cutoff", &RunConfig::grid, &PhaseGrid::u_max,
                            [](const RunConfig& c) {
                                return when(!(c.grid.u_max >= 6.0 * std::sqrt(c.data.thermal_var)),
                                            "must be >= 6 sqrt(thermal_var)");
                            }));

        t.push_back(real_in("model", "sigma", "noise amplitude", &RunConfig::params, &ModelParams::sigma,
                            [](const RunConfig& c) { return when(!(c.params.sigma >= 0), "must be >= 0"); }));
        t.push_back(real_in("model", "beta", "friction", &RunConfig::params, &ModelParams::beta,
                            [](const RunConfig& c) { return when(!(c.params.beta >= 0), "must be >= 0"); }));
        t.push_back(integer_in("model", "alpha", "bulk-velocity coupling (0 or 1)", &RunConfig::params,
                               &ModelParams::alpha,
                               [](const RunConfig& c) { return when(c.params.alpha != 0 && c.params.alpha != 1, "must be 0 or 1"); }));
        t.push_back(real_in("model", "eps", "initial perturbation amplitude", &RunConfig::data, &InitialDataSpec::eps,
                            [](const RunConfig& c) {
                                const double v = c.data.thermal_var;
                                const double psi = std::max((c.grid.u_max * c.grid.u_max - v) / v, 1.0);
                                if (!(c.data.eps >= 0)) return when(true, "must be >= 0");
                                return when(c.data.eps * psi >= 1.0, "eps * max|psi| must be < 1 on the grid (max|psi| = " +
                                                                         format_double(psi) + ")");
                            }));
        t.push_back(integer_in("model", "mode", "initial perturbation wavenumber", &RunConfig::data,
                               &InitialDataSpec::mode, [](const RunConfig& c) { return when(c.data.mode < 1, "must be >= 1"); }));
        t.push_back(real_in("model", "thermal_var", "Maxwellian variance", &RunConfig::data,
                            &InitialDataSpec::thermal_var,
                            [](const RunConfig& c) { return when(!(c.data.thermal_var > 0), "must be > 0"); }));
        t.push_back(real_in("model", "C0", "initial derivative bound constant (0: measured)", &RunConfig::data,
                            &InitialDataSpec::C0, [](const RunConfig& c) { return when(!(c.data.C0 >= 0), "must be >= 0"); }));
        t.push_back(real_in("model", "lambda_bar", "initial analyticity radius", &RunConfig::data,
                            &InitialDataSpec::lambda_bar,
                            [](const RunConfig& c) { return when(!(c.data.lambda_bar > 0), "must be > 0"); }));
        t.push_back(integer_in("model", "m", "initial bound exponent m", &RunConfig::data, &InitialDataSpec::m,
                               [](const RunConfig& c) { return when(c.data.m < 0, "must be >= 0"); }));
        t.push_back(integer_in("model", "n", "initial bound exponent n", &RunConfig::data, &InitialDataSpec::n,
                               [](const RunConfig& c) { return when(c.data.n < 0, "must be >= 0"); }));

        t.push_back(real_in("picard", "lambda0", "initial norm radius", &RunConfig::picard, &PicardConfig::lambda0,
                            [](const RunConfig& c) {
                                return when(!(c.picard.lambda0 > 0 && c.picard.lambda0 < 0.25), "must lie in (0, 1/4)");
                            }));
        t.push_back(real_in("picard", "K", "radius shrink rate", &RunConfig::picard, &PicardConfig::K,
                            [](const RunConfig& c) { return when(!(c.picard.K > 0), "must be > 0"); }));
        t.push_back(real_in("picard", "T", "horizon (0: certificate T)", &RunConfig::picard, &PicardConfig::T,
                            [](const RunConfig& c) {
                                if (!(c.picard.T >= 0)) return when(true, "must be >= 0");
                                return when(c.picard.T > 0 && !(c.picard.lambda_at(c.picard.T) > 0),
                                            "lambda0 - (1+K) T must be positive");
                            }));
        t.push_back(real_in("picard", "M", "ball radius", &RunConfig::picard, &PicardConfig::M,
                            [](const RunConfig& c) { return when(!(c.picard.M >= 0), "must be >= 0"); }));
        t.push_back(integer_in("picard", "A", "norm truncation order", &RunConfig::picard, &PicardConfig::A,
                               [](const RunConfig& c) { return when(c.picard.A < 1, "must be >= 1"); }));
        t.push_back(integer_in("picard", "nt", "time steps over [0,T]", &RunConfig::picard, &PicardConfig::nt,
                               [](const RunConfig& c) { return when(c.picard.nt < 1, "must be >= 1"); }));
        t.push_back(real_in("picard", "tol_fp", "fixed-point tolerance (0: relative 1e-8)", &RunConfig::picard,
                            &PicardConfig::tol_fp, [](const RunConfig& c) { return when(!(c.picard.tol_fp >= 0), "must be >= 0"); }));
        t.push_back(integer_in("picard", "max_iter", "iteration cap", &RunConfig::picard, &PicardConfig::max_iter,
                               [](const RunConfig& c) { return when(c.picard.max_iter < 1, "must be >= 1"); }));
        t.push_back({{"picard", "waive_ball_check", "iterate even when g0 lies outside the M-ball"},
                     [](RunConfig& c, const std::string& v) { c.picard.waive_ball_check = parse_bool(v); },
                     [](const RunConfig& c) { return std::string(c.picard.waive_ball_check ? "true" : "false"); },
                     [](const RunConfig&) { return std::optional<std::string>(); }});
        t.push_back(integer_in("picard", "metric_stride", "slices skipped by the metric", &RunConfig::picard,
                               &PicardConfig::metric_stride,
                               [](const RunConfig& c) { return when(c.picard.metric_stride < 1, "must be >= 1"); }));
        t.push_back(real("picard", "T_floor", "smallest T tried by the certificate scan", &RunConfig::T_floor,
                         [](const RunConfig& c) { return when(!(c.T_floor > 0), "must be > 0"); }));
        t.push_back(integer<int>("picard", "scan_points", "certificate scan points", &RunConfig::scan_points,
                                 [](const RunConfig& c) { return when(c.scan_points < 2, "must be >= 2"); }));

        t.push_back(integer_in("particles", "N", "particle count", &RunConfig::particles, &ParticleConfig::N,
                               [](const RunConfig& c) {
                                   if (c.particles.N < 10000) return when(true, "must be >= 1e4");
                                   return when(c.particles.drift == DriftMode::self_consistent &&
                                                   c.particles.N < 50L * c.particles.n_bins,
                                               "must be >= 50 n_bins in self_consistent mode");
                               }));
        t.push_back(real_in("particles", "dt", "particle time step", &RunConfig::particles, &ParticleConfig::dt,
                            [](const RunConfig& c) { return when(!(c.particles.dt > 0), "must be > 0"); }));
        t.push_back(integer_in("particles", "steps", "particle steps", &RunConfig::particles, &ParticleConfig::steps,
                               [](const RunConfig& c) { return when(c.particles.steps < 0, "must be >= 0"); }));
        t.push_back(integer_in("particles", "n_bins", "conditional-moment and histogram bins", &RunConfig::particles,
                               &ParticleConfig::n_bins, [](const RunConfig& c) { return when(c.particles.n_bins < 2, "must be >= 2"); }));
        t.push_back({{"particles", "drift", "self_consistent or field_coupled"},
                     [](RunConfig& c, const std::string& v) {
                         if (v == "self_consistent") c.particles.drift = DriftMode::self_consistent;
                         else if (v == "field_coupled") c.particles.drift = DriftMode::field_coupled;
                         else throw std::string("expected self_consistent or field_coupled, got '" + v + "'");
                     },
                     [](const RunConfig& c) { return to_string(c.particles.drift); },
                     [](const RunConfig&) { return std::optional<std::string>(); }});
        t.push_back(real_in("particles", "smoothing", "Gaussian smoothing width in bins", &RunConfig::particles,
                            &ParticleConfig::smoothing,
                            [](const RunConfig& c) { return when(!(c.particles.smoothing >= 0), "must be >= 0"); }));
        t.push_back(integer_in("particles", "stats_every", "steps between statistics rows", &RunConfig::particles,
                               &ParticleConfig::stats_every,
                               [](const RunConfig& c) { return when(c.particles.stats_every < 1, "must be >= 1"); }));
        t.push_back(real_in("particles", "u_cut", "rejection cutoff for initial velocities (0: grid cutoff)",
                            &RunConfig::particles, &ParticleConfig::u_cut,
                            [](const RunConfig& c) { return when(!(c.particles.u_cut >= 0), "must be >= 0"); }));
        return t;
    }();
    return table;
}

std::string full_name(const KeyInfo& k) { return k.section.empty() ? k.key : k.section + "." + k.key; }

std::string label(const KeyInfo& k) { return k.section.empty() ? k.key : "[" + k.section + "] " + k.key; }

const Entry* find_entry(const std::string& name) {
    const Entry* hit = nullptr;
    for (const auto& e : entries()) {
        if (full_name(e.info) == name) return &e;
        if (e.info.key == name) hit = hit ? nullptr : &e;
    }
    return hit;
}

}  // namespace

RunConfig::RunConfig() {
    grid = PhaseGrid{128, 129, 8.0};
    picard.T = 0.01;
}

const std::vector<KeyInfo>& config_keys() {
    static const std::vector<KeyInfo> keys = [] {
        std::vector<KeyInfo> k;
        for (const auto& e : entries()) k.push_back(e.info);
        return k;
    }();
    return keys;
}

RunConfig build_config(const ConfigEcho& file_values, const std::map<std::string, std::string>& overrides) {
    RunConfig c;
    std::vector<std::string> problems;
    std::set<const Entry*> unparsed;
    const auto apply = [&](const std::string& name, const std::string& value, const char* origin) {
        const Entry* e = find_entry(name);
        if (!e) {
            problems.push_back(std::string(origin) + " " + name + ": unknown key");
            return;
        }
        try {
            e->set(c, value);
        } catch (const std::string& msg) {
            problems.push_back(label(e->info) + ": " + msg);
            unparsed.insert(e);
        }
    };
    for (const auto& [k, v] : file_values) apply(k, v, "config");
    for (const auto& [k, v] : overrides) apply(k, v, "flag");
    for (const auto& e : entries())
        if (!unparsed.count(&e))
            if (auto msg = e.check(c)) problems.push_back(label(e.info) + ": " + *msg);
    if (!problems.empty()) {
        std::string all = "invalid configuration (" + std::to_string(problems.size()) + " problem" +
                          (problems.size() > 1 ? "s" : "") + "):";
        for (const auto& p : problems) all += "\n  " + p;
        throw InvalidInput(all);
    }
    return c;
}

ConfigEcho parse_ini(std::istream& is) {
    boost::property_tree::ptree pt;
    try {
        boost::property_tree::read_ini(is, pt);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw InvalidInput(std::string("config: ") + e.what());
    }
    ConfigEcho out;
    static const std::set<std::string> sections{"weight", "grid", "model", "picard", "particles"};
    for (const auto& [name, node] : pt) {
        if (node.empty() && !(sections.count(name) && node.data().empty())) {
            out[name] = node.data();
            continue;
        }
        for (const auto& [key, leaf] : node) out[name + "." + key] = leaf.data();
    }
    return out;
}

ConfigEcho read_ini(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw InvalidInput("cannot read config " + path);
    return parse_ini(is);
}

ConfigEcho echo(const RunConfig& c) {
    ConfigEcho out;
    for (const auto& e : entries()) out[full_name(e.info)] = e.get(c);
    return out;
}

std::uint64_t substream_seed(const RunConfig& c, const char* name) { return splitmix64(c.seed ^ stream_id(name)); }

}  // namespace kinvfp::cli
