#include "commands.hpp"

#include "kinvfp/analytic_norms.hpp"
#include "kinvfp/certificates.hpp"
#include "kinvfp/error.hpp"
#include "kinvfp/feynman_kac.hpp"
#include "kinvfp/invariants.hpp"
#include "kinvfp/parallel.hpp"
#include "kinvfp/particles.hpp"
#include "kinvfp/picard.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>

#ifndef KINVFP_VERSION
#define KINVFP_VERSION "unknown"
#endif

namespace kinvfp::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::uint64_t fnv1a_file(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    if (!is) throw InvalidInput("cannot read " + p.string());
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[1 << 16];
    while (is) {
        is.read(buf, sizeof(buf));
        for (std::streamsize i = 0; i < is.gcount(); ++i)
            h = (h ^ static_cast<unsigned char>(buf[i])) * 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names{"certify", "solve", "oracle-check", "norms",
                                                "particles", "verify", "report"};
    return names;
}

namespace {

std::string read_text(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    if (!is) throw InvalidInput("cannot read " + p.string());
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

void write_text(const fs::path& p, const std::string& s) {
    fs::create_directories(p.parent_path());
    std::ofstream os(p, std::ios::binary);
    if (!os) throw InvalidInput("cannot write " + p.string());
    os << s;
}

json config_json(const RunConfig& c) {
    json j = json::object();
    for (const auto& [k, v] : echo(c)) j[k] = v;
    return j;
}

// Outputs of one command, written under the run directory.
struct Session {
    std::string command;
    fs::path dir;
    std::vector<std::string> files;
    json info = json::object();
    std::vector<std::string> warnings;

    fs::path path(const std::string& rel) const { return dir / rel; }
    void put(const std::string& rel, const std::string& text) {
        write_text(path(rel), text);
        files.push_back(rel);
    }
};

fs::path manifest_path(const CommandOptions& opt) {
    return opt.manifest.empty() ? opt.out / "manifest.json" : opt.manifest;
}

json load_manifest(const fs::path& p) {
    std::ifstream is(p);
    if (!is) throw InvalidInput("manifest not found: " + p.string());
    try {
        return json::parse(is);
    } catch (const json::exception& e) {
        throw InvalidInput("manifest " + p.string() + ": " + e.what());
    }
}

json certificate_json(const CertificationAttempt& a) {
    const auto& r = a.report;
    json j;
    j["certified"] = r.certified;
    j["T"] = r.T;
    j["M"] = r.M;
    j["K"] = r.K;
    j["C0"] = a.C0;
    j["C0_measured"] = a.C0_measured;
    j["binding"] = a.binding;
    j["failing"] = r.failing();
    j["kappa0"] = r.kappa.kappa0;
    j["kappa1"] = r.kappa.kappa1;
    j["gamma0"] = r.gammas.gamma0;
    j["gamma1"] = r.gammas.gamma1;
    j["gamma1_hat"] = r.gammas.gamma1_hat;
    j["g0_H"] = r.g0_H;
    j["g0_Htilde"] = r.g0_Htilde;
    json conds = json::array();
    for (const auto& c : r.conditions)
        conds.push_back({{"name", c.name}, {"lhs", c.lhs}, {"rhs", c.rhs}, {"holds", c.holds}, {"note", c.note}});
    j["conditions"] = conds;
    json scan = json::array();
    for (const auto& [T, ok] : a.scan) scan.push_back({T, ok});
    j["scan"] = scan;
    return j;
}

// Writes the manifest: merges with an existing one for the same configuration,
// otherwise starts over.
void commit(const Session& s, const RunConfig& cfg, double seconds, const std::string& status, const json* certificate) {
    const fs::path mp = s.dir / "manifest.json";
    json m;
    const json cj = config_json(cfg);
    if (fs::exists(mp)) {
        try {
            json old = load_manifest(mp);
            if (old.value("config", json()) == cj) m = std::move(old);
        } catch (const InvalidInput&) {
        }
    }
    if (m.is_null()) {
        m["format"] = "kinvfp-manifest v1";
        m["config"] = cj;
        m["commands"] = json::object();
        m["outputs"] = json::array();
    }
    m["version"] = KINVFP_VERSION;
    m["seed"] = cfg.seed;
    m["seeds"] = {{"oracle", substream_seed(cfg, "oracle")}, {"particles", substream_seed(cfg, "particles")}};
    if (certificate) {
        m["certificate"] = *certificate;
        m["certified"] = (*certificate)["certified"];
    } else if (!m.contains("certified")) {
        m["certified"] = false;
    }
    json outs = json::array();
    for (const auto& o : m["outputs"])
        if (o["command"] != s.command) outs.push_back(o);
    for (const auto& f : s.files)
        outs.push_back({{"path", f}, {"fnv1a64", hex64(fnv1a_file(s.path(f)))}, {"command", s.command}});
    m["outputs"] = outs;
    json c = s.info;
    c["status"] = status;
    c["wall_seconds"] = seconds;
    c["threads"] = threads();
    c["warnings"] = s.warnings;
    c["files"] = s.files;
    m["commands"][s.command] = c;
    write_text(mp, m.dump(2) + "\n");
}

PhaseField weighted_initial(const RunConfig& cfg, const WeightModel& w) {
    return weight_transform(make_initial_data(cfg.data, cfg.grid), w, TransformDirection::to_weighted);
}

CertificationAttempt attempt_certificate(const RunConfig& cfg) {
    CertifyOptions o;
    o.lambda0 = cfg.picard.lambda0;
    o.A = cfg.picard.A;
    o.T = cfg.picard.T;
    o.T_floor = cfg.T_floor;
    o.scan_points = cfg.scan_points;
    return certify(cfg.data, cfg.grid, cfg.params, o);
}

// Picard configuration with the certificate horizon when T = 0.
PicardConfig effective_picard(const RunConfig& cfg, const CertificationAttempt& cert) {
    PicardConfig p = cfg.picard;
    if (p.T == 0.0) {
        if (!cert.report.certified)
            throw InvalidInput("[picard] T = 0 asks for the certificate horizon, but no certificate exists (binding: " +
                               cert.binding + "); set [picard] T");
        p.T = cert.report.T;
        p.M = cert.report.M;
        p.K = cert.report.K;
    }
    return p;
}

std::string snapshot_name(std::size_t n) {
    std::ostringstream ss;
    ss << "solve/g_" << std::setw(5) << std::setfill('0') << n << ".txt";
    return ss.str();
}

std::string norms_csv(const Trajectory& tr, const PicardConfig& p) {
    std::ostringstream os;
    os << "t,lambda,H,Htilde,sup\n";
    for (const auto& s : tr.snapshots) {
        const double lam = p.lambda_at(s.time());
        const auto nf = norm_family(build_stack(s, p.A), lam);
        os << format_double(s.time()) << ',' << format_double(lam) << ',' << format_double(nf.H) << ','
           << format_double(nf.Htilde) << ',' << format_double(s.sup_norm()) << '\n';
    }
    return os.str();
}

std::string invariants_csv(const Trajectory& tr, const RunConfig& cfg, const PicardConfig& p, const WeightModel& w,
                           const CoefficientFields& coeffs, InvariantReport* out = nullptr) {
    auto inv = moment_residuals(tr, cfg.params, &w);
    const auto gam = gamma_constants(w, p.lambda0, p.A);
    attach_gronwall(inv, gronwall_diagnostic(tr, coeffs, p, cfg.params, gam));
    std::ostringstream os;
    os << std::setprecision(17);
    write_invariants_csv(os, inv);
    if (out) *out = inv;
    return os.str();
}

Trajectory load_solution(const json& m, const fs::path& dir) {
    Trajectory tr;
    for (const auto& rel : m["commands"]["solve"]["snapshots"]) {
        auto s = load_snapshot((dir / rel.get<std::string>()).string());
        tr.step_times.push_back(s.time());
        tr.sup_norms.push_back(s.sup_norm());
        tr.snapshots.push_back(std::move(s));
    }
    if (tr.snapshots.empty()) throw InvalidInput("manifest lists no solve snapshots");
    return tr;
}

PicardConfig picard_from_manifest(const RunConfig& cfg, const json& m) {
    PicardConfig p = cfg.picard;
    const auto& s = m["commands"]["solve"];
    p.T = s["T"].get<double>();
    p.M = s["M"].get<double>();
    p.K = s["K"].get<double>();
    return p;
}

// ---- commands ----

int cmd_certify(const RunConfig& cfg, Session& s, json& cert_out, std::ostream& log) {
    const auto a = attempt_certificate(cfg);
    std::ostringstream os;
    os << "C0 " << format_double(a.C0) << (a.C0_measured ? " (measured)" : "") << "\n";
    write_certificate(os, a.report);
    os << "binding " << (a.binding.empty() ? "-" : a.binding) << "\n";
    os << "scan T certified\n";
    for (const auto& [T, ok] : a.scan) os << format_double(T) << ' ' << (ok ? 1 : 0) << '\n';
    s.put("certificate.txt", os.str());
    cert_out = certificate_json(a);
    if (!a.report.certified) s.warnings.push_back("uncertified: " + a.binding);
    log << "certify: " << (a.report.certified ? "certified" : "not certified") << " at T = "
        << format_double(a.report.T);
    if (!a.report.certified) log << " (binding condition " << a.binding << ")";
    log << "\n";
    return 0;
}

int cmd_solve(const RunConfig& cfg, Session& s, json& cert_out, std::ostream& log) {
    const auto cert = attempt_certificate(cfg);
    cert_out = certificate_json(cert);
    const auto p = effective_picard(cfg, cert);
    const auto w = make_weight(cfg.s, cfg.params.beta);
    const auto gam = gamma_constants(w, p.lambda0, p.A);
    const auto res = iterate(weighted_initial(cfg, w), p, cfg.params, w, &gam);
    if (res.status == PicardStatus::diverged)
        throw NumericalAbort("solve: Picard iteration diverged after " + std::to_string(res.iterations) + " iterations");

    json snaps = json::array();
    for (std::size_t n = 0; n < res.solution.snapshots.size(); ++n) {
        std::ostringstream os;
        write_snapshot(os, res.solution.snapshots[n]);
        s.put(snapshot_name(n), os.str());
        snaps.push_back(snapshot_name(n));
    }
    std::ostringstream pl;
    write_picard_log(pl, res);
    s.put("solve/picard.csv", pl.str());
    s.put("solve/norms.csv", norms_csv(res.solution, p));
    InvariantReport inv;
    s.put("solve/invariants.csv", invariants_csv(res.solution, cfg, p, w, res.coeffs, &inv));

    s.info["snapshots"] = snaps;
    s.info["T"] = p.T;
    s.info["M"] = p.M;
    s.info["K"] = p.K;
    s.info["picard_status"] = to_string(res.status);
    s.info["iterations"] = res.iterations;
    s.info["residual_fp"] = res.residual_fp;
    s.info["tol"] = res.tol;
    s.info["max_mass_uniformity"] = inv.max_mass_uniformity();
    s.info["max_incompressibility"] = inv.max_incompressibility();
    s.info["total_mass_drift"] = inv.total_mass_drift;
    if (res.status == PicardStatus::max_iter) s.warnings.push_back("Picard stopped at max_iter");

    log << "solve: " << to_string(res.status) << " after " << res.iterations << " iterations, T = "
        << format_double(p.T) << ", max|rho-1| = " << inv.max_mass_uniformity()
        << ", max|dxV| = " << inv.max_incompressibility() << "\n";
    if (!cert.report.certified) {
        s.warnings.push_back("uncertified run (binding " + cert.binding + ")");
        log << "warning: run is not covered by an existence certificate (binding condition " << cert.binding << ")\n";
        return 0;
    }
    const auto hu = check_Hu(make_initial_data(cfg.data, cfg.grid), 1e-10);
    if (hu.pass() && (inv.max_mass_uniformity() > cfg.tol_run || inv.max_incompressibility() > cfg.tol_run))
        return 2;
    return 0;
}

int cmd_oracle(const RunConfig& cfg, Session& s, std::ostream& log) {
    const auto w = make_weight(cfg.s, cfg.params.beta);
    const auto g0 = weighted_initial(cfg, w);
    Trajectory one;
    one.snapshots.push_back(g0);
    auto coeffs = source_fields(one, w, cfg.params);
    coeffs = CoefficientFields::frozen(coeffs.Q[0], coeffs.H.empty() ? std::vector<double>{} : coeffs.H[0]);
    const double T = cfg.picard.T > 0.0 ? cfg.picard.T : 0.01;
    LinearStepper st(cfg.grid, cfg.params, w, coeffs);
    const auto tr = solve_linear(g0, st, T, cfg.picard.nt, cfg.picard.nt);
    const double reach = std::min(2.0, cfg.grid.u_max - 2.0 * cfg.params.sigma * std::sqrt(T) - 0.5);
    std::vector<ProbePoint> probes;
    for (int k = 0; k < 8; ++k) probes.push_back({(k + 0.5) / 8.0, -reach + 2.0 * reach * k / 7.0});
    OracleOptions o;
    o.paths = cfg.oracle_paths;
    o.dt_sde = cfg.oracle_dt_sde;
    o.seed = substream_seed(cfg, "oracle");
    const auto& data = cfg.data;
    const auto rep = oracle_compare(
        tr, st, [&w, &data](double x, double u) { return w.omega(u) * initial_value(data, x, u); }, probes, o);
    std::ostringstream os;
    write_oracle_report(os, rep);
    s.put("oracle/report.txt", os.str());
    s.info["pass"] = rep.ok();
    s.info["max_abs_z"] = rep.max_abs_z();
    s.info["T"] = T;
    log << "oracle-check: " << (rep.ok() ? "pass" : "FAIL") << ", max |z| = " << rep.max_abs_z() << "\n";
    return rep.ok() ? 0 : 2;
}

int cmd_norms(const RunConfig& cfg, const CommandOptions& opt, Session& s, std::ostream& log) {
    require(!opt.snapshot.empty(), "norms: --snapshot is required");
    const auto f = load_snapshot(opt.snapshot.string());
    const double lam = opt.lambda >= 0.0 ? opt.lambda : cfg.picard.lambda0;
    const auto nf = norm_family(build_stack(f, cfg.picard.A), lam);
    std::ostringstream os;
    write_ladder(os, nf);
    s.put("norms/" + opt.snapshot.stem().string() + "_ladder.txt", os.str());
    log << os.str();
    return 0;
}

int cmd_particles(const RunConfig& cfg, Session& s, json& cert_out, std::ostream& log) {
    const auto& pc = cfg.particles;
    const double u_cut = pc.u_cut > 0.0 ? pc.u_cut : cfg.grid.u_max;
    auto e = init_ensemble(static_cast<std::size_t>(pc.N), cfg.data, substream_seed(cfg, "particles"), u_cut);
    {
        std::ostringstream os;
        write_ensemble(os, e);
        s.put("particles/ensemble_initial.txt", os.str());
    }
    DriftSpec d;
    d.mode = pc.drift;
    d.n_bins = pc.n_bins;
    d.smoothing = pc.smoothing;
    PicardResult pde;
    std::unique_ptr<WeightModel> w;
    if (pc.drift == DriftMode::field_coupled) {
        const auto cert = attempt_certificate(cfg);
        cert_out = certificate_json(cert);
        const auto p = effective_picard(cfg, cert);
        require(pc.steps * pc.dt <= p.T * (1 + 1e-12),
                "particles: steps * dt exceeds the PDE horizon T = " + format_double(p.T));
        w = std::make_unique<WeightModel>(make_weight(cfg.s, cfg.params.beta));
        pde = iterate(weighted_initial(cfg, *w), p, cfg.params, *w);
        d.fields = &pde.coeffs;
        if (!cert.report.certified) s.warnings.push_back("field coupled to an uncertified PDE run");
    }
    std::vector<ParticleStatsRow> rows{particle_stats(e, pc.n_bins)};
    bool outside = cfg.params.sigma == 0.0;
    for (int done = 0; done < pc.steps;) {
        const int n = std::min(pc.stats_every, pc.steps - done);
        outside |= step_trajectory(e, d, cfg.params, pc.dt, n).outside_hypothesis;
        done += n;
        rows.push_back(particle_stats(e, pc.n_bins));
    }
    if (outside) s.warnings.push_back("sigma = 0: outside the nondegenerate-noise hypothesis");
    std::ostringstream st, fin;
    write_particle_stats(st, rows);
    s.put("particles/stats.csv", st.str());
    write_ensemble(fin, e);
    s.put("particles/ensemble_final.txt", fin.str());

    const auto& last = rows.back();
    s.info["drift"] = to_string(pc.drift);
    s.info["outside_hypothesis"] = outside;
    s.info["final_chi2"] = last.uniformity.chi2;
    s.info["final_chi2_q99"] = last.uniformity.chi2_q99;
    s.info["final_ks"] = last.uniformity.ks;
    s.info["final_var_u"] = last.velocity.var;
    if (pc.drift == DriftMode::field_coupled) {
        const auto f = weight_transform(pde.solution.snapshots.back(), *w, TransformDirection::to_density);
        const int nbx = std::min(16, cfg.grid.nx);
        int nbu = 16;
        while ((cfg.grid.nu - 1) % nbu) --nbu;
        const double tv = histogram_tv(e, f, nbx, nbu);
        s.info["tv_to_pde"] = tv;
        log << "particles: TV distance to the PDE density " << tv << "\n";
    }
    log << "particles: t = " << format_double(e.t) << ", chi2 = " << last.uniformity.chi2 << " (q99 "
        << last.uniformity.chi2_q99 << "), KS = " << last.uniformity.ks << ", var u = " << last.velocity.var << "\n";
    return 0;
}

int cmd_verify(const CommandOptions& opt, std::ostream& log) {
    const fs::path mp = manifest_path(opt);
    const json m = load_manifest(mp);
    const fs::path dir = mp.parent_path();
    std::vector<std::string> problems;
    for (const auto& o : m.value("outputs", json::array())) {
        const auto rel = o["path"].get<std::string>();
        if (!fs::exists(dir / rel)) {
            problems.push_back("manifest completeness: " + rel + " is missing");
            continue;
        }
        if (hex64(fnv1a_file(dir / rel)) != o["fnv1a64"].get<std::string>())
            problems.push_back("file integrity: " + rel + " does not match its recorded hash");
    }
    ConfigEcho ce;
    for (const auto& [k, v] : m["config"].items()) ce[k] = v.get<std::string>();
    const RunConfig cfg = build_config(ce, {});
    if (m["commands"].contains("solve")) {
        try {
            const auto tr = load_solution(m, dir);
            const auto p = picard_from_manifest(cfg, m);
            const auto w = make_weight(cfg.s, cfg.params.beta);
            const auto coeffs = source_fields(tr, w, cfg.params);
            const auto fresh = invariants_csv(tr, cfg, p, w, coeffs);
            const auto stored = read_text(dir / "solve/invariants.csv");
            if (fresh != stored) {
                static const char* cols[] = {"t", "mass_uniformity", "incompressibility", "continuity_residual",
                                             "second_moment_residual", "gronwall_slack"};
                std::istringstream a(fresh), b(stored);
                std::string la, lb;
                std::set<std::string> bad;
                while (std::getline(a, la) && std::getline(b, lb)) {
                    std::istringstream ca(la), cb(lb);
                    std::string x, y;
                    for (int c = 0; c < 6 && std::getline(ca, x, ',') && std::getline(cb, y, ','); ++c)
                        if (x != y) bad.insert(cols[c]);
                }
                std::string names;
                for (const auto& n : bad) names += (names.empty() ? "" : ", ") + n;
                problems.push_back("invariants recomputed from the snapshots differ (" +
                                   (names.empty() ? std::string("row count") : names) + ")");
            }
            if (norms_csv(tr, p) != read_text(dir / "solve/norms.csv"))
                problems.push_back("norm time series recomputed from the snapshots differ");
        } catch (const InvalidInput& e) {
            problems.push_back(std::string("solve artifacts unreadable: ") + e.what());
        }
    }
    if (m["commands"].contains("particles")) {
        for (const char* rel : {"particles/ensemble_initial.txt", "particles/ensemble_final.txt"}) {
            try {
                const auto e = load_ensemble((dir / rel).string());
                for (double x : e.x)
                    if (!(x >= 0.0 && x < 1.0)) throw InvalidInput("position outside [0,1)");
            } catch (const InvalidInput& ex) {
                problems.push_back(std::string("torus wrap: ") + rel + ": " + ex.what());
            }
        }
    }
    if (!problems.empty()) {
        std::string all = "verify failed:";
        for (const auto& p : problems) all += "\n  " + p;
        throw AssertionFailure(all);
    }
    log << "verify: " << m["outputs"].size() << " files match the manifest; invariants reproduce\n";
    return 0;
}

int cmd_report(const CommandOptions& opt, Session& s, RunConfig& cfg_out, std::ostream& log) {
    const fs::path mp = manifest_path(opt);
    const json m = load_manifest(mp);
    const fs::path dir = mp.parent_path();
    s.dir = dir;
    ConfigEcho ce;
    for (const auto& [k, v] : m["config"].items()) ce[k] = v.get<std::string>();
    cfg_out = build_config(ce, {});
    const auto& cfg = cfg_out;
    std::ostringstream index;
    index << "file,columns\n";
    const auto add = [&](const std::string& rel, const std::string& text) {
        s.put(rel, text);
        index << rel << ",\"" << text.substr(0, text.find('\n')) << "\"\n";
    };
    if (m["commands"].contains("solve")) {
        const auto tr = load_solution(m, dir);
        const auto w = make_weight(cfg.s, cfg.params.beta);
        for (const auto& [name, snap] : {std::pair{"initial", &tr.snapshots.front()}, {"final", &tr.snapshots.back()}}) {
            const auto f = weight_transform(*snap, w, TransformDirection::to_density);
            const auto mo = moments(f);
            std::ostringstream os;
            os << "x,rho,V,S,P\n";
            for (int i = 0; i < cfg.grid.nx; ++i)
                os << format_double(f.grid().x(i)) << ',' << format_double(mo.rho[i]) << ','
                   << format_double(mo.V[i]) << ',' << format_double(mo.S[i]) << ',' << format_double(mo.P[i])
                   << '\n';
            add(std::string("report/moments_") + name + ".csv", os.str());
        }
        add("report/norms.csv", read_text(dir / "solve/norms.csv"));
        add("report/invariants.csv", read_text(dir / "solve/invariants.csv"));
        add("report/picard.csv", read_text(dir / "solve/picard.csv"));
    }
    if (m["commands"].contains("particles")) add("report/particle_stats.csv", read_text(dir / "particles/stats.csv"));
    if (m.contains("certificate")) {
        std::ostringstream os;
        os << "T,certified\n";
        for (const auto& row : m["certificate"]["scan"])
            os << format_double(row[0].get<double>()) << ',' << (row[1].get<bool>() ? 1 : 0) << '\n';
        add("report/certificate_scan.csv", os.str());
    }
    s.put("report/index.csv", index.str());
    log << "report: " << s.files.size() << " CSV files under " << (dir / "report").string() << "\n";
    return 0;
}

}  // namespace

ConfigEcho manifest_config(const fs::path& manifest) {
    const json m = load_manifest(manifest);
    require(m.contains("config") && m["config"].is_object(), "manifest " + manifest.string() + " has no config");
    ConfigEcho ce;
    for (const auto& [k, v] : m["config"].items()) ce[k] = v.get<std::string>();
    return ce;
}

int run_command(const std::string& name, const RunConfig& cfg, const CommandOptions& opt, std::ostream& log) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto seconds = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };
    if (name == "verify") return cmd_verify(opt, log);

    Session s;
    s.command = name;
    s.dir = opt.out;
    json cert;
    int rc = 0;
    RunConfig used = cfg;
    if (name == "certify") rc = cmd_certify(cfg, s, cert, log);
    else if (name == "solve") rc = cmd_solve(cfg, s, cert, log);
    else if (name == "oracle-check") rc = cmd_oracle(cfg, s, log);
    else if (name == "norms") rc = cmd_norms(cfg, opt, s, log);
    else if (name == "particles") rc = cmd_particles(cfg, s, cert, log);
    else if (name == "report") rc = cmd_report(opt, s, used, log);
    else throw InvalidInput("unknown command '" + name + "'");
    commit(s, used, seconds(), rc == 0 ? "ok" : "failed", cert.is_null() ? nullptr : &cert);
    if (rc == 2 && name == "solve")
        throw AssertionFailure("solve: certified run violates the incompressibility tolerance tol_run");
    if (rc == 2) throw AssertionFailure(name + ": check failed (see " + (s.dir / "manifest.json").string() + ")");
    return rc;
}

}  // namespace kinvfp::cli
