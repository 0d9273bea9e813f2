#include "kinvfp/feynman_kac.hpp"

#include "kinvfp/error.hpp"
#include "kinvfp/parallel.hpp"
#include "kinvfp/rng.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

namespace kinvfp {

namespace {

double wrap(double x) { return x - std::floor(x); }

struct PathRunner {
    const ProbeRequest& req;
    const FkProblem& prob;
    int n;
    double h;

    double operator()(CounterRng rng, double sign) const {
        const double sq = prob.sigma * std::sqrt(h);
        double X = req.x, U = req.u, I = 0.0, S = 0.0;
        for (int k = 0; k < n; ++k) {
            const double tk = req.t - k * h;
            const double xi = sign * rng.normal();
            const double Xn = X - U * h;
            const double Un = U + prob.phi(tk, wrap(X), U) * h + sq * xi;
            if (prob.c || prob.F) {
                const double tm = req.t - (k + 0.5) * h, xm = wrap(0.5 * (X + Xn)), um = 0.5 * (U + Un);
                const double cm = prob.c ? prob.c(tm, xm, um) : 0.0;
                if (prob.F) S += prob.F(tm, xm, um) * std::exp(I + 0.5 * cm * h) * h;
                I += cm * h;
            }
            X = Xn;
            U = Un;
        }
        return prob.f0(wrap(X), U) * std::exp(I) + S;
    }
};

}  // namespace

FkEstimate fk_estimate(const ProbeRequest& req, const FkProblem& prob) {
    require(req.paths >= 1000, "fk_estimate: paths must be >= 1000");
    require(req.dt_sde > 0.0, "fk_estimate: dt_sde must be positive");
    require(req.t >= 0.0, "fk_estimate: t must be non-negative");
    require(!req.antithetic || req.paths % 2 == 0, "fk_estimate: antithetic pairing needs an even path count");
    require(static_cast<bool>(prob.phi) && static_cast<bool>(prob.f0), "fk_estimate: phi and f0 are required");
    require(prob.sigma >= 0.0, "fk_estimate: sigma must be non-negative");

    const int n = req.t > 0.0 ? std::max(1, static_cast<int>(std::ceil(req.t / req.dt_sde - 1e-9))) : 0;
    const double h = n > 0 ? req.t / n : 0.0;
    const PathRunner run{req, prob, n, h};
    const int samples = req.antithetic ? req.paths / 2 : req.paths;

    std::vector<double> value(samples);
    std::vector<char> bad(samples, 0);
#pragma omp parallel for schedule(static) num_threads(threads())
    for (int i = 0; i < samples; ++i) {
        double v;
        if (req.antithetic) {
            const double a = run(CounterRng(req.seed, i), 1.0), b = run(CounterRng(req.seed, i), -1.0);
            v = 0.5 * (a + b);
        } else {
            v = run(CounterRng(req.seed, i), 1.0);
        }
        if (!std::isfinite(v)) {
            bad[i] = 1;
            v = 0.0;
        }
        value[i] = v;
    }

    FkEstimate est;
    est.flagged = static_cast<int>(std::count(bad.begin(), bad.end(), 1)) * (req.antithetic ? 2 : 1);
    if (est.flagged > 0.001 * req.paths)
        throw NumericalAbort("fk_estimate: " + std::to_string(est.flagged) + " of " + std::to_string(req.paths) +
                             " paths have a non-finite weight");
    std::vector<double> kept;
    kept.reserve(samples);
    for (int i = 0; i < samples; ++i)
        if (!bad[i]) kept.push_back(value[i]);
    est.samples = static_cast<int>(kept.size());
    est.mean = pairwise_sum(kept) / est.samples;
    if (est.samples > 1) {
        std::vector<double> dev(kept.size());
        for (std::size_t i = 0; i < kept.size(); ++i) dev[i] = (kept[i] - est.mean) * (kept[i] - est.mean);
        est.stderr_ = std::sqrt(pairwise_sum(dev) / (est.samples - 1) / est.samples);
    }
    return est;
}

FkProblem fk_problem(const LinearStepper& stepper, InitialFunction f0, int refine) {
    auto smp = stepper.sampler(refine);
    FkProblem p;
    p.phi = [&stepper, smp](double t, double x, double u) { return stepper.drift(*smp, t, x, u); };
    p.c = [&stepper, smp](double t, double x, double u) { return stepper.reaction(*smp, t, x, u); };
    if (const double F = stepper.options().source; F != 0.0) p.F = [F](double, double, double) { return F; };
    p.f0 = std::move(f0);
    p.sigma = stepper.params().sigma;
    return p;
}

bool OracleReport::ok() const {
    return !probes.empty() && std::all_of(probes.begin(), probes.end(), [](const ProbeResult& p) { return p.pass; });
}

double OracleReport::max_abs_z() const {
    double m = 0.0;
    for (const auto& p : probes) m = std::max(m, std::abs(p.z));
    return m;
}

OracleReport oracle_compare(const Trajectory& tr, const LinearStepper& stepper, const InitialFunction& f0,
                            const std::vector<ProbePoint>& probes, const OracleOptions& opts) {
    require(!tr.snapshots.empty(), "oracle_compare: empty trajectory");
    const PhaseField& fin = tr.snapshots.back();
    const double T = fin.time();
    const double ucut = stepper.grid().u_max - 2.0 * stepper.params().sigma * std::sqrt(T);
    for (const auto& p : probes) {
        require(p.x >= 0.0 && p.x < 1.0, "oracle_compare: probe x outside [0,1)");
        require(std::abs(p.u) <= ucut, "oracle_compare: probe u=" + std::to_string(p.u) +
                                           " closer to the velocity cutoff than 2 sigma sqrt(T)");
    }
    const auto prob = fk_problem(stepper, f0, opts.refine);
    OracleReport rep;
    rep.scale = fin.sup_norm();
    for (std::size_t k = 0; k < probes.size(); ++k) {
        ProbeRequest req{T, probes[k].x, probes[k].u, opts.paths, opts.dt_sde, splitmix64(opts.seed + k),
                         opts.antithetic};
        ProbeResult r;
        r.at = probes[k];
        r.t = T;
        r.pde = interpolate_field(fin, probes[k].x, probes[k].u);
        r.mc = fk_estimate(req, prob);
        r.diff = r.pde - r.mc.mean;
        r.z = r.mc.stderr_ > 0.0 ? r.diff / r.mc.stderr_ : (r.diff == 0.0 ? 0.0 : INFINITY);
        r.budget = 3.0 * r.mc.stderr_ + opts.eps_disc * rep.scale;
        r.pass = std::abs(r.diff) <= r.budget;
        rep.probes.push_back(r);
    }
    return rep;
}

void write_oracle_report(std::ostream& os, const OracleReport& r) {
    os << "scale " << r.scale << "\n";
    os << "# x u t pde mc_mean mc_stderr z budget pass\n";
    for (const auto& p : r.probes)
        os << p.at.x << ' ' << p.at.u << ' ' << p.t << ' ' << p.pde << ' ' << p.mc.mean << ' ' << p.mc.stderr_
           << ' ' << p.z << ' ' << p.budget << ' ' << (p.pass ? "pass" : "FAIL") << "\n";
}

}  // namespace kinvfp
