#include "kinvfp/invariants.hpp"

#include "kinvfp/error.hpp"
#include "kinvfp/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace kinvfp {

namespace {

double sup_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

std::vector<double> dx(const Spectral1d& sp, const std::vector<double>& v) {
    std::vector<double> out(v.size());
    sp.derivative(v.data(), 1, out.data(), 1, 1);
    return out;
}

// Weights of the second-order derivative at times[i] from three neighbouring
// slices (one-sided at the ends).
struct Stencil {
    std::size_t idx[3];
    double w[3];
    int n = 3;
};

Stencil time_stencil(const std::vector<double>& t, std::size_t i) {
    Stencil s;
    const std::size_t n = t.size();
    if (n == 2) {
        s.n = 2;
        s.idx[0] = 0;
        s.idx[1] = 1;
        s.w[0] = -1.0 / (t[1] - t[0]);
        s.w[1] = -s.w[0];
        return s;
    }
    const std::size_t c = i == 0 ? 1 : (i == n - 1 ? n - 2 : i);
    const std::size_t a = c - 1, b = c + 1;
    s.idx[0] = a;
    s.idx[1] = c;
    s.idx[2] = b;
    const double x = t[i], x0 = t[a], x1 = t[c], x2 = t[b];
    s.w[0] = (2 * x - x1 - x2) / ((x0 - x1) * (x0 - x2));
    s.w[1] = (2 * x - x0 - x2) / ((x1 - x0) * (x1 - x2));
    s.w[2] = (2 * x - x0 - x1) / ((x2 - x0) * (x2 - x1));
    return s;
}

std::vector<double> time_derivative(const std::vector<std::vector<double>>& y, const std::vector<double>& t,
                                    std::size_t i) {
    const auto s = time_stencil(t, i);
    std::vector<double> d(y[0].size(), 0.0);
    for (int k = 0; k < s.n; ++k)
        for (std::size_t x = 0; x < d.size(); ++x) d[x] += s.w[k] * y[s.idx[k]][x];
    return d;
}

void require_every_step(const Trajectory& tr) {
    require(tr.snapshots.size() >= 2, "invariants: trajectory needs at least two slices");
    require(tr.snapshots.size() == tr.step_times.size(),
            "invariants: trajectory must store every step (stride 1) for time derivatives");
}

PhaseField as_density(const PhaseField& s, const WeightModel* w) {
    if (s.kind() == FieldKind::f) return s;
    return weight_transform(s, *w, TransformDirection::to_density);
}

}  // namespace

HuReport check_Hu(const PhaseField& f, double tol) {
    const auto m = moments(f);
    Spectral1d sp(f.grid().nx, 1.0);
    HuReport r;
    r.tol = tol;
    for (double v : m.rho) r.mass_uniformity = std::max(r.mass_uniformity, std::abs(v - 1.0));
    r.incompressibility = sup_abs(dx(sp, m.V));
    return r;
}

double InvariantReport::max_mass_uniformity() const {
    double m = 0.0;
    for (const auto& s : slices) m = std::max(m, s.mass_uniformity);
    return m;
}
double InvariantReport::max_incompressibility() const {
    double m = 0.0;
    for (const auto& s : slices) m = std::max(m, s.incompressibility);
    return m;
}
double InvariantReport::max_continuity() const {
    double m = 0.0;
    for (const auto& s : slices) m = std::max(m, s.continuity);
    return m;
}
double InvariantReport::max_second_moment() const {
    double m = 0.0;
    for (const auto& s : slices) m = std::max(m, s.second_moment);
    return m;
}

InvariantReport moment_residuals(const Trajectory& tr, const ModelParams& params, const WeightModel* w) {
    require_every_step(tr);
    const std::size_t n = tr.snapshots.size();
    const auto& grid = tr.snapshots.front().grid();
    Spectral1d sp(grid.nx, 1.0);
    std::vector<double> times(n);
    std::vector<std::vector<double>> rho(n), Vx(n);
    std::vector<MomentFields> mf(n);
    for (const auto& s : tr.snapshots)
        require(s.kind() == FieldKind::f || w != nullptr, "invariants: weighted trajectory needs the weight model");
    InvariantReport rep;
    rep.slices.resize(n);
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < n; ++i) {
        const auto f = as_density(tr.snapshots[i], w);
        mf[i] = moments(f);
        times[i] = f.time();
        rho[i] = mf[i].rho;
        Vx[i] = dx(sp, mf[i].V);
        rep.slices[i].t = times[i];
        rep.slices[i].gronwall_slack = NAN;
    }
    for (std::size_t i = 0; i < n; ++i) rep.scale = std::max(rep.scale, tr.sup_norms[i]);

    const double beta = params.beta, ab = params.alpha * params.beta;
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < n; ++i) {
        auto& s = rep.slices[i];
        const auto& m = mf[i];
        double mass = 0.0;
        for (int x = 0; x < grid.nx; ++x) {
            s.mass_uniformity = std::max(s.mass_uniformity, std::abs(m.rho[x] - 1.0));
            mass += m.rho[x];
        }
        s.total_mass = mass * grid.dx();
        s.incompressibility = sup_abs(Vx[i]);

        const auto drho = time_derivative(rho, times, i);
        std::vector<double> cont(grid.nx);
        for (int x = 0; x < grid.nx; ++x) cont[x] = drho[x] + Vx[i][x];
        s.continuity = sup_abs(cont);

        const auto dVx = time_derivative(Vx, times, i);
        const auto Px = dx(sp, m.P);
        std::vector<double> flux(grid.nx), rv(grid.nx);
        for (int x = 0; x < grid.nx; ++x) {
            flux[x] = (m.rho[x] - 1.0) * Px[x];
            rv[x] = m.rho[x] * m.V[x];
        }
        const auto fx = dx(sp, flux), rvx = dx(sp, rv);
        std::vector<double> sec(grid.nx);
        for (int x = 0; x < grid.nx; ++x) sec[x] = dVx[x] + beta * Vx[i][x] + fx[x] - ab * rvx[x];
        s.second_moment = sup_abs(sec);
    }
    for (const auto& s : rep.slices) rep.total_mass_drift = std::max(rep.total_mass_drift, std::abs(s.total_mass - 1.0));
    return rep;
}

double GronwallReport::min_slack() const {
    double m = INFINITY;
    for (const auto& s : slices) m = std::min(m, s.slack);
    return m;
}

GronwallReport gronwall_diagnostic(const Trajectory& g, const CoefficientFields& coeffs, const PicardConfig& cfg,
                                   const ModelParams& params, const GammaConstants& gam) {
    require_every_step(g);
    const std::size_t n = g.snapshots.size();
    std::vector<double> times(n), N(n), Nt(n), QH(n), QHt(n), HH(n);
    for (const auto& s : g.snapshots) {
        require(s.kind() == FieldKind::g, "gronwall_diagnostic: trajectory must hold weighted fields");
        require(cfg.lambda_at(s.time()) >= 0.0, "gronwall_diagnostic: lambda(t) must stay non-negative");
    }
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < n; ++i) {
        const auto& s = g.snapshots[i];
        times[i] = s.time();
        const double lam = cfg.lambda_at(times[i]);
        const auto nf = norm_family(build_stack(s, cfg.A), lam);
        N[i] = nf.H;
        Nt[i] = nf.Htilde;
        const auto nq = norm_family(build_stack_x(coeffs.Q_at(times[i]), cfg.A), lam);
        QH[i] = nq.H;
        QHt[i] = nq.Htilde;
        HH[i] = norm_family(build_stack_x(coeffs.H_at(times[i]), cfg.A), lam).H;
    }
    GronwallReport rep;
    const double b = params.beta, ab = params.alpha * params.beta, g0 = gam.gamma0;
    const double g1 = b == 0.0 ? gam.gamma1 : gam.gamma1_hat;
    const double lam_prime = -(1.0 + cfg.K);
    for (std::size_t i = 0; i < n; ++i) {
        const auto st = time_stencil(times, i);
        double lhs = 0.0;
        for (int k = 0; k < st.n; ++k) lhs += st.w[k] * N[st.idx[k]];
        const double lam = cfg.lambda_at(times[i]);
        const double c1 = (1.0 + b) * (lam + 1.0 + lam_prime) + 4.0 * g0 + 16.0 * QH[i] + ab * HH[i];
        const double c2 = g1 + 16.0 * g0 + (g0 + 16.0) * QHt[i] + ab * g0 * HH[i];
        GronwallSlice s;
        s.t = times[i];
        s.lhs = lhs;
        s.rhs = c1 * Nt[i] + c2 * N[i];
        s.slack = s.rhs - s.lhs;
        s.scale = std::max({std::abs(c1 * Nt[i]) + std::abs(c2 * N[i]), std::abs(lhs)});
        rep.scale = std::max(rep.scale, s.scale);
        rep.slices.push_back(s);
    }
    return rep;
}

void attach_gronwall(InvariantReport& rep, const GronwallReport& gr) {
    require(rep.slices.size() == gr.slices.size(), "attach_gronwall: slice counts differ");
    for (std::size_t i = 0; i < rep.slices.size(); ++i) rep.slices[i].gronwall_slack = gr.slices[i].slack;
}

DriftDecayReport drift_decay(const Trajectory& tr, const ModelParams& params, double tol, const WeightModel* w) {
    const auto rep = moment_residuals(tr, params, w);
    DriftDecayReport d;
    d.tol = tol;
    d.max_mass_uniformity = rep.max_mass_uniformity();
    d.max_incompressibility = rep.max_incompressibility();
    d.max_continuity = rep.max_continuity();
    const auto& grid = tr.snapshots.front().grid();
    Spectral1d sp(grid.nx, 1.0);
    const auto V0x = dx(sp, moments(as_density(tr.snapshots.front(), w)).V);
    const double t0 = tr.snapshots.front().time();
    for (const auto& s : tr.snapshots) {
        const auto Vx = dx(sp, moments(as_density(s, w)).V);
        const double e = std::exp(-params.beta * (s.time() - t0));
        for (int x = 0; x < grid.nx; ++x) d.decay_residual = std::max(d.decay_residual, std::abs(Vx[x] - e * V0x[x]));
    }
    return d;
}

void write_invariants_csv(std::ostream& os, const InvariantReport& r) {
    os << "t,mass_uniformity,incompressibility,continuity_residual,second_moment_residual,gronwall_slack\n";
    for (const auto& s : r.slices)
        os << s.t << ',' << s.mass_uniformity << ',' << s.incompressibility << ',' << s.continuity << ','
           << s.second_moment << ',' << s.gronwall_slack << "\n";
}

}  // namespace kinvfp
