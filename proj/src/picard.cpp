#include "kinvfp/picard.hpp"

#include "kinvfp/analytic_norms.hpp"
#include "kinvfp/error.hpp"

#include <cmath>
#include <ostream>

namespace kinvfp {

namespace {

std::vector<std::size_t> metric_slices(const Trajectory& tr, int stride) {
    std::vector<std::size_t> idx;
    const std::size_t n = tr.snapshots.size();
    for (std::size_t i = 0; i < n; i += stride) idx.push_back(i);
    if (idx.back() != n - 1) idx.push_back(n - 1);
    return idx;
}

// Walks selected slices of psi (or of a - b) and accumulates max/trapezoid
// of two norm functionals evaluated at lambda(t).
template <class SliceFn, class NormFn>
std::pair<double, double> sweep(const std::vector<std::size_t>& idx, const Trajectory& ref, const PicardConfig& cfg,
                                SliceFn slice, NormFn norms) {
    double mx = 0.0, integral = 0.0, prev_t = 0.0, prev_v = 0.0;
    for (std::size_t k = 0; k < idx.size(); ++k) {
        const double t = ref.snapshots[idx[k]].time();
        const auto st = build_stack(slice(idx[k]), cfg.A);
        const auto [v0, v1] = norms(st, cfg.lambda_at(t));
        mx = std::max(mx, v0);
        if (k > 0) integral += 0.5 * (t - prev_t) * (v1 + prev_v);
        prev_t = t;
        prev_v = v1;
    }
    return {mx, integral};
}

std::pair<double, double> metric_norms(const DerivativeStack& st, double lambda) {
    return {norm_value(st, lambda, 0), norm_value(st, lambda, 1)};
}

std::pair<double, double> ball_norms(const DerivativeStack& st, double lambda) {
    const auto nf = norm_family(st, lambda);
    return {nf.H, nf.Htilde};
}

void check_times(const Trajectory& tr, const PicardConfig& cfg) {
    require(!tr.snapshots.empty(), "empty trajectory");
    const double last = tr.snapshots.back().time();
    require(cfg.lambda_at(last) >= 0.0, "trajectory extends past the time where lambda(t) vanishes");
}

}  // namespace

void PicardConfig::validate() const {
    require(lambda0 > 0.0, "picard: lambda0 must be positive");
    require(K > 0.0, "picard: K must be positive");
    require(T > 0.0, "picard: T must be positive");
    require(lambda_at(T) > 0.0, "picard: lambda0 - (1+K) T must be positive");
    require(M >= 0.0, "picard: M must be non-negative");
    require(A >= 1, "picard: A must be >= 1");
    require(nt >= 1, "picard: nt must be >= 1");
    require(tol_fp >= 0.0, "picard: tol_fp must be non-negative");
    require(max_iter >= 1, "picard: max_iter must be >= 1");
    require(metric_stride >= 1, "picard: metric_stride must be >= 1");
}

CoefficientFields source_fields(const Trajectory& tr, const WeightModel& w, const ModelParams& params) {
    require(!tr.snapshots.empty(), "source_fields: empty trajectory");
    const auto& grid = tr.snapshots.front().grid();
    std::vector<double> wq(grid.nu), wh(grid.nu);
    for (int j = 0; j < grid.nu; ++j) {
        const double u = grid.u(j);
        wq[j] = u * u / w.omega(u);
        wh[j] = u / w.omega(u);
    }
    CoefficientFields cf;
    std::vector<double> row(grid.nu);
    for (const auto& g : tr.snapshots) {
        if (g.kind() != FieldKind::g) throw InvalidInput("source_fields: trajectory must hold weighted fields (kind g)");
        std::vector<double> Q(grid.nx), H(grid.nx);
        for (int i = 0; i < grid.nx; ++i) {
            const auto r = g.row(i);
            for (int j = 0; j < grid.nu; ++j) row[j] = wq[j] * r[j];
            Q[i] = -simpson(row, grid.du());
            for (int j = 0; j < grid.nu; ++j) row[j] = wh[j] * r[j];
            H[i] = simpson(row, grid.du());
        }
        cf.times.push_back(g.time());
        cf.Q.push_back(std::move(Q));
        if (params.alpha == 1) cf.H.push_back(std::move(H));
    }
    return cf;
}

DominationCheck source_domination(const PhaseField& g, const WeightModel& w, int A, double lambda) {
    Trajectory tr;
    tr.snapshots.push_back(g);
    const auto cf = source_fields(tr, w, {1.0, 0.0, 1});
    DominationCheck d;
    d.Q_norm = norm_family(build_stack_x(cf.Q[0], A), lambda).H;
    d.H_norm = norm_family(build_stack_x(cf.H[0], A), lambda).H;
    d.g_norm = norm_family(build_stack(g, A), lambda).H;
    d.C_omega = w.c_omega();
    return d;
}

double contraction_metric(const Trajectory& psi, const PicardConfig& cfg) {
    check_times(psi, cfg);
    const auto idx = metric_slices(psi, cfg.metric_stride);
    const auto [mx, integral] = sweep(
        idx, psi, cfg, [&](std::size_t i) -> const PhaseField& { return psi.snapshots[i]; }, metric_norms);
    return std::max(mx, integral);
}

double contraction_distance(const Trajectory& a, const Trajectory& b, const PicardConfig& cfg) {
    require(a.snapshots.size() == b.snapshots.size(), "contraction_distance: trajectories differ in length");
    check_times(a, cfg);
    const auto idx = metric_slices(a, cfg.metric_stride);
    const auto [mx, integral] = sweep(
        idx, a, cfg,
        [&](std::size_t i) {
            const auto& x = a.snapshots[i];
            const auto& y = b.snapshots[i];
            require(x.grid() == y.grid() && std::abs(x.time() - y.time()) <= 1e-12 * (1 + std::abs(x.time())),
                    "contraction_distance: trajectories use different meshes");
            PhaseField d = x;
            for (std::size_t k = 0; k < d.data().size(); ++k) d.data()[k] -= y.data()[k];
            return d;
        },
        metric_norms);
    return std::max(mx, integral);
}

BallReport ball_membership(const Trajectory& g, const PicardConfig& cfg) {
    check_times(g, cfg);
    const auto idx = metric_slices(g, cfg.metric_stride);
    const auto [mx, integral] = sweep(
        idx, g, cfg, [&](std::size_t i) -> const PhaseField& { return g.snapshots[i]; }, ball_norms);
    return {mx, integral, cfg.M};
}

std::string to_string(PicardStatus s) {
    switch (s) {
        case PicardStatus::converged: return "converged";
        case PicardStatus::max_iter: return "max_iter";
        case PicardStatus::diverged: return "diverged";
    }
    return "?";
}

PicardResult iterate(const PhaseField& g0, const PicardConfig& cfg, const ModelParams& params, const WeightModel& w,
                     const GammaConstants* gammas) {
    cfg.validate();
    params.validate();
    require(g0.kind() == FieldKind::g, "picard: initial field must be weighted (kind g)");
    const auto& grid = g0.grid();
    const double dt = cfg.T / cfg.nt;

    Trajectory cur;
    for (int n = 0; n <= cfg.nt; ++n) {
        PhaseField s = g0;
        s.set_time(n == cfg.nt ? cfg.T : n * dt);
        cur.step_times.push_back(s.time());
        cur.sup_norms.push_back(s.sup_norm());
        cur.snapshots.push_back(std::move(s));
    }

    PicardResult res;
    res.initial_ball = ball_membership(cur, cfg);
    if (!cfg.waive_ball_check && !res.initial_ball.member())
        throw InvalidInput("picard: initial data outside the M-ball (sup H " + std::to_string(res.initial_ball.sup_H) +
                           ", int H~ " + std::to_string(res.initial_ball.int_Htilde) + ", M " +
                           std::to_string(cfg.M) + ")");
    res.tol = cfg.tol_fp > 0.0 ? cfg.tol_fp : 1e-8 * contraction_metric(cur, cfg);

    const auto sweep_once = [&](const Trajectory& from) {
        LinearStepper st(grid, params, w, source_fields(from, w, params));
        return solve_linear(g0, st, cfg.T, cfg.nt, 1);
    };

    int growing = 0;
    for (int n = 1; n <= cfg.max_iter; ++n) {
        Trajectory next = sweep_once(cur);
        const double D = contraction_distance(next, cur, cfg);
        if (!res.D.empty()) {
            res.ratios.push_back(D / res.D.back());
            growing = D > res.D.back() ? growing + 1 : 0;
        }
        res.D.push_back(D);
        cur = std::move(next);
        res.iterations = n;
        if (D <= res.tol) {
            res.status = PicardStatus::converged;
            break;
        }
        if (growing >= 3 || !std::isfinite(D)) {
            res.status = PicardStatus::diverged;
            break;
        }
    }

    res.coeffs = source_fields(cur, w, params);
    if (res.status != PicardStatus::diverged) res.residual_fp = contraction_distance(sweep_once(cur), cur, cfg);

    for (std::size_t k = 0; k + 1 < res.coeffs.times.size(); ++k) {
        const double t0 = res.coeffs.times[k], t1 = res.coeffs.times[k + 1];
        const double a = norm_family(build_stack_x(res.coeffs.Q[k], cfg.A), cfg.lambda_at(t0)).Htilde;
        const double b = norm_family(build_stack_x(res.coeffs.Q[k + 1], cfg.A), cfg.lambda_at(t1)).Htilde;
        res.M2 += 0.5 * (t1 - t0) * (a + b);
    }
    if (gammas) {
        const double g1 = params.beta == 0.0 ? gammas->gamma1 : gammas->gamma1_hat;
        res.M_hat = res.initial_ball.sup_H *
                    std::exp(cfg.T * (g1 + 16.0 * gammas->gamma0) + (16.0 + gammas->gamma0) * res.M2);
    }
    res.solution = std::move(cur);
    return res;
}

void write_picard_log(std::ostream& os, const PicardResult& r) {
    os << "n,D_n,r_n\n";
    for (std::size_t n = 0; n < r.D.size(); ++n) {
        os << n + 1 << ',' << r.D[n] << ',';
        if (n >= 1) os << r.ratios[n - 1];
        os << "\n";
    }
}

}  // namespace kinvfp
