#include "kinvfp/linear_fp.hpp"

#include "kinvfp/error.hpp"
#include "kinvfp/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace kinvfp {

void ModelParams::validate() const {
    require(std::isfinite(sigma) && sigma >= 0.0, "model: sigma must be >= 0");
    require(std::isfinite(beta), "model: beta must be finite");
    require(alpha == 0 || alpha == 1, "model: alpha must be 0 or 1");
}

CoefficientFields CoefficientFields::zero(int nx) { return frozen(std::vector<double>(nx, 0.0)); }

CoefficientFields CoefficientFields::frozen(std::vector<double> Q, std::vector<double> H) {
    CoefficientFields c;
    c.times = {0.0};
    c.Q.push_back(std::move(Q));
    if (!H.empty()) c.H.push_back(std::move(H));
    return c;
}

void CoefficientFields::validate(int nx_expected) const {
    require(!times.empty() && times.size() == Q.size(), "coefficients: need one Q slice per time");
    require(H.empty() || H.size() == Q.size(), "coefficients: H must be empty or match Q slices");
    for (std::size_t n = 1; n < times.size(); ++n) require(times[n] > times[n - 1], "coefficients: times must increase");
    for (const auto& q : Q) {
        require(static_cast<int>(q.size()) == nx_expected, "coefficients: Q slice length must equal nx");
        for (double v : q) require(std::isfinite(v), "coefficients: Q must be finite");
    }
    for (const auto& h : H) {
        require(static_cast<int>(h.size()) == nx_expected, "coefficients: H slice length must equal nx");
        for (double v : h) require(std::isfinite(v), "coefficients: H must be finite");
    }
}

namespace {

std::vector<double> interp_slices(const std::vector<double>& times, const std::vector<std::vector<double>>& s,
                                  double t) {
    if (t <= times.front()) return s.front();
    if (t >= times.back()) return s.back();
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    const std::size_t hi = static_cast<std::size_t>(it - times.begin()), lo = hi - 1;
    const double w = (t - times[lo]) / (times[hi] - times[lo]);
    std::vector<double> out(s[lo].size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = s[lo][i] + w * (s[hi][i] - s[lo][i]);
    return out;
}

}  // namespace

std::vector<double> CoefficientFields::Q_at(double t) const { return interp_slices(times, Q, t); }

std::vector<double> CoefficientFields::H_at(double t) const {
    if (H.empty()) return std::vector<double>(nx(), 0.0);
    return interp_slices(times, H, t);
}

struct LinearStepper::Impl {
    Spectral1d sx;
    Spectral1d su;
    std::vector<double> L;  // d_u ln w at the u-nodes (0 when unweighted)
    std::vector<double> h;
    Impl(const PhaseGrid& g) : sx(g.nx, 1.0), su(g.nu, g.nu * g.du()) {}
};

struct LinearStepper::Sampler {
    int nfine = 0;
    std::vector<double> times;
    std::vector<std::vector<double>> qx, hh;  // per slice on the refined grid

    double lerp_x(const std::vector<double>& v, double x) const {
        double p = (x - std::floor(x)) * nfine;
        int i = static_cast<int>(p);
        if (i >= nfine) i = nfine - 1;
        const double w = p - i;
        const int j = i + 1 == nfine ? 0 : i + 1;
        return v[i] + w * (v[j] - v[i]);
    }

    double eval(const std::vector<std::vector<double>>& s, double t, double x) const {
        if (s.empty()) return 0.0;
        if (t <= times.front() || s.size() == 1) return lerp_x(s.front(), x);
        if (t >= times.back()) return lerp_x(s.back(), x);
        const auto it = std::upper_bound(times.begin(), times.end(), t);
        const std::size_t hi = static_cast<std::size_t>(it - times.begin()), lo = hi - 1;
        const double w = (t - times[lo]) / (times[hi] - times[lo]);
        const double a = lerp_x(s[lo], x), b = lerp_x(s[hi], x);
        return a + w * (b - a);
    }
};

LinearStepper::LinearStepper(const PhaseGrid& grid, const ModelParams& params, const WeightModel& weight,
                             CoefficientFields coeffs, StepperOptions opts)
    : grid_(grid), params_(params), weight_(&weight), coeffs_(std::move(coeffs)), opts_(opts) {
    grid_.validate();
    params_.validate();
    coeffs_.validate(grid_.nx);
    impl_ = std::make_unique<Impl>(grid_);
    impl_->L.assign(grid_.nu, 0.0);
    impl_->h.assign(grid_.nu, 0.0);
    if (opts_.weighted) {
        for (int j = 0; j < grid_.nu; ++j) {
            impl_->L[j] = weight.dlnw(grid_.u(j));
            impl_->h[j] = weight.h(grid_.u(j));
        }
    }
}

LinearStepper::~LinearStepper() = default;
LinearStepper::LinearStepper(LinearStepper&&) noexcept = default;

double LinearStepper::b_of(double qx, double hh, double u) const {
    const double bf = qx + params_.beta * (u - params_.alpha * hh);
    if (!opts_.weighted) return bf;
    return bf - params_.sigma * params_.sigma * weight_->dlnw(u);
}

double LinearStepper::r_of(double qx, double hh, double u) const {
    double r = params_.beta + opts_.extra_reaction;
    if (!opts_.weighted) return r;
    const double bf = qx + params_.beta * (u - params_.alpha * hh);
    return r - bf * weight_->dlnw(u) - params_.sigma * params_.sigma * weight_->h(u);
}

double LinearStepper::drift(double t, double x, double u) const {
    const auto Q = coeffs_.Q_at(t), H = coeffs_.H_at(t);
    std::vector<double> qx(grid_.nx), at{x}, out(1), hv(1);
    impl_->sx.derivative(Q.data(), 1, qx.data(), 1, 1);
    impl_->sx.interpolate(qx, at, out);
    impl_->sx.interpolate(H, at, hv);
    return b_of(out[0], hv[0], u);
}

double LinearStepper::reaction(double t, double x, double u) const {
    const auto Q = coeffs_.Q_at(t), H = coeffs_.H_at(t);
    std::vector<double> qx(grid_.nx), at{x}, out(1), hv(1);
    impl_->sx.derivative(Q.data(), 1, qx.data(), 1, 1);
    impl_->sx.interpolate(qx, at, out);
    impl_->sx.interpolate(H, at, hv);
    return r_of(out[0], hv[0], u);
}

double LinearStepper::reaction_sup(double t) const {
    const auto Q = coeffs_.Q_at(t), H = coeffs_.H_at(t);
    std::vector<double> qx(grid_.nx);
    impl_->sx.derivative(Q.data(), 1, qx.data(), 1, 1);
    double m = 0.0;
    for (int i = 0; i < grid_.nx; ++i)
        for (int j = 0; j < grid_.nu; ++j) m = std::max(m, std::abs(r_of(qx[i], H[i], grid_.u(j))));
    return m;
}

std::shared_ptr<const LinearStepper::Sampler> LinearStepper::sampler(int refine) const {
    require(refine >= 1, "sampler: refine must be >= 1");
    auto s = std::make_shared<Sampler>();
    s->nfine = grid_.nx * refine;
    s->times = coeffs_.times;
    std::vector<double> at(s->nfine), qx(grid_.nx);
    for (int i = 0; i < s->nfine; ++i) at[i] = static_cast<double>(i) / s->nfine;
    for (std::size_t n = 0; n < coeffs_.Q.size(); ++n) {
        impl_->sx.derivative(coeffs_.Q[n].data(), 1, qx.data(), 1, 1);
        std::vector<double> fine(s->nfine);
        impl_->sx.interpolate(qx, at, fine);
        s->qx.push_back(std::move(fine));
        if (!coeffs_.H.empty()) {
            std::vector<double> hf(s->nfine);
            impl_->sx.interpolate(coeffs_.H[n], at, hf);
            s->hh.push_back(std::move(hf));
        }
    }
    return s;
}

double LinearStepper::drift(const Sampler& s, double t, double x, double u) const {
    return b_of(s.eval(s.qx, t, x), s.eval(s.hh, t, x), u);
}

double LinearStepper::reaction(const Sampler& s, double t, double x, double u) const {
    return r_of(s.eval(s.qx, t, x), s.eval(s.hh, t, x), u);
}

void LinearStepper::step(PhaseField& g, double t, double dt) const {
    require(g.grid() == grid_, "step: field grid does not match the stepper");
    const int nx = grid_.nx, nu = grid_.nu;
    const double umax = grid_.u_max;
    const double s2 = params_.sigma * params_.sigma;
    const double beta = params_.beta, alpha = params_.alpha;
    const double tm = t + 0.5 * dt;
    const auto Q = coeffs_.Q_at(tm), H = coeffs_.H_at(tm);
    std::vector<double> qx(nx);
    impl_->sx.derivative(Q.data(), 1, qx.data(), 1, 1);
    const auto& L = impl_->L;
    const auto& hw = impl_->h;
    double* data = g.data().data();

    auto transport = [&](double tau) {
#pragma omp parallel for schedule(static)
        for (int j = 0; j < nu; ++j) {
            const double a = grid_.u(j) * tau;
            if (a != 0.0) impl_->sx.shift(data + j, nu, data + j, nu, a);
        }
    };

    auto react = [&](double tau) {
        const double F = opts_.source;
#pragma omp parallel for schedule(static)
        for (int i = 0; i < nx; ++i) {
            for (int j = 0; j < nu; ++j) {
                const double u = grid_.u(j);
                const double bf = qx[i] + beta * (u - alpha * H[i]);
                const double r = beta + opts_.extra_reaction - bf * L[j] - s2 * hw[j];
                const double e = std::exp(r * tau);
                double& v = data[static_cast<std::size_t>(i) * nu + j];
                v *= e;
                if (F != 0.0) v += std::abs(r) > 1e-300 ? F * std::expm1(r * tau) / r : F * tau;
            }
        }
    };

    auto advect = [&](double tau) {
#pragma omp parallel for schedule(static)
        for (int i = 0; i < nx; ++i) {
            const double c0 = qx[i] - beta * alpha * H[i];
            auto b = [&](double u) {
                double v = c0 + beta * u;
                if (opts_.weighted) v -= s2 * weight_->dlnw(u);
                return v;
            };
            std::vector<double> dep(nu);
            bool moved = false;
            for (int j = 0; j < nu; ++j) {
                const double u = grid_.u(j);
                const double k1 = b(u);
                const double k2 = b(u + 0.5 * tau * k1);
                const double k3 = b(u + 0.5 * tau * k2);
                const double k4 = b(u + tau * k3);
                dep[j] = u + tau / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
                if (dep[j] != u) moved = true;
            }
            if (!moved) continue;
            std::span<double> row(data + static_cast<std::size_t>(i) * nu, static_cast<std::size_t>(nu));
            std::vector<double> src(row.begin(), row.end()), offs, vals;
            std::vector<int> idx;
            for (int j = 0; j < nu; ++j) {
                if (std::abs(dep[j]) <= umax) {
                    offs.push_back(dep[j] + umax);
                    idx.push_back(j);
                }
            }
            vals.resize(offs.size());
            impl_->su.interpolate(src, offs, vals);
            std::fill(row.begin(), row.end(), 0.0);
            for (std::size_t q = 0; q < idx.size(); ++q) row[idx[q]] = vals[q];
        }
    };

    auto diffuse = [&](double tau) {
        if (s2 == 0.0) return;
        const auto factor = [&](double k) { return std::exp(-0.5 * s2 * k * k * tau); };
#pragma omp parallel for schedule(static)
        for (int i = 0; i < nx; ++i) {
            double* row = data + static_cast<std::size_t>(i) * nu;
            impl_->su.filter(row, 1, row, 1, factor);
        }
    };

    transport(0.5 * dt);
    react(0.5 * dt);
    advect(0.5 * dt);
    diffuse(dt);
    advect(0.5 * dt);
    react(0.5 * dt);
    transport(0.5 * dt);
    g.set_time(t + dt);
}

Trajectory solve_linear(const PhaseField& g0, const LinearStepper& stepper, double T, int nt, int stride) {
    require(T >= 0.0, "solve_linear: T must be >= 0");
    require(nt >= 0 && (T == 0.0 || nt >= 1), "solve_linear: nt must be >= 1 for T > 0");
    require(stride >= 1, "solve_linear: stride must be >= 1");
    Trajectory tr;
    PhaseField g = g0;
    tr.snapshots.push_back(g);
    tr.step_times.push_back(g0.time());
    tr.sup_norms.push_back(g.sup_norm());
    if (T == 0.0) return tr;
    const double dt = T / nt;
    const double t0 = g0.time();
    for (int n = 0; n < nt; ++n) {
        const double t = t0 + n * dt;
        stepper.step(g, t, dt);
        g.set_time(n + 1 == nt ? t0 + T : t0 + (n + 1) * dt);
        if (!g.all_finite()) {
            std::ostringstream os;
            os << "linear solver produced a non-finite value at step " << n + 1 << " (t = " << g.time()
               << ", dt = " << dt << ")";
            throw NumericalAbort(os.str());
        }
        tr.step_times.push_back(g.time());
        tr.sup_norms.push_back(g.sup_norm());
        if ((n + 1) % stride == 0 || n + 1 == nt) tr.snapshots.push_back(g);
    }
    return tr;
}

double MaxPrincipleReport::min_slack() const {
    double m = std::numeric_limits<double>::infinity();
    for (double s : slack) m = std::min(m, s);
    return slack.empty() ? 0.0 : m;
}

MaxPrincipleReport max_principle_residual(const Trajectory& tr, const std::vector<double>& c_sup,
                                          const std::vector<double>& F_sup) {
    const std::size_t steps = tr.step_times.size() - 1;
    require(c_sup.size() == steps && F_sup.size() == steps, "max_principle_residual: one c and F value per step");
    MaxPrincipleReport rep;
    for (double s : tr.sup_norms) rep.scale = std::max(rep.scale, s);
    for (std::size_t n = 0; n < steps; ++n) {
        const double dt = tr.step_times[n + 1] - tr.step_times[n];
        const double lhs = (tr.sup_norms[n + 1] - tr.sup_norms[n]) / dt;
        const double rhs = c_sup[n] * 0.5 * (tr.sup_norms[n] + tr.sup_norms[n + 1]) + F_sup[n];
        rep.slack.push_back(rhs - lhs);
    }
    return rep;
}

std::vector<double> reaction_sups(const LinearStepper& stepper, const Trajectory& tr) {
    std::vector<double> out;
    for (std::size_t n = 0; n + 1 < tr.step_times.size(); ++n)
        out.push_back(stepper.reaction_sup(0.5 * (tr.step_times[n] + tr.step_times[n + 1])));
    return out;
}

double interpolate_field(const PhaseField& f, double x, double u) {
    const auto& g = f.grid();
    require(std::abs(u) <= g.u_max, "interpolate_field: u outside the velocity cutoff");
    const Spectral1d sx(g.nx, 1.0), su(g.nu, g.nu * g.du());
    std::vector<double> col(g.nx), at{u + g.u_max}, v(1);
    for (int i = 0; i < g.nx; ++i) {
        su.interpolate(f.row(i), at, v);
        col[i] = v[0];
    }
    std::vector<double> ax{x - std::floor(x)};
    sx.interpolate(col, ax, v);
    return v[0];
}

}  // namespace kinvfp
