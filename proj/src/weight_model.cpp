#include "kinvfp/weight_model.hpp"

#include "kinvfp/error.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/binomial.hpp>
#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace kinvfp {

namespace {

// Internal ladders run two orders past l_max so that sup searches at l_max
// can use the next derivative for critical points.
constexpr int kExtra = 2;

// (1+u^2) p' - 2 m u p
RationalPoly ladder_step(const RationalPoly& p, int m) {
    const int deg = static_cast<int>(p.size()) - 1;
    RationalPoly next(deg + 2, Rational(0));
    for (int n = 0; n <= deg + 1; ++n) {
        Rational v = 0;
        if (n + 1 <= deg) v += Rational(n + 1) * p[n + 1];
        if (n >= 1 && n - 1 <= deg) v += Rational(n - 1 - 2 * m) * p[n - 1];
        next[n] = v;
    }
    return next;
}

double integrate(const std::function<double(double)>& f, double a, double b) {
    using boost::math::quadrature::gauss_kronrod;
    double err = 0.0;
    return gauss_kronrod<double, 61>::integrate(f, a, b, 15, 1e-14, &err);
}

}  // namespace

LadderKind parse_ladder_kind(const std::string& name) {
    if (name == "dlnw") return LadderKind::dlnw;
    if (name == "h") return LadderKind::h;
    if (name == "inv1pu2") return LadderKind::inv1pu2;
    throw InvalidInput("unknown ladder kind '" + name + "' (expected dlnw, h or inv1pu2)");
}

std::vector<double> to_double(const RationalPoly& p) {
    std::vector<double> out(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) out[i] = static_cast<double>(p[i]);
    return out;
}

double eval_poly(const std::vector<double>& p, double u) {
    double acc = 0.0;
    for (auto it = p.rbegin(); it != p.rend(); ++it) acc = acc * u + *it;
    return acc;
}

WeightModel::WeightModel(int s, double beta, int l_max) : s_(s), beta_(beta), l_max_(l_max) {
    if (s < 4 || s % 2 != 0) throw InvalidInput("s must be even and >= 4 (got " + std::to_string(s) + ")");
    require(l_max >= 1, "l_max must be >= 1");
    require(std::isfinite(beta), "beta must be finite");

    const Rational rs(s);
    const int top = l_max + kExtra;

    // d ln w: orders 1..top, index = order
    dlnw_.assign(top + 1, RationalPoly{});
    dlnw_[1] = {Rational(0), rs};
    dlnw_[2] = {rs, Rational(0), -rs};
    for (int l = 2; l < top; ++l) dlnw_[l + 1] = ladder_step(dlnw_[l], l);

    h_.assign(top + 1, RationalPoly{});
    h_[0] = {rs / 2, Rational(0), -(rs + rs * rs) / 2};
    for (int d = 0; d < top; ++d) h_[d + 1] = ladder_step(h_[d], d + 2);

    inv_.assign(top + 1, RationalPoly{});
    inv_[0] = {rs};
    for (int d = 0; d < top; ++d) inv_[d + 1] = ladder_step(inv_[d], d + 1);

    auto convert = [](const std::vector<RationalPoly>& in) {
        std::vector<std::vector<double>> out;
        for (const auto& p : in) out.push_back(to_double(p));
        return out;
    };
    dlnw_d_ = convert(dlnw_);
    h_d_ = convert(h_);
    inv_d_ = convert(inv_);

    // int u^2 (1+u^2)^(-s/2) du = int sin^2 cos^(s-4) over (-pi/2, pi/2)
    if (s == 4) {
        c_ = std::numbers::pi / 2.0;
    } else {
        c_ = integrate([s](double th) { return std::pow(std::sin(th), 2) * std::pow(std::cos(th), s - 4); },
                       -std::numbers::pi / 2.0, std::numbers::pi / 2.0);
    }
    c_omega_ = 2.0 / c_ *
               integrate([s](double th) { return std::sin(th) * std::pow(std::cos(th), s - 3); }, 0.0,
                         std::numbers::pi / 2.0);

    // (1+u^2)^(s/2) = sum_i binom(s/2, i) u^(2i), then differentiate s times.
    std::vector<long long> p(s + 1, 0);
    for (int i = 0; i <= s / 2; ++i) p[2 * i] = static_cast<long long>(boost::math::binomial_coefficient<double>(s / 2, i));
    long long amax = 0;
    dw_.clear();
    for (int j = 0; j <= s; ++j) {
        dw_.push_back(p);
        for (long long a : p) amax = std::max(amax, a < 0 ? -a : a);
        std::vector<long long> q(std::max<std::size_t>(p.size() - 1, 1), 0);
        for (std::size_t n = 1; n < p.size(); ++n) q[n - 1] = static_cast<long long>(n) * p[n];
        p = q;
    }
    kappa_ = c_ * static_cast<double>(amax);
}

const RationalPoly& WeightModel::coeffs(LadderKind kind, int d) const {
    require(d >= min_order(kind), "ladder order below minimum");
    require(d <= l_max_ + kExtra, "ladder order exceeds stored range");
    switch (kind) {
        case LadderKind::dlnw: return dlnw_[d];
        case LadderKind::h: return h_[d];
        case LadderKind::inv1pu2: return inv_[d];
    }
    throw InvalidInput("unknown ladder kind");
}

int WeightModel::denominator_power(LadderKind kind, int d) const {
    switch (kind) {
        case LadderKind::dlnw: return d;
        case LadderKind::h: return d + 2;
        case LadderKind::inv1pu2: return d + 1;
    }
    return 0;
}

double WeightModel::ladder_value(LadderKind kind, int d, double u) const {
    require(d >= min_order(kind) && d <= l_max_ + kExtra, "ladder order out of range");
    const auto& p = kind == LadderKind::dlnw ? dlnw_d_[d] : kind == LadderKind::h ? h_d_[d] : inv_d_[d];
    return eval_poly(p, u) / std::pow(1.0 + u * u, denominator_power(kind, d));
}

double WeightModel::omega(double u) const { return c_ * std::pow(1.0 + u * u, s_ / 2); }

double WeightModel::dlnw(double u) const { return s_ * u / (1.0 + u * u); }

double WeightModel::h(double u) const {
    const double q = 1.0 + u * u;
    return (s_ - (s_ + static_cast<double>(s_) * s_) * u * u) / (2.0 * q * q);
}

double WeightModel::h_hat(double u) const { return h(u) - beta_ * (1.0 + u * dlnw(u)); }

WeightValues WeightModel::eval(double u) const { return {omega(u), dlnw(u), h(u), h_hat(u)}; }

double WeightModel::h_hat_derivative(int d, double u) const {
    if (d == 0) return h_hat(u);
    return ladder_value(LadderKind::h, d, u) + beta_ * ladder_value(LadderKind::inv1pu2, d, u);
}

WeightModel make_weight(int s, double beta, int l_max) { return WeightModel(s, beta, l_max); }

RationalPoly poly_coeffs(const WeightModel& w, LadderKind kind, int d) {
    if (d > w.l_max()) throw InvalidInput("ladder order " + std::to_string(d) + " exceeds l_max " + std::to_string(w.l_max()));
    if (d < w.min_order(kind)) throw InvalidInput("ladder order " + std::to_string(d) + " below minimum");
    return w.coeffs(kind, d);
}

double sup_abs_on_line(const std::function<double(double)>& f, const std::function<double(double)>& df, int grid) {
    static constexpr double u_cap = 1e6;
    auto u_of = [](double th) { return std::clamp(std::tan(th), -u_cap, u_cap); };
    const double a = -std::numbers::pi / 2.0, b = std::numbers::pi / 2.0;
    double best = std::max(std::abs(f(-u_cap)), std::abs(f(u_cap)));
    double u_prev = u_of(a + (b - a) / grid);
    double d_prev = df(u_prev);
    best = std::max(best, std::abs(f(u_prev)));
    for (int i = 2; i < grid; ++i) {
        const double u = u_of(a + (b - a) * i / grid);
        const double d = df(u);
        best = std::max(best, std::abs(f(u)));
        if (d == 0.0) {
            u_prev = u;
            d_prev = d;
            continue;
        }
        if (d_prev * d < 0.0) {
            std::uintmax_t iters = 200;
            auto tol = boost::math::tools::eps_tolerance<double>(52);
            auto r = boost::math::tools::toms748_solve(df, u_prev, u, d_prev, d, tol, iters);
            best = std::max(best, std::abs(f(0.5 * (r.first + r.second))));
        }
        u_prev = u;
        d_prev = d;
    }
    return best;
}

bool DerivativeBoundReport::ok() const {
    return std::all_of(rows.begin(), rows.end(), [](const auto& r) { return r.ok(); });
}

std::string DerivativeBoundReport::first_failure() const {
    for (const auto& r : rows)
        if (!r.ok()) return "derivative bound violated at l=" + std::to_string(r.l);
    return {};
}

DerivativeBoundReport check_derivative_bounds(const WeightModel& w, int l_lo, int l_hi) {
    require(l_lo >= 0 && l_hi <= w.l_max() && l_lo <= l_hi, "l range must lie in [0, l_max]");
    const double s = w.s();
    DerivativeBoundReport rep;
    double fact = 1.0;
    for (int i = 2; i <= l_lo; ++i) fact *= i;
    for (int l = l_lo; l <= l_hi; ++l) {
        if (l > l_lo) fact *= l;
        DerivativeBoundRow row{};
        row.l = l;
        const double p4 = std::pow(4.0, l);
        if (l >= 1) {
            double m = 0.0;
            for (const auto& c : w.coeffs(LadderKind::dlnw, l)) m = std::max(m, std::abs(static_cast<double>(c)));
            row.coeff_max = m;
            row.coeff_bound = s / 4.0 * p4 * fact;
        } else {
            row.coeff_max = 0.0;
            row.coeff_bound = 0.0;
        }
        row.sup_dlnw = sup_abs_on_line([&](double u) { return w.ladder_value(LadderKind::dlnw, l + 1, u); },
                                       [&](double u) { return w.ladder_value(LadderKind::dlnw, l + 2, u); });
        row.bound_dlnw = s * p4 * fact * (l + 1) * (l + 2);
        row.sup_h = sup_abs_on_line([&](double u) { return w.ladder_value(LadderKind::h, l, u); },
                                    [&](double u) { return w.ladder_value(LadderKind::h, l + 1, u); });
        row.bound_h = (s + s * s) / 4.0 * p4 * fact * (l + 1) * (l + 2) * (l + 3);
        rep.rows.push_back(row);
    }
    return rep;
}

}  // namespace kinvfp
