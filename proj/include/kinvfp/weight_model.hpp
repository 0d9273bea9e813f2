#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <functional>
#include <string>
#include <vector>

namespace kinvfp {

using Rational = boost::multiprecision::cpp_rational;
// Coefficient of u^n stored at index n.
using RationalPoly = std::vector<Rational>;

// Numerator ladders of the weight's derived functions. Each entry of order d
// is a polynomial p with
//   dlnw    : d^d/du^d ln w        = p / (1+u^2)^d        (d >= 1)
//   h       : d^d/du^d h           = p / (1+u^2)^(d+2)    (d >= 0)
//   inv1pu2 : d^d/du^d s/(1+u^2)   = p / (1+u^2)^(d+1)    (d >= 0)
enum class LadderKind { dlnw, h, inv1pu2 };

LadderKind parse_ladder_kind(const std::string& name);

struct WeightValues {
    double omega;
    double dlnw;
    double h;
    double h_hat;
};

// w(u) = c (1+u^2)^(s/2) normalized by  int u^2/w du = 1.
class WeightModel {
  public:
    static constexpr int default_l_max = 12;

    WeightModel(int s, double beta, int l_max = default_l_max);

    int s() const { return s_; }
    double c() const { return c_; }
    double beta() const { return beta_; }
    int l_max() const { return l_max_; }

    const RationalPoly& coeffs(LadderKind kind, int d) const;
    int denominator_power(LadderKind kind, int d) const;
    int min_order(LadderKind kind) const { return kind == LadderKind::dlnw ? 1 : 0; }

    // d-th derivative of the ladder's function, from the stored coefficients.
    double ladder_value(LadderKind kind, int d, double u) const;

    double omega(double u) const;
    double dlnw(double u) const;
    double h(double u) const;
    double h_hat(double u) const;
    WeightValues eval(double u) const;

    // d-th derivative of h_hat; for d >= 1 it differs from h by beta * d^d(s/(1+u^2)).
    double h_hat_derivative(int d, double u) const;

    // int |u|/w du
    double c_omega() const { return c_omega_; }
    // max |coefficient| over w, w', ..., d^s w (c included)
    double kappa() const { return kappa_; }

    // Coefficients of d^j w / c as integers (times c gives the true polynomial).
    const std::vector<std::vector<long long>>& omega_derivative_coeffs() const { return dw_; }

  private:
    int s_;
    double beta_;
    int l_max_;
    double c_;
    double c_omega_;
    double kappa_;
    std::vector<RationalPoly> dlnw_, h_, inv_;
    std::vector<std::vector<double>> dlnw_d_, h_d_, inv_d_;
    std::vector<std::vector<long long>> dw_;
};

WeightModel make_weight(int s, double beta, int l_max = WeightModel::default_l_max);

// Ladder numerator of derivative order d; errors beyond l_max.
RationalPoly poly_coeffs(const WeightModel& w, LadderKind kind, int d);

// sup over the real line of |f|, from a grid in u = tan(theta) refined at sign
// changes of df (interior critical points) plus the limits u -> +-inf.
double sup_abs_on_line(const std::function<double(double)>& f,
                       const std::function<double(double)>& df, int grid = 4001);

struct DerivativeBoundRow {
    int l;
    double coeff_max;     // max_n |a^(l)_n| for dlnw numerator of order l
    double coeff_bound;   // (s/4) 4^l l!
    double sup_dlnw;      // sup |d^l (d ln w)|
    double bound_dlnw;    // s 4^l (l+2)!
    double sup_h;         // sup |d^l h|
    double bound_h;       // (s+s^2)/4 4^l (l+3)!
    bool ok() const { return coeff_max <= coeff_bound && sup_dlnw <= bound_dlnw && sup_h <= bound_h; }
};

struct DerivativeBoundReport {
    std::vector<DerivativeBoundRow> rows;
    bool ok() const;
    std::string first_failure() const;
};

DerivativeBoundReport check_derivative_bounds(const WeightModel& w, int l_lo, int l_hi);

// Polynomial evaluation helpers shared with the norm code.
double eval_poly(const std::vector<double>& p, double u);
std::vector<double> to_double(const RationalPoly& p);

}  // namespace kinvfp
