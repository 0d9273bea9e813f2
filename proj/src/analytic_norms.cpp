#include "kinvfp/analytic_norms.hpp"

#include "kinvfp/error.hpp"
#include "kinvfp/spectral.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <ostream>

namespace kinvfp {

namespace {

double factorial(int n) {
    double r = 1.0;
    for (int i = 2; i <= n; ++i) r *= i;
    return r;
}

// Fornberg weights for the first derivative at 0 on integer offsets.
std::array<double, 7> first_derivative_weights(int lo) {
    constexpr int n = 7;
    std::array<double, n> x{};
    for (int i = 0; i < n; ++i) x[i] = lo + i;
    double c[n][2] = {};
    double c1 = 1.0, c4 = x[0];
    c[0][0] = 1.0;
    for (int i = 1; i < n; ++i) {
        const int mn = std::min(i, 1);
        double c2 = 1.0;
        const double c5 = c4;
        c4 = x[i];
        for (int j = 0; j < i; ++j) {
            const double c3 = x[i] - x[j];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k) c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for (int k = mn; k >= 1; --k) c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    std::array<double, n> w{};
    for (int i = 0; i < n; ++i) w[i] = c[i][1];
    return w;
}

// d/du of one row; stencils for the first and last three nodes are one-sided.
class RowDerivative {
  public:
    RowDerivative(int nu, double du) : nu_(nu) {
        // slot j holds the stencil on offsets -j..6-j
        for (int j = 0; j < 7; ++j) {
            w_[j] = first_derivative_weights(-j);
            double rest = 0.0;
            for (int q = 0; q < 7; ++q)
                if (q != j) rest += w_[j][q];
            w_[j][j] = -rest;
            for (double& v : w_[j]) v /= du;
        }
    }

    void apply(std::span<const double> in, std::span<double> out) const {
        for (int j = 0; j < nu_; ++j) {
            int slot, start;
            if (j < 3) {
                slot = j;
                start = 0;
            } else if (j > nu_ - 4) {
                slot = 6 - (nu_ - 1 - j);
                start = nu_ - 7;
            } else {
                slot = 3;
                start = j - 3;
            }
            const auto& w = w_[slot];
            double acc = 0.0;
            for (int q = 0; q < 7; ++q) acc += w[q] * in[start + q];
            out[j] = acc;
        }
    }

  private:
    int nu_;
    std::array<std::array<double, 7>, 7> w_{};
};

// The polynomial in lambda behind norm_value; lambda may be any real here.
double ladder_poly(const DerivativeStack& s, double lambda, int a) {
    double acc = 0.0;
    for (int k = 0; k <= s.k_max; ++k) {
        for (int l = 0; l <= s.l_max; ++l) {
            const int n = k + l;
            if (n < a) continue;
            double falling = 1.0;
            for (int i = 0; i < a; ++i) falling *= n - i;
            acc += falling * std::pow(lambda, n - a) / (factorial(k) * factorial(l)) * s(k, l);
        }
    }
    return acc;
}

double aggregate_H(const DerivativeStack& s, double lambda, int A) {
    double H = 0.0;
    for (int a = 0; a <= A; ++a) H += ladder_poly(s, lambda, a) / (factorial(a) * factorial(a));
    return H;
}

// sum_{a <= a_max} 1/(a!)^2 d^a/dlambda^a prod_i ||.||_{lambda, o_i}, by Leibniz on ladder values.
double leibniz_lhs(const std::vector<const std::vector<double>*>& ladders, const std::vector<int>& offsets,
                   int a_max) {
    const std::size_t n = ladders.size();
    std::vector<int> parts(n, 0);
    // all compositions of a into n parts, weighted by the multinomial coefficient
    auto visit = [&](auto&& self, std::size_t i, int left, int a) -> double {
        if (i + 1 == n) {
            parts[i] = left;
            double term = factorial(a);
            for (std::size_t q = 0; q < n; ++q) term *= (*ladders[q])[offsets[q] + parts[q]] / factorial(parts[q]);
            return term;
        }
        double acc = 0.0;
        for (int p = 0; p <= left; ++p) {
            parts[i] = p;
            acc += self(self, i + 1, left - p, a);
        }
        return acc;
    };
    double total = 0.0;
    for (int a = 0; a <= a_max; ++a) total += visit(visit, 0, a, a) / (factorial(a) * factorial(a));
    return total;
}

std::vector<double> full_ladder(const NormLadder& n) {
    std::vector<double> v = n.values_a;
    v.push_back(n.next);
    return v;
}

LemmaSlack inequality(std::string name, double lhs, double rhs) {
    const double scale = std::max(std::abs(rhs), std::numeric_limits<double>::min());
    return {std::move(name), lhs, rhs, (rhs - lhs) / scale, false};
}

LemmaSlack identity(std::string name, double lhs, double rhs) {
    const double scale = std::max(std::abs(rhs), std::numeric_limits<double>::min());
    return {std::move(name), lhs, rhs, -std::abs(lhs - rhs) / scale, true};
}

}  // namespace

DerivativeStack::DerivativeStack(int k, int l)
    : k_max(k), l_max(l), table(static_cast<std::size_t>(k + 1) * (l + 1), 0.0) {
    require(k >= 0 && l >= 0, "derivative stack orders must be >= 0");
}

DerivativeStack build_stack(const PhaseField& field, int k_max, int l_max) {
    const auto& g = field.grid();
    require(k_max >= 0 && l_max >= 0, "build_stack: orders must be >= 0");
    if (g.nx < 4 * std::max(k_max, 1) || g.nu < 8 * std::max(l_max, 1))
        throw InvalidInput("build_stack: order " + std::to_string(std::max(k_max, l_max)) +
                           " needs nx >= 4A and nu >= 8A (grid " + std::to_string(g.nx) + "x" +
                           std::to_string(g.nu) + ")");
    DerivativeStack st(k_max, l_max);
    const Spectral1d sx(g.nx, 1.0);
    const RowDerivative du(g.nu, g.du());
    const std::ptrdiff_t nu = g.nu;
    std::vector<double> dk(g.size()), cur(g.size()), nxt(g.size());
    for (int k = 0; k <= k_max; ++k) {
#pragma omp parallel for schedule(static)
        for (int j = 0; j < g.nu; ++j) {
            if (k == 0)
                for (int i = 0; i < g.nx; ++i) dk[i * nu + j] = field.data()[i * nu + j];
            else
                sx.derivative(field.data().data() + j, nu, dk.data() + j, nu, k);
        }
        cur = dk;
        for (int l = 0; l <= l_max; ++l) {
            if (l > 0) {
#pragma omp parallel for schedule(static)
                for (int i = 0; i < g.nx; ++i) {
                    const std::size_t off = static_cast<std::size_t>(i) * g.nu;
                    du.apply({cur.data() + off, static_cast<std::size_t>(g.nu)},
                             {nxt.data() + off, static_cast<std::size_t>(g.nu)});
                }
                cur.swap(nxt);
            }
            double m = 0.0;
            for (double v : cur) m = std::max(m, std::abs(v));
            st.at(k, l) = m;
        }
    }
    return st;
}

DerivativeStack build_stack_x(std::span<const double> v, int A) {
    const int nx = static_cast<int>(v.size());
    require(A >= 0, "build_stack_x: order must be >= 0");
    if (nx < 4 * std::max(A, 1)) throw InvalidInput("build_stack_x: order needs nx >= 4A");
    DerivativeStack st(A, A);
    const Spectral1d sx(nx, 1.0);
    std::vector<double> d(nx);
    for (int k = 0; k <= A; ++k) {
        sx.derivative(v.data(), 1, d.data(), 1, k);
        double m = 0.0;
        for (double x : d) m = std::max(m, std::abs(x));
        st.at(k, 0) = m;
    }
    return st;
}

DerivativeStack stack_from_u_sups(std::span<const double> sups, int A) {
    require(static_cast<int>(sups.size()) >= A + 1, "stack_from_u_sups: need A+1 values");
    DerivativeStack st(A, A);
    for (int l = 0; l <= A; ++l) st.at(0, l) = sups[l];
    return st;
}

DerivativeStack shift_x(const DerivativeStack& s) {
    require(s.k_max >= 1, "shift_x: stack has no x-derivatives");
    DerivativeStack r(s.k_max - 1, s.l_max);
    for (int k = 0; k <= r.k_max; ++k)
        for (int l = 0; l <= r.l_max; ++l) r.at(k, l) = s(k + 1, l);
    return r;
}

DerivativeStack shift_u(const DerivativeStack& s) {
    require(s.l_max >= 1, "shift_u: stack has no u-derivatives");
    DerivativeStack r(s.k_max, s.l_max - 1);
    for (int k = 0; k <= r.k_max; ++k)
        for (int l = 0; l <= r.l_max; ++l) r.at(k, l) = s(k, l + 1);
    return r;
}

double norm_value(const DerivativeStack& s, double lambda, int a) {
    require(lambda >= 0.0, "norm: lambda must be >= 0");
    require(a >= 0, "norm: order a must be >= 0");
    return ladder_poly(s, lambda, a);
}

NormLadder norm_family(const DerivativeStack& s, double lambda) {
    require(lambda >= 0.0, "norm_family: lambda must be >= 0");
    NormLadder n;
    n.lambda = lambda;
    n.A = std::max(s.k_max, s.l_max);
    n.values_a.resize(n.A + 1);
    for (int a = 0; a <= n.A; ++a) {
        n.values_a[a] = ladder_poly(s, lambda, a);
        const double fa = factorial(a);
        n.H += n.values_a[a] / (fa * fa);
        if (a >= 1) n.Htilde += a * a * n.values_a[a] / (fa * fa);
    }
    n.next = ladder_poly(s, lambda, n.A + 1);
    return n;
}

void write_ladder(std::ostream& os, const NormLadder& n) {
    os << "lambda " << format_double(n.lambda) << " A " << n.A << " H " << format_double(n.H) << " Htilde "
       << format_double(n.Htilde) << '\n';
    for (int a = 0; a <= n.A; ++a) os << a << ' ' << format_double(n.values_a[a]) << '\n';
}

MuValue mu(double lambda_bar, int p, double tol) {
    require(lambda_bar > 0.0, "mu: lambda_bar must be > 0");
    require(p >= 1, "mu: p must be >= 1");
    double term = factorial(p);
    double sum = term;
    int a = 0;
    for (; a < 1000000; ++a) {
        const double ratio = (a + 1.0 + p) / ((a + 1.0) * (a + 1.0) * lambda_bar);
        term *= ratio;
        sum += term;
        if (ratio < 1.0 && term < tol * sum) break;
    }
    return {sum, a + 2};
}

double LemmaReport::min_slack() const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& c : checks)
        if (!c.identity) m = std::min(m, c.slack);
    return m;
}

double LemmaReport::max_identity_residual(const std::string& prefix) const {
    double m = 0.0;
    for (const auto& c : checks)
        if (c.identity && c.name.rfind(prefix, 0) == 0) m = std::max(m, -c.slack);
    return m;
}

const LemmaSlack& LemmaReport::find(const std::string& name) const {
    for (const auto& c : checks)
        if (c.name == name) return c;
    throw InvalidInput("no lemma check named " + name);
}

LemmaReport lemma_checks(const LemmaStacks& st, double lambda, double fd_step) {
    require(lambda >= 0.0, "lemma_checks: lambda must be >= 0");
    const int A = st.psi.k_max;
    for (const DerivativeStack* s : {&st.psi, &st.psi1, &st.psi2, &st.product, &st.f, &st.v, &st.w})
        if (s->k_max != A || s->l_max != A) throw InvalidInput("lemma_checks: stacks must share the truncation A");
    require(A >= 1, "lemma_checks: A must be >= 1");

    LemmaReport rep;

    const DerivativeStack dx = shift_x(st.psi), du = shift_u(st.psi);
    for (int a = 0; a < A; ++a) {
        rep.checks.push_back(identity("derivative_split a=" + std::to_string(a), ladder_poly(st.psi, lambda, a + 1),
                                      ladder_poly(dx, lambda, a) + ladder_poly(du, lambda, a)));
    }

    const NormLadder psi = norm_family(st.psi, lambda);
    const double dH = (aggregate_H(st.psi, lambda + fd_step, A) - aggregate_H(st.psi, lambda - fd_step, A)) /
                      (2.0 * fd_step);
    const double fA = factorial(A);
    rep.checks.push_back(identity("lambda_derivative", dH, psi.Htilde + psi.next / (fA * fA)));

    rep.checks.push_back(inequality("product", norm_value(st.product, lambda, 0),
                                    norm_value(st.psi1, lambda, 0) * norm_value(st.psi2, lambda, 0)));

    const NormLadder f = norm_family(st.f, lambda), v = norm_family(st.v, lambda), w = norm_family(st.w, lambda);
    const std::vector<double> lf = full_ladder(f), lv = full_ladder(v), lw = full_ladder(w);
    const int a_max = A - 1;

    rep.checks.push_back(
        inequality("three_functions", leibniz_lhs({&lf, &lv, &lw}, {0, 1, 1}, a_max), f.H * v.Htilde * w.Htilde));
    const double two = leibniz_lhs({&lf, &lv}, {1, 1}, a_max);
    rep.checks.push_back(inequality("two_functions_i", two, 16.0 * (f.H * v.Htilde + f.Htilde * v.H)));
    rep.checks.push_back(inequality("two_functions_ii", two, 4.0 * v.Htilde * (4.0 * f.H + f.Htilde)));
    rep.checks.push_back(inequality("cond_mean_i", leibniz_lhs({&lf, &lv}, {0, 1}, a_max), f.H * v.Htilde));
    rep.checks.push_back(
        inequality("cond_mean_ii", leibniz_lhs({&lf, &lw, &lv}, {0, 0, 1}, a_max), f.H * w.H * v.Htilde));
    return rep;
}

NormCriterionReport norm_criterion_bound(double C, double lambda_bar, int m, int n, const DerivativeStack& s,
                                         double lambda) {
    require(lambda_bar > 0.0, "norm_criterion_bound: lambda_bar must be > 0");
    require(lambda >= 0.0, "norm_criterion_bound: lambda must be >= 0");
    if (lambda >= lambda_bar) throw InvalidInput("norm_criterion_bound: lambda must be < lambda_bar");
    require(m >= 0 && n >= 0, "norm_criterion_bound: m, n must be >= 0");
    NormCriterionReport rep;
    for (int k = 0; k <= s.k_max; ++k) {
        for (int l = 0; l <= s.l_max; ++l) {
            const double bound = C * factorial(l + m) * factorial(k + n) / std::pow(lambda_bar, k + l);
            if (s(k, l) > bound) {
                rep.hypothesis_holds = false;
                rep.violations.push_back({k, l, s(k, l), bound});
            }
        }
    }
    const NormLadder nl = norm_family(s, lambda);
    rep.H = nl.H;
    rep.Htilde = nl.Htilde;
    rep.H_bound = C * mu(lambda_bar, m + n + 1).value;
    rep.Htilde_bound = C / lambda_bar * mu(lambda_bar, m + n + 2).value;
    return rep;
}

}  // namespace kinvfp
