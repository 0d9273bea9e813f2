#include "kinvfp/certificates.hpp"

#include "kinvfp/error.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>

namespace kinvfp {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

// Omitted part of the H (weight_a = 1) or H~ (weight_a = a^2) norm of a
// u-only function when only orders l <= A are kept, given log bounds on
// sup |d^l f| for l > A.
template <class LogBound>
double truncation_tail(double lambda, int A, bool tilde, LogBound log_bound) {
    double tail = 0.0;
    for (int l = A + 1; l < 4000; ++l) {
        const double lb = log_bound(l);
        double row = 0.0;
        for (int a = tilde ? 1 : 0; a <= l; ++a) {
            if (lambda == 0.0 && a != l) continue;
            double lt = lb - std::lgamma(l - a + 1.0) - 2.0 * std::lgamma(a + 1.0);
            if (a != l) lt += (l - a) * std::log(lambda);
            if (tilde) lt += 2.0 * std::log(static_cast<double>(a));
            row += std::exp(lt);
        }
        tail += row;
        if (!std::isfinite(tail)) return inf;
        if (l > A + 8 && row <= 1e-17 * tail) break;
    }
    return tail;
}

double log_fact(int n) { return std::lgamma(n + 1.0); }

ConditionCheck make_check(std::string name, double lhs, double rhs, bool strict, std::string note = {}) {
    ConditionCheck c{std::move(name), lhs, rhs, strict, false, std::move(note)};
    c.holds = strict ? lhs < rhs : lhs <= rhs;
    return c;
}

}  // namespace

GammaConstants gamma_constants(const WeightModel& weight, double lambda0, int A) {
    if (!(lambda0 >= 0.0 && lambda0 < 0.25))
        throw InvalidInput("gamma_constants: lambda0 must lie in [0, 1/4), where the weight is analytic with the "
                           "factorial derivative bounds (got " + std::to_string(lambda0) + ")");
    require(A >= 1, "gamma_constants: A must be >= 1");
    std::optional<WeightModel> local;
    if (A + 1 > weight.l_max()) local.emplace(weight.s(), weight.beta(), A + 1);
    const WeightModel& w = local ? *local : weight;

    GammaConstants g;
    g.lambda0 = lambda0;
    g.A = A;
    g.C_omega = w.c_omega();
    g.sups_lnw.assign(A + 1, 0.0);
    g.sups_h.assign(A + 1, 0.0);
    g.sups_h_hat.assign(A + 1, 0.0);
    for (int l = 0; l <= A; ++l) {
        if (l >= 1)
            g.sups_lnw[l] = sup_abs_on_line([&](double u) { return w.ladder_value(LadderKind::dlnw, l, u); },
                                            [&](double u) { return w.ladder_value(LadderKind::dlnw, l + 1, u); });
        g.sups_h[l] = sup_abs_on_line([&](double u) { return w.ladder_value(LadderKind::h, l, u); },
                                      [&](double u) { return w.ladder_value(LadderKind::h, l + 1, u); });
        g.sups_h_hat[l] = sup_abs_on_line([&](double u) { return w.h_hat_derivative(l, u); },
                                          [&](double u) { return w.h_hat_derivative(l + 1, u); });
    }
    g.gamma0 = norm_family(stack_from_u_sups(g.sups_lnw, A), lambda0).Htilde;
    g.gamma1 = norm_family(stack_from_u_sups(g.sups_h, A), lambda0).H;
    g.gamma1_hat = norm_family(stack_from_u_sups(g.sups_h_hat, A), lambda0).H;

    const double s = w.s(), ln4 = std::log(4.0);
    // d^l ln w = d^(l-1)(d ln w) <= s 4^(l-1) (l+1)!
    g.tail0 = truncation_tail(lambda0, A, true, [&](int l) { return std::log(s) + (l - 1) * ln4 + log_fact(l + 1); });
    // d^l h <= (s+s^2)/4 4^l (l+3)!
    const auto log_bh = [&](int l) { return std::log((s + s * s) / 4.0) + l * ln4 + log_fact(l + 3); };
    g.tail1 = truncation_tail(lambda0, A, false, log_bh);
    // d^l h_hat = d^l h + beta d^l (s/(1+u^2)), and |d^l 1/(1+u^2)| <= l!
    const double b = std::abs(w.beta());
    g.tail1_hat = truncation_tail(lambda0, A, false, [&](int l) {
        const double x = log_bh(l), y = b > 0.0 ? std::log(b * s) + log_fact(l) : -inf;
        return std::max(x, y) + std::log1p(std::exp(std::min(x, y) - std::max(x, y)));
    });
    return g;
}

KappaBundle kappa_bundle(double C0, double lambda_bar, int m, int n, const ModelParams& params, const WeightModel& w,
                         const GammaConstants& gam, unsigned mask) {
    require(C0 >= 0.0, "kappa_bundle: C0 must be non-negative");
    require(lambda_bar > 0.0, "kappa_bundle: lambda_bar must be positive");
    require(m >= 0 && n >= 0, "kappa_bundle: m, n must be non-negative");
    require(gam.lambda0 < std::min(lambda_bar, 0.25), "kappa_bundle: lambda0 must be below min(lambda_bar, 1/4)");
    require(w.s() >= 4 && w.s() % 2 == 0, "kappa_bundle: s must be even and >= 4");

    KappaBundle kb;
    kb.mask = mask;
    kb.primed = params.beta != 0.0;
    kb.mu1 = mu(lambda_bar, m + n + 1).value;
    kb.mu2 = mu(lambda_bar, m + n + 2).value;
    const double g0 = gam.gamma0, lam0 = gam.lambda0, kap = w.kappa();
    const double ab = params.alpha * params.beta, Cw = gam.C_omega;
    kb.kappa0 = std::log(2.0) / (2.0 * kap * std::exp(lambda_bar) * kb.mu1 * (16.0 + g0));
    kb.M = 2.0 * C0 * kap * std::exp(lambda_bar) * kb.mu1;
    const double M = kb.M;
    kb.degenerate = C0 == 0.0;

    const auto neg_log_ratio = [](double arg, double den) {
        if (arg <= 0.0) return inf;
        return -std::log(arg) / den;
    };
    const auto add = [&](const char* name, unsigned bit, double v) {
        kb.names.emplace_back(name);
        kb.bits.push_back(bit);
        kb.branches.push_back(v);
    };
    if (!kb.primed) {
        add("radius", branch_radius, lam0 / (16.0 * M + lam0 + 4.0 * g0 + 2.0));
        add("mu", branch_mu, 2.0 * lambda_bar * kb.mu1 / kb.mu2);
        add("log", branch_log, neg_log_ratio(M * (1.0 + g0), M * g0 + gam.gamma1));
        add("ln2", branch_ln2, (std::log(2.0) - M * (16.0 + g0)) / (gam.gamma1 + 16.0 * g0));
        kb.K = 16.0 * M + lam0 + 4.0 * g0 + 1.0;
    } else {
        const double b = params.beta;
        kb.kappa0 /= 1.0 + Cw * ab;
        add("radius", branch_radius,
            (1.0 + b) * lam0 / (1.0 + 4.0 * g0 + (1.0 + b) * (1.0 + lam0) + (16.0 + ab) * M));
        add("mu", branch_mu, 2.0 * lambda_bar * kb.mu1 / kb.mu2);
        add("one", branch_one, 1.0);
        add("log", branch_log,
            neg_log_ratio(M * (1.0 + g0) * (1.0 + Cw * ab), M * (1.0 + Cw * ab) * g0 + gam.gamma1_hat));
        add("ln2", branch_ln2,
            (std::log(2.0) - M * (16.0 + g0)) / (gam.gamma1_hat + 16.0 * g0 + ab * Cw * M));
        kb.K = (1.0 + 4.0 * g0 + M * (16.0 + ab)) / (1.0 + b) + lam0;
    }
    kb.kappa1 = inf;
    for (std::size_t i = 0; i < kb.branches.size(); ++i) {
        if (!(mask & kb.bits[i])) continue;
        if (kb.branches[i] < kb.kappa1) {
            kb.kappa1 = kb.branches[i];
            kb.binding = static_cast<int>(i);
        }
    }
    kb.hypothesis_ok = C0 < kb.kappa0;
    return kb;
}

std::string CertificateReport::failing() const {
    std::string s;
    for (const auto& c : conditions)
        if (!c.holds) s += (s.empty() ? "" : ",") + c.name;
    return s;
}

CertificateReport check_conditions(const DerivativeStack& g0, double T, double M, double K, const ModelParams& params,
                                   const GammaConstants& gam) {
    require(T >= 0.0, "check_conditions: T must be non-negative");
    require(M >= 0.0, "check_conditions: M must be non-negative");
    CertificateReport r;
    r.gammas = gam;
    r.T = T;
    r.M = M;
    const auto nf = norm_family(g0, gam.lambda0);
    r.g0_H = nf.H;
    r.g0_Htilde = nf.Htilde;

    const double lam0 = gam.lambda0, g0c = gam.gamma0, b = params.beta, ab = params.alpha * params.beta;
    const double Cw = gam.C_omega;
    const bool primed = b != 0.0;
    const double upper = T > 0.0 ? lam0 / T - 1.0 : inf;
    const double lower = primed ? (1.0 + 4.0 * g0c) / (1.0 + b) + lam0 : 1.0 + lam0 + 4.0 * g0c;
    if (std::isnan(K)) {
        K = primed ? (1.0 + 4.0 * g0c + M * (16.0 + ab)) / (1.0 + b) + lam0 : 16.0 * M + lam0 + 4.0 * g0c + 1.0;
        // with M = 0 the equality value sits on the open end of the interval
        if (M == 0.0) K = std::isfinite(upper) ? 0.5 * (lower + upper) : lower + 1.0;
    }
    r.K = K;

    if (!primed) {
        r.conditions.push_back(make_check("a", T, lam0 / (2.0 + lam0 + 4.0 * g0c), true));
    } else {
        r.conditions.push_back(
            make_check("a", T, (1.0 + b) * lam0 / (1.0 + 4.0 * g0c + (1.0 + b) * (1.0 + lam0)), true));
    }
    {
        const double mb = primed ? ((1.0 + b) * (K - lam0) - 4.0 * g0c - 1.0) / (16.0 + ab)
                                 : (K - lam0 - 4.0 * g0c - 1.0) / 16.0;
        std::ostringstream note;
        note << "K=" << K << " interval (" << lower << ", " << upper << ")";
        auto c = make_check("b", M, mb, false, note.str());
        // equality at the default K is exact in exact arithmetic; allow rounding
        c.holds = M <= mb * (1.0 + 1e-12) + 1e-300 && K > lower && K < upper;
        r.conditions.push_back(c);
    }
    if (!primed) {
        r.conditions.push_back(make_check("c", M * (1.0 + g0c) * std::exp((M * g0c + gam.gamma1) * T), 1.0, true));
    } else {
        r.conditions.push_back(make_check(
            "c", M * (1.0 + g0c) * (1.0 + T * Cw * ab) * std::exp((M * (1.0 + Cw * ab) * g0c + gam.gamma1_hat) * T),
            1.0, true));
    }
    r.conditions.push_back(make_check("d", std::max(r.g0_H, T * r.g0_Htilde), M, false));
    if (!primed) {
        r.conditions.push_back(make_check("e", r.g0_H * std::exp(T * (gam.gamma1 + 16.0 * g0c)),
                                          M * std::exp(-(16.0 + g0c) * M), false));
    } else {
        r.conditions.push_back(make_check("e", r.g0_H * std::exp(T * (gam.gamma1_hat + 16.0 * g0c + ab * g0c * Cw * M)),
                                          M * std::exp(-(16.0 + g0c) * M), true));
    }
    r.certified = true;
    for (const auto& c : r.conditions) r.certified = r.certified && c.holds;
    r.degenerate = M == 0.0;
    return r;
}

CertificationAttempt certify(const InitialDataSpec& spec, const PhaseGrid& grid, const ModelParams& params,
                             const CertifyOptions& opts) {
    spec.validate();
    params.validate();
    require(opts.T >= 0.0, "certify: T must be non-negative");
    require(opts.T_floor > 0.0 && opts.scan_points >= 2, "certify: bad scan settings");
    const auto w = make_weight(spec.s, params.beta);
    const auto gam = gamma_constants(w, opts.lambda0, opts.A);
    const auto g0 = weight_transform(make_initial_data(spec, grid), w, TransformDirection::to_weighted);
    const auto stack = build_stack(g0, opts.A);

    CertificationAttempt at;
    at.C0 = spec.C0;
    if (at.C0 <= 0.0) {
        at.C0 = verify_initial_bounds(spec, grid, opts.A, opts.A).smallest_C0;
        at.C0_measured = true;
    }
    const auto kb = kappa_bundle(at.C0, spec.lambda_bar, spec.m, spec.n, params, w, gam);
    const auto finish = [&](CertificateReport r) {
        r.kappa = kb;
        r.has_kappa = true;
        r.mu_values[spec.m + spec.n + 1] = kb.mu1;
        r.mu_values[spec.m + spec.n + 2] = kb.mu2;
        return r;
    };

    if (opts.T > 0.0) {
        at.report = finish(check_conditions(stack, opts.T, kb.M, NAN, params, gam));
        at.scan.emplace_back(opts.T, at.report.certified);
        at.binding = at.report.failing();
        return at;
    }
    if (kb.admissible() && std::isfinite(kb.kappa1)) {
        const double T = 0.5 * std::min(kb.kappa1, 1.0);
        at.report = finish(check_conditions(stack, T, kb.M, NAN, params, gam));
        at.scan.emplace_back(T, at.report.certified);
        if (at.report.certified) return at;
    }
    // geometric scan from the radius bound of a) down to T_floor
    const double lam0 = gam.lambda0, g0c = gam.gamma0;
    const double T_hi = params.beta == 0.0
                            ? lam0 / (2.0 + lam0 + 4.0 * g0c)
                            : (1.0 + params.beta) * lam0 / (1.0 + 4.0 * g0c + (1.0 + params.beta) * (1.0 + lam0));
    const double ratio = std::pow(opts.T_floor / T_hi, 1.0 / (opts.scan_points - 1));
    double T = T_hi * ratio;  // a) is strict
    CertificateReport last;
    for (int k = 1; k < opts.scan_points; ++k, T *= ratio) {
        last = check_conditions(stack, T, kb.M, NAN, params, gam);
        at.scan.emplace_back(T, last.certified);
        if (last.certified) {
            at.report = finish(last);
            return at;
        }
    }
    at.report = finish(last);
    at.binding = last.failing();
    return at;
}

void write_certificate(std::ostream& os, const CertificateReport& r) {
    const auto& g = r.gammas;
    os << "certificate " << (r.certified ? "CERTIFIED" : "NOT-CERTIFIED") << (r.degenerate ? " degenerate" : "")
       << "\n";
    os << "lambda0 " << g.lambda0 << "\nA " << g.A << "\n";
    os << "gamma0 " << g.gamma0 << " tail " << g.tail0 << "\n";
    os << "gamma1 " << g.gamma1 << " tail " << g.tail1 << "\n";
    os << "gamma1_hat " << g.gamma1_hat << " tail " << g.tail1_hat << "\n";
    os << "C_omega " << g.C_omega << "\n";
    for (const auto& [p, v] : r.mu_values) os << "mu p=" << p << " " << v << "\n";
    if (r.has_kappa) {
        const auto& k = r.kappa;
        os << (k.primed ? "kappa0' " : "kappa0 ") << k.kappa0 << "\n";
        os << (k.primed ? "kappa1' " : "kappa1 ") << k.kappa1 << "\n";
        for (std::size_t i = 0; i < k.branches.size(); ++i)
            os << "  branch " << k.names[i] << " " << k.branches[i] << (static_cast<int>(i) == k.binding ? " *" : "")
               << "\n";
        os << "hypothesis C0<kappa0 " << (k.hypothesis_ok ? "holds" : "fails") << "\n";
    }
    os << "T " << r.T << "\nM " << r.M << "\nK " << r.K << "\n";
    os << "g0_H " << r.g0_H << "\ng0_Htilde " << r.g0_Htilde << "\n";
    for (const auto& c : r.conditions)
        os << "condition " << c.name << " lhs " << c.lhs << (c.strict ? " < " : " <= ") << "rhs " << c.rhs << " "
           << (c.holds ? "holds" : "FAILS") << (c.note.empty() ? "" : " (" + c.note + ")") << "\n";
}

}  // namespace kinvfp
