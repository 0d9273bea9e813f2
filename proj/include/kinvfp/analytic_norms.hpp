#pragma once

#include "kinvfp/phase_grid.hpp"

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace kinvfp {

// Table of sup norms of d_x^k d_u^l psi for k <= k_max, l <= l_max.
struct DerivativeStack {
    int k_max = 0;
    int l_max = 0;
    std::vector<double> table;  // row-major in k

    DerivativeStack() = default;
    DerivativeStack(int k_max, int l_max);

    double operator()(int k, int l) const { return table[static_cast<std::size_t>(k) * (l_max + 1) + l]; }
    double& at(int k, int l) { return table[static_cast<std::size_t>(k) * (l_max + 1) + l]; }
    bool square() const { return k_max == l_max; }
    int order() const { return k_max; }
};

// x-derivatives spectral, u-derivatives by repeated 6th-order differences
// (7-point stencils, one-sided near the cutoff). Needs nx >= 4*max(k_max,1)
// and nu >= 8*max(l_max,1).
DerivativeStack build_stack(const PhaseField& field, int k_max, int l_max);
inline DerivativeStack build_stack(const PhaseField& field, int A) { return build_stack(field, A, A); }

// Stack of an x-only periodic profile sampled at nx points; l > 0 entries are zero.
DerivativeStack build_stack_x(std::span<const double> v, int A);

// Stack of a u-only function from its derivative sups; k > 0 entries are zero.
DerivativeStack stack_from_u_sups(std::span<const double> sups, int A);

// Tables of d_x psi and d_u psi read off the table of psi.
DerivativeStack shift_x(const DerivativeStack& s);
DerivativeStack shift_u(const DerivativeStack& s);

// ||psi||_{lambda,a} from the (possibly rectangular) table; any a >= 0.
double norm_value(const DerivativeStack& s, double lambda, int a);

struct NormLadder {
    double lambda = 0.0;
    int A = 0;
    std::vector<double> values_a;  // a = 0..A
    double next = 0.0;             // a = A+1, enters d/dlambda of H
    double H = 0.0;
    double Htilde = 0.0;
};

NormLadder norm_family(const DerivativeStack& s, double lambda);

// Text dump: a header line then one "a value" line per order.
void write_ladder(std::ostream& os, const NormLadder& n);

// mu(lambda_bar, p) = sum_a (a+1)...(a+p) / (a! lambda_bar^a)
struct MuValue {
    double value = 0.0;
    int terms = 0;
};
MuValue mu(double lambda_bar, int p, double tol = 1e-16);

struct LemmaSlack {
    std::string name;
    double lhs = 0.0;
    double rhs = 0.0;
    // inequalities: (rhs - lhs) / max(rhs, tiny); identities: -|lhs - rhs| / max(|rhs|, tiny)
    double slack = 0.0;
    bool identity = false;
};

struct LemmaStacks {
    const DerivativeStack& psi;
    const DerivativeStack& psi1;
    const DerivativeStack& psi2;
    const DerivativeStack& product;  // stack of psi1*psi2
    const DerivativeStack& f;
    const DerivativeStack& v;
    const DerivativeStack& w;
};

struct LemmaReport {
    std::vector<LemmaSlack> checks;
    double min_slack() const;  // over the inequalities
    double max_identity_residual(const std::string& prefix) const;
    const LemmaSlack& find(const std::string& name) const;
};

// Derivative/identity checks and the product inequalities, all in
// A-truncated form. For the product inequalities the left side sums the
// lambda-derivative orders up to A-1, so every ladder index used is <= A.
LemmaReport lemma_checks(const LemmaStacks& st, double lambda, double fd_step = 1e-5);

struct CriterionViolation {
    int k;  // x order
    int l;  // u order
    double value;
    double bound;
};

struct NormCriterionReport {
    bool hypothesis_holds = true;
    std::vector<CriterionViolation> violations;
    double H = 0.0;
    double H_bound = 0.0;       // C mu(lambda_bar, m+n+1)
    double Htilde = 0.0;
    double Htilde_bound = 0.0;  // C/lambda_bar mu(lambda_bar, m+n+2)
    bool ok() const { return hypothesis_holds && H <= H_bound && Htilde <= Htilde_bound; }
};

// Hypothesis on the table: entry(k,l) <= C (l+m)! (k+n)! / lambda_bar^(k+l).
NormCriterionReport norm_criterion_bound(double C, double lambda_bar, int m, int n, const DerivativeStack& s,
                                         double lambda);

}  // namespace kinvfp
