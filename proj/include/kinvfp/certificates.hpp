#pragma once

#include "kinvfp/analytic_norms.hpp"
#include "kinvfp/linear_fp.hpp"
#include "kinvfp/weight_model.hpp"

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace kinvfp {

struct GammaConstants {
    double lambda0 = 0.0;
    int A = 0;
    double gamma0 = 0.0;      // ||ln w||_{H~, lambda0}, A-truncated
    double gamma1 = 0.0;      // ||h||_{H, lambda0}
    double gamma1_hat = 0.0;  // ||h_hat||_{H, lambda0}
    double C_omega = 0.0;
    // bounds on the omitted orders l > A, from the factorial derivative bounds
    double tail0 = 0.0;
    double tail1 = 0.0;
    double tail1_hat = 0.0;
    std::vector<double> sups_lnw;  // sup |d^l ln w|, l = 0..A (l = 0 entry unused, stored as 0)
    std::vector<double> sups_h;
    std::vector<double> sups_h_hat;
};

// Requires 0 <= lambda0 < 1/4 and A >= 1.
GammaConstants gamma_constants(const WeightModel& w, double lambda0, int A);

enum KappaBranch : unsigned {
    branch_radius = 1u << 0,   // lambda0 / (...)
    branch_mu = 1u << 1,       // 2 lambda_bar mu(m+n+1) / mu(m+n+2)
    branch_one = 1u << 2,      // constant 1 (beta != 0 only)
    branch_log = 1u << 3,      // -ln(M(1+gamma0)...) / (...)
    branch_ln2 = 1u << 4,      // (ln 2 - M(16+gamma0)) / (...)
    branch_all = 0x1fu,
};

struct KappaBundle {
    bool primed = false;  // beta != 0 formulas
    double kappa0 = 0.0;
    double kappa1 = 0.0;
    double M = 0.0;
    double K = 0.0;
    double mu1 = 0.0;  // mu(lambda_bar, m+n+1)
    double mu2 = 0.0;  // mu(lambda_bar, m+n+2)
    std::vector<std::string> names;
    std::vector<double> branches;
    std::vector<unsigned> bits;
    unsigned mask = branch_all;
    int binding = -1;            // index of the active minimum
    bool hypothesis_ok = false;  // C0 < kappa0
    bool degenerate = false;     // C0 == 0
    bool admissible() const { return hypothesis_ok && kappa1 > 0.0; }
};

KappaBundle kappa_bundle(double C0, double lambda_bar, int m, int n, const ModelParams& params,
                         const WeightModel& w, const GammaConstants& gam, unsigned mask = branch_all);

struct ConditionCheck {
    std::string name;
    double lhs = 0.0;
    double rhs = 0.0;
    bool strict = true;
    bool holds = false;
    std::string note;
};

struct CertificateReport {
    GammaConstants gammas;
    std::map<int, double> mu_values;
    KappaBundle kappa;
    bool has_kappa = false;
    double T = 0.0;
    double M = 0.0;
    double K = 0.0;
    double g0_H = 0.0;
    double g0_Htilde = 0.0;
    std::vector<ConditionCheck> conditions;  // a) .. e)
    bool certified = false;
    bool degenerate = false;

    const ConditionCheck& condition(char c) const { return conditions.at(c - 'a'); }
    std::string failing() const;  // names of failed conditions
};

// Conditions a)-e) with truncated norms of g0 at lambda0. A NaN K selects the
// value that makes b) an equality.
CertificateReport check_conditions(const DerivativeStack& g0, double T, double M, double K, const ModelParams& params,
                                   const GammaConstants& gam);

struct CertifyOptions {
    double lambda0 = 0.1;
    int A = 4;
    double T = 0.0;          // 0: from kappa_bundle, else scan
    double T_floor = 1e-8;   // smallest T tried by the scan
    int scan_points = 64;
};

struct CertificationAttempt {
    CertificateReport report;  // at the chosen (or smallest scanned) T
    double C0 = 0.0;           // constant used in kappa_bundle
    bool C0_measured = false;  // taken from the grid when the input leaves it 0
    std::vector<std::pair<double, bool>> scan;  // (T, certified)
    std::string binding;       // condition that fails at the smallest T
};

// End to end: g0 = w f0 on the grid, constants, kappa bundle, then a T from
// kappa1 or a geometric scan down to T_floor.
CertificationAttempt certify(const InitialDataSpec& spec, const PhaseGrid& grid, const ModelParams& params,
                             const CertifyOptions& opts);

void write_certificate(std::ostream& os, const CertificateReport& r);

}  // namespace kinvfp
