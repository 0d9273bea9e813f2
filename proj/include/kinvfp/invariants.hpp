#pragma once

#include "kinvfp/certificates.hpp"
#include "kinvfp/linear_fp.hpp"
#include "kinvfp/picard.hpp"

#include <iosfwd>
#include <vector>

namespace kinvfp {

struct HuReport {
    double mass_uniformity = 0.0;   // sup_x |rho - 1|
    double incompressibility = 0.0; // sup_x |d_x V|
    double tol = 0.0;
    bool pass() const { return mass_uniformity <= tol && incompressibility <= tol; }
};

// Needs kind f.
HuReport check_Hu(const PhaseField& f, double tol);

struct SliceInvariants {
    double t = 0.0;
    double mass_uniformity = 0.0;
    double incompressibility = 0.0;
    double total_mass = 0.0;      // int int f dx du
    double continuity = 0.0;      // sup_x |d_t rho + d_x V|
    double second_moment = 0.0;   // sup_x |d_t d_x V + beta d_x V + d_x((rho-1) d_x P) - alpha beta d_x(rho V)|
    double gronwall_slack = 0.0;  // NaN when not computed
};

struct InvariantReport {
    std::vector<SliceInvariants> slices;
    double total_mass_drift = 0.0;  // max_t |int int f - 1|
    double scale = 0.0;             // max_t sup|f|

    double max_mass_uniformity() const;
    double max_incompressibility() const;
    double max_continuity() const;
    double max_second_moment() const;
};

// Moments of each snapshot (converted with w when the trajectory holds g),
// with d_t by second-order differences. The trajectory must store every step.
InvariantReport moment_residuals(const Trajectory& tr, const ModelParams& params, const WeightModel* w = nullptr);

struct GronwallSlice {
    double t = 0.0;
    double lhs = 0.0;  // d/dt ||g(t)||_{H, lambda(t); A}
    double rhs = 0.0;
    double slack = 0.0;
    double scale = 0.0;
};

struct GronwallReport {
    std::vector<GronwallSlice> slices;
    double scale = 0.0;
    double min_slack() const;
    bool ok(double rel_tol = 1e-2) const { return min_slack() >= -rel_tol * scale; }
};

// Norm-evolution inequality for the weighted linear equation driven by
// coeffs, with lambda(t) = lambda0 - (1+K) t from cfg and the constants in gam.
GronwallReport gronwall_diagnostic(const Trajectory& g, const CoefficientFields& coeffs, const PicardConfig& cfg,
                                   const ModelParams& params, const GammaConstants& gam);

void attach_gronwall(InvariantReport& rep, const GronwallReport& gr);

struct DriftDecayReport {
    double max_mass_uniformity = 0.0;
    double max_incompressibility = 0.0;
    double max_continuity = 0.0;
    double decay_residual = 0.0;  // max_t sup_x |d_x V(t) - e^{-beta t} d_x V(0)|
    double tol = 0.0;
    bool pass() const { return max_mass_uniformity <= tol && max_incompressibility <= tol; }
};

DriftDecayReport drift_decay(const Trajectory& tr, const ModelParams& params, double tol,
                             const WeightModel* w = nullptr);

// CSV: t,mass_uniformity,incompressibility,continuity_residual,second_moment_residual,gronwall_slack
void write_invariants_csv(std::ostream& os, const InvariantReport& r);

}  // namespace kinvfp
