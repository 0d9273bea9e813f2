#pragma once

#include "kinvfp/linear_fp.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

namespace kinvfp {

using PhaseFunction = std::function<double(double t, double x, double u)>;
using InitialFunction = std::function<double(double x, double u)>;

struct ProbeRequest {
    double t = 0.0;
    double x = 0.0;
    double u = 0.0;
    int paths = 10000;
    double dt_sde = 1e-3;
    std::uint64_t seed = 1;
    bool antithetic = false;
};

// Coefficients of d_t f + u d_x f - phi d_u f - (sigma^2/2) d_u^2 f = c f + F,
// i.e. the representation weight is exp(+int c). Empty c or F mean zero.
struct FkProblem {
    PhaseFunction phi;
    PhaseFunction c;
    PhaseFunction F;
    InitialFunction f0;
    double sigma = 1.0;
};

struct FkEstimate {
    double mean = 0.0;
    double stderr_ = 0.0;
    int samples = 0;  // independent samples (pairs when antithetic)
    int flagged = 0;  // paths with a non-finite weight, excluded
};

// Backward characteristics from (x,u): X' = -U, dU = phi(t-r, X, U) dr + sigma dW
// for r in [0,t], with the weight exp(int c) by the midpoint rule.
FkEstimate fk_estimate(const ProbeRequest& req, const FkProblem& prob);

// phi = b and c = r of the stepper, evaluated through a refined sampler.
FkProblem fk_problem(const LinearStepper& stepper, InitialFunction f0, int refine = 32);

struct ProbePoint {
    double x = 0.0;
    double u = 0.0;
};

struct ProbeResult {
    ProbePoint at;
    double t = 0.0;
    double pde = 0.0;
    FkEstimate mc;
    double diff = 0.0;
    double z = 0.0;       // diff / stderr
    double budget = 0.0;  // 3 stderr + eps_disc * scale
    bool pass = false;
};

struct OracleReport {
    double scale = 0.0;
    std::vector<ProbeResult> probes;
    bool ok() const;
    double max_abs_z() const;
};

struct OracleOptions {
    int paths = 100000;
    double dt_sde = 1e-3;
    std::uint64_t seed = 1;
    double eps_disc = 5e-3;
    bool antithetic = false;
    int refine = 32;
};

// Compares the final snapshot of a trajectory with the estimator at each
// probe. Probes need |u| <= u_max - 2 sigma sqrt(T).
OracleReport oracle_compare(const Trajectory& tr, const LinearStepper& stepper, const InitialFunction& f0,
                            const std::vector<ProbePoint>& probes, const OracleOptions& opts = {});

void write_oracle_report(std::ostream& os, const OracleReport& r);

}  // namespace kinvfp
