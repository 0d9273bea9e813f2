#pragma once

#include "kinvfp/certificates.hpp"
#include "kinvfp/linear_fp.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace kinvfp {

struct PicardConfig {
    double lambda0 = 0.1;
    double K = 1.0;
    double T = 0.01;
    double M = 1.0;
    int A = 4;
    int nt = 10;
    double tol_fp = 0.0;  // 0: 1e-8 times the metric of the constant-in-time g0
    int max_iter = 50;
    bool waive_ball_check = true;
    int metric_stride = 1;  // slices used by the metric and ball checks

    void validate() const;
    double lambda_at(double t) const { return lambda0 - (1.0 + K) * t; }
};

// Q = -int u^2/w g du and, when alpha = 1, H = int u/w g du at every snapshot.
CoefficientFields source_fields(const Trajectory& tr, const WeightModel& w, const ModelParams& params);

struct DominationCheck {
    double Q_norm = 0.0;  // ||Q||_{H, lambda}
    double H_norm = 0.0;  // ||H||_{H, lambda}
    double g_norm = 0.0;  // ||g||_{H, lambda}
    double C_omega = 0.0;
    bool ok() const { return Q_norm <= g_norm * (1 + 1e-12) && H_norm <= C_omega * g_norm * (1 + 1e-12); }
};

// Spot check ||Q|| <= ||g|| and ||H|| <= C_w ||g|| on one slice.
DominationCheck source_domination(const PhaseField& g, const WeightModel& w, int A, double lambda);

// max{ max_t ||psi(t)||_{lambda(t),0}, int_0^T ||psi(t)||_{lambda(t),1} dt } over the snapshots
// (trapezoid in time), with A-truncated norms.
double contraction_metric(const Trajectory& psi, const PicardConfig& cfg);

// Same for the difference of two trajectories on the same time mesh.
double contraction_distance(const Trajectory& a, const Trajectory& b, const PicardConfig& cfg);

struct BallReport {
    double sup_H = 0.0;         // sup_t ||g(t)||_{H, lambda(t)}
    double int_Htilde = 0.0;    // int_0^T ||g(t)||_{H~, lambda(t)} dt
    double M = 0.0;
    bool member() const { return sup_H <= M && int_Htilde <= M; }
};

BallReport ball_membership(const Trajectory& g, const PicardConfig& cfg);

enum class PicardStatus { converged, max_iter, diverged };
std::string to_string(PicardStatus s);

struct PicardResult {
    Trajectory solution;
    CoefficientFields coeffs;    // extracted from the solution
    std::vector<double> D;       // D_n = metric(g_n - g_{n-1}), n >= 1
    std::vector<double> ratios;  // r_n = D_{n+1} / D_n
    PicardStatus status = PicardStatus::max_iter;
    int iterations = 0;
    double tol = 0.0;
    double residual_fp = 0.0;  // metric(Phi(g) - g) for the returned g
    BallReport initial_ball;
    double M_hat = 0.0;        // closure bound ||g0||_H exp{T(gamma1+16 gamma0) + (16+gamma0) M2}
    double M2 = 0.0;           // int ||Q||_{H~} dt of the final coefficients
};

// g_{n+1} = Phi(g_n) starting from the constant-in-time g0, stopping at
// D_n <= tol, at max_iter, or after D_n grows for 3 consecutive iterations.
PicardResult iterate(const PhaseField& g0, const PicardConfig& cfg, const ModelParams& params, const WeightModel& w,
                     const GammaConstants* gammas = nullptr);

// CSV: n,D_n,r_n
void write_picard_log(std::ostream& os, const PicardResult& r);

}  // namespace kinvfp
