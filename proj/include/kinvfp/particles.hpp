#pragma once

#include "kinvfp/linear_fp.hpp"
#include "kinvfp/phase_grid.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace kinvfp {

// Particles on the torus [0,1) x R. Gaussian increments come in Box-Muller
// pairs shared by particles 2m and 2m+1; `counter` is the number of uniforms
// each pair stream has consumed, identical for every stream.
struct ParticleEnsemble {
    std::vector<double> x;
    std::vector<double> u;
    double t = 0.0;
    std::uint64_t seed = 0;
    std::uint64_t counter = 0;

    std::size_t size() const { return x.size(); }
};

double wrap_unit(double x);

// Positions by inverse CDF of rho0 (tabulated on a fine x mesh), velocities
// by rejection against the Gaussian envelope restricted to |u| <= u_max
// (0: 8 sqrt(var)).
ParticleEnsemble init_ensemble(std::size_t N, const InitialDataSpec& spec, std::uint64_t seed, double u_max = 0.0);

struct BinnedMoments {
    std::vector<double> centers;
    std::vector<double> V;  // bin mean of u
    std::vector<double> S;  // bin mean of u^2
    std::vector<std::size_t> counts;

    double V_at(double x) const;
    double S_at(double x) const;
};

// Requires N / n_bins >= 50 and no empty bin.
BinnedMoments conditional_moments(const ParticleEnsemble& e, int n_bins);

enum class DriftMode { field_coupled, self_consistent };
std::string to_string(DriftMode m);

struct DriftSpec {
    DriftMode mode = DriftMode::self_consistent;
    const CoefficientFields* fields = nullptr;  // field_coupled: Q and H on a uniform x mesh
    int refine = 32;                            // field_coupled: x refinement of the lookup tables
    int n_bins = 32;                            // self_consistent
    double smoothing = 1.0;                     // self_consistent: Gaussian width in bin widths (0: none)
};

struct StepReport {
    int steps = 0;
    bool outside_hypothesis = false;  // sigma = 0
};

// Euler-Maruyama
//   x <- wrap(x + u dt)
//   u <- u + [-d_x P(x) - beta (u - alpha V(x))] dt + sigma sqrt(dt) xi
// with (P, V) = (Q, H) of the fields, or (-S^, V^) of the ensemble refreshed every step.
StepReport step_trajectory(ParticleEnsemble& e, const DriftSpec& drift, const ModelParams& params, double dt,
                           int n_steps);

struct UniformityResult {
    double chi2 = 0.0;
    int dof = 0;
    double p_value = 0.0;     // upper tail of chi^2_{dof}
    double chi2_q99 = 0.0;
    double ks = 0.0;          // sup |F_N - x|
    double ks_crit_1pct = 0.0;
    bool pass_chi2() const { return chi2 <= chi2_q99; }
    bool pass_ks() const { return ks <= ks_crit_1pct; }
    bool pass() const { return pass_chi2() && pass_ks(); }
};

// Requires N >= 1e4.
UniformityResult uniformity_test(const ParticleEnsemble& e, int n_bins);

struct VelocityStats {
    double mean = 0.0;
    double var = 0.0;
    double var_stderr = 0.0;  // sqrt((m4 - var^2) / N)
};
VelocityStats velocity_stats(const ParticleEnsemble& e);

// Half the l1 distance between the particle histogram and the mass of f on
// nbx x nbu bins covering [0,1) x [-u_max, u_max].
double histogram_tv(const ParticleEnsemble& e, const PhaseField& f, int nbx, int nbu);

// Header "KINVFP-P v1 N t seed", then N lines "x u".
void write_ensemble(std::ostream& os, const ParticleEnsemble& e);
ParticleEnsemble read_ensemble(std::istream& is);
void save_ensemble(const std::string& path, const ParticleEnsemble& e);
ParticleEnsemble load_ensemble(const std::string& path);

struct ParticleStatsRow {
    double t = 0.0;
    UniformityResult uniformity;
    VelocityStats velocity;
};
ParticleStatsRow particle_stats(const ParticleEnsemble& e, int n_bins);

// CSV: t,chi2,chi2_q99,p_value,ks,ks_crit_1pct,mean_u,var_u,var_stderr
void write_particle_stats(std::ostream& os, const std::vector<ParticleStatsRow>& rows);

}  // namespace kinvfp
