#pragma once

#include "kinvfp/phase_grid.hpp"
#include "kinvfp/weight_model.hpp"

#include <memory>
#include <vector>

namespace kinvfp {

struct ModelParams {
    double sigma = 1.0;
    double beta = 0.0;
    int alpha = 0;

    void validate() const;
};

// Q(t,x) and H(t,x) stored at increasing times, linear in t between slices
// and held constant outside. An empty H means H = 0.
struct CoefficientFields {
    std::vector<double> times;
    std::vector<std::vector<double>> Q;
    std::vector<std::vector<double>> H;

    static CoefficientFields zero(int nx);
    static CoefficientFields frozen(std::vector<double> Q, std::vector<double> H = {});

    int nx() const { return Q.empty() ? 0 : static_cast<int>(Q.front().size()); }
    void validate(int nx) const;
    std::vector<double> Q_at(double t) const;
    std::vector<double> H_at(double t) const;
};

// Generic coefficients of
//   d_t g + u d_x g - b d_u g - (sigma^2/2) d_u^2 g = r g + F
// with b = d_x Q + beta (u - alpha H) - sigma^2 d_u ln w and
// r = beta - (d_x Q + beta (u - alpha H)) d_u ln w - sigma^2 h + extra.
// Without a weight the d_u ln w and h terms vanish and the equation is the
// one for f itself.
struct StepperOptions {
    bool weighted = true;
    double extra_reaction = 0.0;
    double source = 0.0;
};

class LinearStepper {
  public:
    LinearStepper(const PhaseGrid& grid, const ModelParams& params, const WeightModel& weight,
                  CoefficientFields coeffs, StepperOptions opts = {});
    ~LinearStepper();
    LinearStepper(LinearStepper&&) noexcept;

    const PhaseGrid& grid() const { return grid_; }
    const ModelParams& params() const { return params_; }
    const CoefficientFields& coeffs() const { return coeffs_; }
    const StepperOptions& options() const { return opts_; }

    // One Strang step X/2 R/2 A/2 D A/2 R/2 X/2 with coefficients frozen at t + dt/2.
    void step(PhaseField& g, double t, double dt) const;

    // Pointwise coefficients; x arbitrary (band-limited interpolation of the slices).
    double drift(double t, double x, double u) const;
    double reaction(double t, double x, double u) const;
    // sup over the grid of |r| at time t
    double reaction_sup(double t) const;

    // Cheap evaluators of d_x Q and H on a refined x-grid, for path simulations.
    struct Sampler;
    std::shared_ptr<const Sampler> sampler(int refine = 32) const;
    double drift(const Sampler& s, double t, double x, double u) const;
    double reaction(const Sampler& s, double t, double x, double u) const;

  private:
    struct Impl;
    PhaseGrid grid_;
    ModelParams params_;
    const WeightModel* weight_;
    CoefficientFields coeffs_;
    StepperOptions opts_;
    std::unique_ptr<Impl> impl_;

    double b_of(double qx, double hh, double u) const;
    double r_of(double qx, double hh, double u) const;
};

struct Trajectory {
    std::vector<PhaseField> snapshots;  // at stride, always including t=0 and t=T
    std::vector<double> step_times;     // every step, including 0
    std::vector<double> sup_norms;      // sup |g| at every entry of step_times
};

// nt steps of size T/nt. Throws NumericalAbort on the first non-finite value.
Trajectory solve_linear(const PhaseField& g0, const LinearStepper& stepper, double T, int nt, int stride = 1);

struct MaxPrincipleReport {
    std::vector<double> slack;  // per step: rhs - lhs
    double scale = 0.0;
    double min_slack() const;
    bool ok(double rel_tol = 1e-3) const { return min_slack() >= -rel_tol * scale; }
};

// d/dt ||f||_inf <= ||c||_inf ||f||_inf + ||F||_inf step by step, with the
// sup-norm derivative taken as a forward difference and the right side at
// the midpoint. c_sup and F_sup hold one value per step.
MaxPrincipleReport max_principle_residual(const Trajectory& tr, const std::vector<double>& c_sup,
                                          const std::vector<double>& F_sup);

// Per-step potential bound for a stepper's trajectory: sup |r| at the step midpoint.
std::vector<double> reaction_sups(const LinearStepper& stepper, const Trajectory& tr);

// Value of a field at an arbitrary phase point by band-limited interpolation
// in x and in u (u treated periodic over nu*du, as in the solver).
double interpolate_field(const PhaseField& f, double x, double u);

}  // namespace kinvfp
