#pragma once

#include "kinvfp/weight_model.hpp"

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace kinvfp {

// Uniform grid on the unit torus in x times [-u_max, u_max] in u.
struct PhaseGrid {
    int nx = 128;
    int nu = 129;
    double u_max = 8.0;

    double dx() const { return 1.0 / nx; }
    double du() const { return 2.0 * u_max / (nu - 1); }
    double x(int i) const { return i * dx(); }
    double u(int j) const { return -u_max + j * du(); }
    std::size_t size() const { return static_cast<std::size_t>(nx) * nu; }

    // nx a power of two >= 8, nu odd >= 5, u_max > 0
    void validate() const;
    bool operator==(const PhaseGrid&) const = default;
};

enum class FieldKind { f, g };
std::string to_string(FieldKind k);
FieldKind parse_field_kind(const std::string& s);

// Samples on the grid, row-major with one x-row of nu values per row.
class PhaseField {
  public:
    PhaseField() = default;
    PhaseField(const PhaseGrid& grid, FieldKind kind, double time = 0.0);

    const PhaseGrid& grid() const { return grid_; }
    FieldKind kind() const { return kind_; }
    double time() const { return time_; }
    void set_time(double t) { time_ = t; }

    double& operator()(int i, int j) { return data_[static_cast<std::size_t>(i) * grid_.nu + j]; }
    double operator()(int i, int j) const { return data_[static_cast<std::size_t>(i) * grid_.nu + j]; }
    std::span<double> row(int i) { return {data_.data() + static_cast<std::size_t>(i) * grid_.nu, static_cast<std::size_t>(grid_.nu)}; }
    std::span<const double> row(int i) const {
        return {data_.data() + static_cast<std::size_t>(i) * grid_.nu, static_cast<std::size_t>(grid_.nu)};
    }
    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    double sup_norm() const;
    bool all_finite() const;

  private:
    PhaseGrid grid_{};
    FieldKind kind_ = FieldKind::f;
    double time_ = 0.0;
    std::vector<double> data_;
};

struct MomentFields {
    std::vector<double> rho;  // int f du
    std::vector<double> V;    // int u f du
    std::vector<double> S;    // int u^2 f du
    std::vector<double> P;    // -S
};

// Perturbed Maxwellian family
//   f0 = M(u) (1 + eps cos(2 pi mode x) (u^2 - var)/var),  M centered Gaussian of variance var.
struct InitialDataSpec {
    int s = 4;
    double eps = 0.01;
    int mode = 1;
    double thermal_var = 1.0;
    double C0 = 0.0;
    double lambda_bar = 0.5;
    int m = 0;
    int n = 0;

    void validate() const;
};

double maxwellian(double u, double var);

// Composite Simpson over the u-row.
double simpson(std::span<const double> v, double h);

// Pointwise value of the family (any u).
double initial_value(const InitialDataSpec& spec, double x, double u);

// Samples the family without the positivity check.
PhaseField perturbed_maxwellian(const InitialDataSpec& spec, const PhaseGrid& grid);

// Validated construction: f0 >= 0 on the grid, requiring eps * max_grid|psi| < 1.
PhaseField make_initial_data(const InitialDataSpec& spec, const PhaseGrid& grid);

MomentFields moments(const PhaseField& f);

enum class TransformDirection { to_weighted, to_density };
// g = w f  or  f = g / w
PhaseField weight_transform(const PhaseField& field, const WeightModel& w, TransformDirection dir);

struct InitialBoundEntry {
    int k;  // x-derivative order
    int l;  // u-derivative order
    double value;  // sup |(1+u^2)^(s/2) d_x^k d_u^l f0|
    double bound;  // C0 (l+m)! (k+n)! / lambda_bar^(k+l)
    bool ok() const { return value <= bound; }
};

struct InitialBoundReport {
    std::vector<InitialBoundEntry> entries;
    double smallest_C0 = 0.0;  // least C0 making every entry pass
    bool ok() const;
};

InitialBoundReport verify_initial_bounds(const InitialDataSpec& spec, const PhaseGrid& grid, int k_max, int l_max);

// Text snapshot: header "KINVFP v1 nx nu u_max t kind", then nx rows of nu values.
void write_snapshot(std::ostream& os, const PhaseField& field);
PhaseField read_snapshot(std::istream& is);
void save_snapshot(const std::string& path, const PhaseField& field);
PhaseField load_snapshot(const std::string& path);

// Shortest round-trip decimal text of a double.
std::string format_double(double v);
double parse_double(const std::string& s);

}  // namespace kinvfp
