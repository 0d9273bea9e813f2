#include "kinvfp/phase_grid.hpp"

#include "kinvfp/analytic_norms.hpp"
#include "kinvfp/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

namespace kinvfp {

void PhaseGrid::validate() const {
    require(nx >= 8 && (nx & (nx - 1)) == 0, "grid: nx must be a power of two >= 8 (got " + std::to_string(nx) + ")");
    require(nu >= 5 && nu % 2 == 1, "grid: nu must be odd and >= 5 (got " + std::to_string(nu) + ")");
    require(u_max > 0.0 && std::isfinite(u_max), "grid: u_max must be positive");
}

std::string to_string(FieldKind k) { return k == FieldKind::f ? "f" : "g"; }

FieldKind parse_field_kind(const std::string& s) {
    if (s == "f") return FieldKind::f;
    if (s == "g") return FieldKind::g;
    throw InvalidInput("unknown field kind '" + s + "'");
}

PhaseField::PhaseField(const PhaseGrid& grid, FieldKind kind, double time)
    : grid_(grid), kind_(kind), time_(time), data_(grid.size(), 0.0) {
    grid.validate();
}

double PhaseField::sup_norm() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
}

bool PhaseField::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void InitialDataSpec::validate() const {
    require(s >= 4 && s % 2 == 0, "initial data: s must be even and >= 4");
    require(eps >= 0.0, "initial data: eps must be >= 0");
    require(mode >= 1, "initial data: mode must be >= 1");
    require(thermal_var > 0.0, "initial data: thermal_var must be > 0");
    require(C0 >= 0.0, "initial data: C0 must be >= 0");
    require(lambda_bar > 0.0, "initial data: lambda_bar must be > 0");
    require(m >= 0 && n >= 0, "initial data: m and n must be >= 0");
}

double maxwellian(double u, double var) { return std::exp(-0.5 * u * u / var) / std::sqrt(2.0 * std::numbers::pi * var); }

double simpson(std::span<const double> v, double h) {
    const std::size_t n = v.size();
    require(n >= 3 && n % 2 == 1, "simpson needs an odd number of samples");
    double odd = 0.0, even = 0.0;
    for (std::size_t j = 1; j + 1 < n; ++j) (j % 2 ? odd : even) += v[j];
    return h / 3.0 * (v.front() + v.back() + 4.0 * odd + 2.0 * even);
}

double initial_value(const InitialDataSpec& spec, double x, double u) {
    const double var = spec.thermal_var;
    const double cx = std::cos(2.0 * std::numbers::pi * spec.mode * x);
    return maxwellian(u, var) * (1.0 + spec.eps * cx * (u * u - var) / var);
}

PhaseField perturbed_maxwellian(const InitialDataSpec& spec, const PhaseGrid& grid) {
    spec.validate();
    PhaseField f(grid, FieldKind::f, 0.0);
    for (int i = 0; i < grid.nx; ++i)
        for (int j = 0; j < grid.nu; ++j) f(i, j) = initial_value(spec, grid.x(i), grid.u(j));
    return f;
}

PhaseField make_initial_data(const InitialDataSpec& spec, const PhaseGrid& grid) {
    spec.validate();
    grid.validate();
    const double width = std::sqrt(spec.thermal_var);
    require(grid.u_max >= 6.0 * width - 1e-12, "initial data: u_max must be at least 6 thermal widths");
    double psi_max = 0.0;
    for (int j = 0; j < grid.nu; ++j) {
        const double u = grid.u(j);
        psi_max = std::max(psi_max, std::abs((u * u - spec.thermal_var) / spec.thermal_var));
    }
    if (spec.eps * psi_max >= 1.0) {
        std::ostringstream os;
        os << "initial data: eps too large, f0 would be negative on the grid (eps*max|psi| = " << spec.eps * psi_max
           << " >= 1)";
        throw InvalidInput(os.str());
    }
    return perturbed_maxwellian(spec, grid);
}

MomentFields moments(const PhaseField& f) {
    if (f.kind() != FieldKind::f) throw InvalidInput("moments: field is weighted (kind g); transform to f first");
    const auto& g = f.grid();
    MomentFields m;
    m.rho.resize(g.nx);
    m.V.resize(g.nx);
    m.S.resize(g.nx);
    m.P.resize(g.nx);
    std::vector<double> w1(g.nu), w2(g.nu);
    for (int i = 0; i < g.nx; ++i) {
        auto r = f.row(i);
        for (int j = 0; j < g.nu; ++j) {
            const double u = g.u(j);
            w1[j] = u * r[j];
            w2[j] = u * u * r[j];
        }
        m.rho[i] = simpson(r, g.du());
        m.V[i] = simpson(w1, g.du());
        m.S[i] = simpson(w2, g.du());
        m.P[i] = -m.S[i];
    }
    return m;
}

PhaseField weight_transform(const PhaseField& field, const WeightModel& w, TransformDirection dir) {
    const auto& g = field.grid();
    const FieldKind want_in = dir == TransformDirection::to_weighted ? FieldKind::f : FieldKind::g;
    require(field.kind() == want_in, "weight_transform: field kind does not match direction");
    PhaseField out(g, dir == TransformDirection::to_weighted ? FieldKind::g : FieldKind::f, field.time());
    std::vector<double> om(g.nu);
    for (int j = 0; j < g.nu; ++j) om[j] = w.omega(g.u(j));
    for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < g.nu; ++j)
            out(i, j) = dir == TransformDirection::to_weighted ? field(i, j) * om[j] : field(i, j) / om[j];
    return out;
}

bool InitialBoundReport::ok() const {
    return std::all_of(entries.begin(), entries.end(), [](const auto& e) { return e.ok(); });
}

InitialBoundReport verify_initial_bounds(const InitialDataSpec& spec, const PhaseGrid& grid, int k_max, int l_max) {
    PhaseField f0 = perturbed_maxwellian(spec, grid);
    for (int i = 0; i < grid.nx; ++i)
        for (int j = 0; j < grid.nu; ++j) f0(i, j) *= std::pow(1.0 + grid.u(j) * grid.u(j), spec.s / 2);
    const DerivativeStack st = build_stack(f0, k_max, l_max);
    InitialBoundReport rep;
    for (int k = 0; k <= k_max; ++k) {
        for (int l = 0; l <= l_max; ++l) {
            const double shape = std::tgamma(l + spec.m + 1.0) * std::tgamma(k + spec.n + 1.0) /
                                 std::pow(spec.lambda_bar, k + l);
            rep.entries.push_back({k, l, st(k, l), spec.C0 * shape});
            rep.smallest_C0 = std::max(rep.smallest_C0, st(k, l) / shape);
        }
    }
    return rep;
}

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last) throw InvalidInput("not a number: '" + s + "'");
    return v;
}

void write_snapshot(std::ostream& os, const PhaseField& field) {
    const auto& g = field.grid();
    os << "KINVFP v1 " << g.nx << ' ' << g.nu << ' ' << format_double(g.u_max) << ' ' << format_double(field.time())
       << ' ' << to_string(field.kind()) << '\n';
    for (int i = 0; i < g.nx; ++i) {
        auto r = field.row(i);
        for (int j = 0; j < g.nu; ++j) {
            if (j) os << ' ';
            os << format_double(r[j]);
        }
        os << '\n';
    }
}

PhaseField read_snapshot(std::istream& is) {
    std::string magic, version, u_max_s, t_s, kind_s;
    PhaseGrid g;
    if (!(is >> magic >> version >> g.nx >> g.nu >> u_max_s >> t_s >> kind_s) || magic != "KINVFP" || version != "v1")
        throw InvalidInput("snapshot: bad header");
    g.u_max = parse_double(u_max_s);
    g.validate();
    PhaseField f(g, parse_field_kind(kind_s), parse_double(t_s));
    std::string tok;
    for (std::size_t n = 0; n < g.size(); ++n) {
        if (!(is >> tok)) throw InvalidInput("snapshot: truncated data");
        f.data()[n] = parse_double(tok);
    }
    if (is >> tok) throw InvalidInput("snapshot: trailing data");
    return f;
}

void save_snapshot(const std::string& path, const PhaseField& field) {
    std::ofstream os(path);
    if (!os) throw InvalidInput("cannot write " + path);
    write_snapshot(os, field);
}

PhaseField load_snapshot(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw InvalidInput("cannot read " + path);
    return read_snapshot(is);
}

}  // namespace kinvfp
