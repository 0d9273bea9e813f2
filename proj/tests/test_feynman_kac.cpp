#include "kinvfp/error.hpp"
#include "kinvfp/feynman_kac.hpp"
#include "kinvfp/parallel.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

using namespace kinvfp;
constexpr double pi = std::numbers::pi;

namespace {

FkProblem free_problem(InitialFunction f0, double sigma = 1.0) {
    FkProblem p;
    p.phi = [](double, double, double) { return 0.0; };
    p.f0 = std::move(f0);
    p.sigma = sigma;
    return p;
}

}  // namespace

TEST_CASE("constant functional is exact") {
    const auto p = free_problem([](double, double) { return 1.0; });
    const auto e = fk_estimate({0.7, 0.3, 0.5, 1000, 1e-2, 9}, p);
    CHECK(e.mean == 1.0);
    CHECK(e.stderr_ == 0.0);
    CHECK(e.flagged == 0);
}

TEST_CASE("second moment of Brownian velocity") {
    const auto p = free_problem([](double, double u) { return u * u; });
    const double t = 0.6, u = 0.8;
    const auto e = fk_estimate({t, 0.1, u, 40000, 1e-2, 3}, p);
    CHECK(std::abs(e.mean - (u * u + t)) <= 3 * e.stderr_);
}

TEST_CASE("constant potential gives the exponential") {
    auto p = free_problem([](double, double) { return 1.0; });
    p.c = [](double, double, double) { return 0.8; };
    const auto e = fk_estimate({0.5, 0.0, 0.0, 1000, 1e-2, 1}, p);
    CHECK(e.mean == doctest::Approx(std::exp(0.4)).epsilon(1e-12));
}

TEST_CASE("constant source") {
    auto p = free_problem([](double, double) { return 0.0; });
    p.F = [](double, double, double) { return 2.0; };
    p.c = [](double, double, double) { return -1.0; };
    const auto e = fk_estimate({0.5, 0.0, 0.0, 1000, 1e-3, 1}, p);
    // int_0^t 2 e^{-r} dr
    CHECK(e.mean == doctest::Approx(2 * (1 - std::exp(-0.5))).epsilon(1e-6));
}

TEST_CASE("transport goes backward along the characteristics") {
    auto p = free_problem([](double x, double) { return std::sin(2 * pi * x); }, 0.0);
    const auto e = fk_estimate({0.3, 0.2, 0.5, 1000, 1e-2, 1}, p);
    CHECK(e.mean == doctest::Approx(std::sin(2 * pi * (0.2 - 0.5 * 0.3))).epsilon(1e-12));
}

TEST_CASE("seeded determinism and thread independence") {
    const auto p = free_problem([](double x, double u) { return std::cos(2 * pi * x) * u * u; });
    const ProbeRequest r{0.4, 0.3, 0.2, 4000, 1e-2, 77};
    set_threads(1);
    const auto a = fk_estimate(r, p);
    set_threads(4);
    const auto b = fk_estimate(r, p);
    set_threads(0);
    CHECK(a.mean == b.mean);
    CHECK(a.stderr_ == b.stderr_);
    auto r2 = r;
    r2.seed = 78;
    CHECK(fk_estimate(r2, p).mean != a.mean);
}

TEST_CASE("standard error scales like paths^-1/2") {
    const auto p = free_problem([](double, double u) { return u * u; });
    double prev = 0.0;
    for (int n : {10000, 40000, 160000}) {
        const auto e = fk_estimate({0.5, 0.0, 0.5, n, 5e-2, 11}, p);
        if (prev > 0.0) CHECK(prev / e.stderr_ == doctest::Approx(2.0).epsilon(0.2));
        prev = e.stderr_;
    }
}

TEST_CASE("antithetic pairing") {
    const auto p = free_problem([](double, double u) { return u; });
    const auto e = fk_estimate({0.5, 0.0, 0.3, 2000, 1e-2, 5, true}, p);
    CHECK(e.samples == 1000);
    CHECK(e.mean == doctest::Approx(0.3).epsilon(1e-12));
    CHECK_THROWS_AS(fk_estimate({0.5, 0.0, 0.3, 2001, 1e-2, 5, true}, p), InvalidInput);
}

TEST_CASE("request validation and non-finite weights") {
    auto p = free_problem([](double, double) { return 1.0; });
    CHECK_THROWS_AS(fk_estimate({0.5, 0.0, 0.0, 999, 1e-2, 1}, p), InvalidInput);
    CHECK_THROWS_AS(fk_estimate({0.5, 0.0, 0.0, 1000, 0.0, 1}, p), InvalidInput);
    p.c = [](double, double, double u) { return u > 0.5 ? INFINITY : 0.0; };
    CHECK_THROWS_AS(fk_estimate({0.5, 0.0, 0.0, 1000, 1e-2, 1}, p), NumericalAbort);
}

TEST_CASE("zero-drift Gaussian: solver, estimator and closed form agree") {
    PhaseGrid g{16, 65, 8.0};
    const auto w = make_weight(4, 0.0);
    LinearStepper st(g, {1.0, 0.0, 0}, w, CoefficientFields::zero(g.nx), {.weighted = false});
    PhaseField f0(g, FieldKind::f);
    for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < g.nu; ++j) f0(i, j) = maxwellian(g.u(j), 1.0);
    const auto tr = solve_linear(f0, st, 0.5, 50);
    const std::vector<ProbePoint> probes{{0.1, -1.0}, {0.5, 0.0}, {0.8, 1.5}};
    OracleOptions o;
    o.paths = 20000;
    o.dt_sde = 1e-2;
    const auto rep = oracle_compare(tr, st, [](double, double u) { return maxwellian(u, 1.0); }, probes, o);
    CHECK(rep.ok());
    for (const auto& p : rep.probes) {
        CHECK(std::abs(p.z) <= 3.0);
        CHECK(p.pde == doctest::Approx(maxwellian(p.at.u, 1.5)).epsilon(1e-6));
        CHECK(std::abs(p.mc.mean - maxwellian(p.at.u, 1.5)) <= 3 * p.mc.stderr_);
    }
    CHECK_THROWS_AS(oracle_compare(tr, st, [](double, double) { return 0.0; }, {{0.1, 7.0}}, o), InvalidInput);
}

TEST_CASE("weighted solver against the estimator with a moving field") {
    PhaseGrid g{32, 97, 8.0};
    const auto w = make_weight(4, 0.5);
    CoefficientFields cf;
    cf.times = {0.0, 0.25};
    for (double t : cf.times) {
        std::vector<double> q(g.nx);
        for (int i = 0; i < g.nx; ++i) q[i] = 0.3 * std::cos(2 * pi * g.x(i)) * (1 + t);
        cf.Q.push_back(q);
    }
    LinearStepper st(g, {1.0, 0.5, 0}, w, cf);
    InitialDataSpec spec;
    const auto g0 = weight_transform(make_initial_data(spec, g), w, TransformDirection::to_weighted);
    const auto tr = solve_linear(g0, st, 0.25, 50);
    const std::vector<ProbePoint> probes{{0.05, -1.5}, {0.3, 0.5}, {0.6, 1.0}, {0.9, -0.2}};
    OracleOptions o;
    o.paths = 20000;
    const auto rep = oracle_compare(
        tr, st, [&](double x, double u) { return w.omega(u) * initial_value(spec, x, u); }, probes, o);
    CHECK(rep.ok());
    CHECK(rep.max_abs_z() <= 4.0);
    std::ostringstream os;
    write_oracle_report(os, rep);
    CHECK(os.str().find("FAIL") == std::string::npos);
}
