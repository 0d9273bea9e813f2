#include "kinvfp/error.hpp"
#include "kinvfp/picard.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

using namespace kinvfp;
constexpr double pi = std::numbers::pi;

namespace {

Trajectory constant_trajectory(const PhaseField& f, double T, int nt) {
    Trajectory tr;
    for (int n = 0; n <= nt; ++n) {
        PhaseField s = f;
        s.set_time(T * n / nt);
        tr.step_times.push_back(s.time());
        tr.sup_norms.push_back(s.sup_norm());
        tr.snapshots.push_back(s);
    }
    return tr;
}

PhaseField weighted(const PhaseField& f, const WeightModel& w) {
    return weight_transform(f, w, TransformDirection::to_weighted);
}

double fact(int n) { return n <= 1 ? 1.0 : n * fact(n - 1); }

}  // namespace

TEST_CASE("source fields") {
    PhaseGrid g{16, 129, 8.0};
    const auto w = make_weight(4, 0.0);
    InitialDataSpec spec;
    SUBCASE("Maxwellian") {
        spec.eps = 0.0;
        const auto cf = source_fields(constant_trajectory(weighted(make_initial_data(spec, g), w), 0.1, 2), w, {1, 0, 1});
        REQUIRE(cf.times.size() == 3);
        REQUIRE(cf.H.size() == 3);
        for (int i = 0; i < g.nx; ++i) {
            CHECK(cf.Q[1][i] == doctest::Approx(-1.0).epsilon(1e-8));
            CHECK(std::abs(cf.H[1][i]) < 1e-12);
        }
    }
    SUBCASE("perturbed") {
        spec.eps = 0.01;
        const auto cf = source_fields(constant_trajectory(weighted(make_initial_data(spec, g), w), 0.1, 1), w, {1, 0, 0});
        CHECK(cf.H.empty());
        // m4 = 3 var^2 gives Q = -(var + 2 eps var cos)
        for (int i = 0; i < g.nx; ++i)
            CHECK(cf.Q[0][i] == doctest::Approx(-(1 + 2 * 0.01 * std::cos(2 * pi * g.x(i)))).epsilon(1e-8));
        const auto d = source_domination(weighted(make_initial_data(spec, g), w), w, 4, 0.1);
        CHECK(d.ok());
    }
    SUBCASE("zero and wrong kind") {
        const auto cf = source_fields(constant_trajectory(PhaseField(g, FieldKind::g), 0.1, 1), w, {1, 0, 1});
        for (double q : cf.Q[0]) CHECK(q == 0.0);
        CHECK_THROWS_AS(source_fields(constant_trajectory(PhaseField(g, FieldKind::f), 0.1, 1), w, {}), InvalidInput);
    }
}

TEST_CASE("contraction metric") {
    PhaseGrid g{32, 65, 6.0};
    PicardConfig cfg;
    cfg.lambda0 = 0.1;
    cfg.K = 2.0;
    cfg.T = 0.02;
    cfg.A = 4;
    SUBCASE("zero") { CHECK(contraction_metric(constant_trajectory(PhaseField(g, FieldKind::g), 0.02, 4), cfg) == 0.0); }
    SUBCASE("constant") {
        PhaseField c(g, FieldKind::g);
        for (auto& v : c.data()) v = 0.7;
        CHECK(contraction_metric(constant_trajectory(c, 0.02, 4), cfg) == doctest::Approx(0.7).epsilon(1e-12));
    }
    SUBCASE("sin(2 pi x)") {
        PhaseField s(g, FieldKind::g);
        for (int i = 0; i < g.nx; ++i)
            for (int j = 0; j < g.nu; ++j) s(i, j) = std::sin(2 * pi * g.x(i));
        const auto n0 = [](double lam) {
            double v = 0.0;
            for (int k = 0; k <= 4; ++k) v += std::pow(2 * pi * lam, k) / fact(k);
            return v;
        };
        // int_0^T ||.||_{lambda(t),1} dt = (n0(lambda0) - n0(lambda(T))) / (1+K)
        const double integral = (n0(0.1) - n0(cfg.lambda_at(cfg.T))) / 3.0;
        CHECK(contraction_metric(constant_trajectory(s, 0.02, 200), cfg) ==
              doctest::Approx(std::max(n0(0.1), integral)).epsilon(1e-6));
        cfg.T = 0.03;
        const double big = (n0(0.1) - n0(cfg.lambda_at(0.03))) / 3.0;
        CHECK(big < n0(0.1));
    }
}

TEST_CASE("ball membership") {
    PhaseGrid g{16, 33, 6.0};
    PicardConfig cfg;
    cfg.T = 0.01;
    cfg.M = 1.0;
    const auto zero = constant_trajectory(PhaseField(g, FieldKind::g), 0.01, 2);
    CHECK(ball_membership(zero, cfg).member());
    cfg.M = 0.0;
    CHECK(ball_membership(zero, cfg).member());
    PhaseField c(g, FieldKind::g);
    for (auto& v : c.data()) v = 0.5;
    CHECK_FALSE(ball_membership(constant_trajectory(c, 0.01, 2), cfg).member());
    cfg.M = 0.6;
    const auto b = ball_membership(constant_trajectory(c, 0.01, 2), cfg);
    CHECK(b.sup_H == doctest::Approx(0.5));
    CHECK(b.int_Htilde < 1e-12);
    CHECK(b.member());
}

TEST_CASE("config validation") {
    PicardConfig cfg;
    cfg.lambda0 = 0.1;
    cfg.K = 9.0;
    cfg.T = 0.01;
    CHECK_THROWS_AS(cfg.validate(), InvalidInput);
    cfg.T = 0.005;
    CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("stationary profile is a fixed point") {
    PhaseGrid g{16, 129, 8.0};
    const auto w = make_weight(4, 1.0);
    InitialDataSpec spec;
    spec.eps = 0.0;
    spec.thermal_var = 0.5;
    PicardConfig cfg;
    cfg.T = 0.01;
    cfg.A = 2;
    const auto g0 = weighted(make_initial_data(spec, g), w);
    // the discrete map moves the profile by its O(dt^2) splitting error only
    cfg.nt = 10;
    const double coarse = iterate(g0, cfg, {1.0, 1.0, 0}, w).D[0];
    cfg.nt = 40;
    const auto r = iterate(g0, cfg, {1.0, 1.0, 0}, w);
    CHECK(coarse / r.D[0] == doctest::Approx(16.0).epsilon(0.2));
    CHECK(r.status == PicardStatus::converged);
    CHECK(r.iterations == 1);
    CHECK(r.D[0] <= r.tol);
}

TEST_CASE("contraction on perturbed data") {
    PhaseGrid g{16, 65, 8.0};
    const auto w = make_weight(4, 0.0);
    InitialDataSpec spec;
    PicardConfig cfg;
    cfg.T = 0.01;
    cfg.nt = 10;
    cfg.A = 2;
    cfg.M = 1e3;
    const auto gam = gamma_constants(w, cfg.lambda0, cfg.A);
    const auto r = iterate(weighted(make_initial_data(spec, g), w), cfg, {1.0, 0.0, 0}, w, &gam);
    CHECK(r.status == PicardStatus::converged);
    REQUIRE(r.ratios.size() >= 2);
    for (double q : r.ratios) CHECK(q < 1.0);
    CHECK(r.residual_fp <= 2 * r.tol);
    CHECK(r.M_hat > 0.0);
    CHECK(r.solution.snapshots.size() == 11);
    std::ostringstream os;
    write_picard_log(os, r);
    CHECK(os.str().rfind("n,D_n,r_n\n1,", 0) == 0);

    cfg.waive_ball_check = false;
    cfg.M = 1e-3;
    CHECK_THROWS_AS(iterate(weighted(make_initial_data(spec, g), w), cfg, {1.0, 0.0, 0}, w), InvalidInput);
}
