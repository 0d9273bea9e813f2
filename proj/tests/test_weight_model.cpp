#include "kinvfp/weight_model.hpp"
#include "kinvfp/error.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace kinvfp;
using oracle::Poly;
using oracle::Q;
using oracle::RatFn;

namespace {

Poly to_poly(const RationalPoly& p) { return Poly(std::vector<Q>(p.begin(), p.end())); }

Poly one_plus_u2() { return Poly{Q(1), Q(0), Q(1)}; }

// num/den == ladder / (1+u^2)^m  <=>  num (1+u^2)^m == ladder den
bool same_function(const RatFn& f, const RationalPoly& ladder, int m) {
    return f.num * oracle::pow(one_plus_u2(), m) == to_poly(ladder) * f.den;
}

RatFn omega_over_c(int s) { return RatFn{oracle::pow(one_plus_u2(), s / 2), Poly{Q(1)}}; }

// h from w directly: w''/(2w) - (w'/w)^2
RatFn h_symbolic(int s) {
    Poly P = omega_over_c(s).num;
    Poly d1 = oracle::deriv(P), d2 = oracle::deriv(d1);
    RatFn h{d2 * P - Q(2) * (d1 * d1), Q(2) * (P * P)};
    h.reduce();
    return h;
}

}  // namespace

TEST_CASE("weight construction rejects odd or small s") {
    CHECK_THROWS_AS(make_weight(3, 0.0), InvalidInput);
    CHECK_THROWS_AS(make_weight(2, 0.0), InvalidInput);
    CHECK_THROWS_AS(make_weight(5, 0.0), InvalidInput);
    try {
        make_weight(3, 0.0);
    } catch (const InvalidInput& e) {
        CHECK(std::string(e.what()).find("s must be even and >= 4") != std::string::npos);
    }
}

TEST_CASE("normalization constant and velocity moment") {
    for (int s : {4, 6, 8}) {
        const double c_ref = oracle::integrate_line([s](double u) { return u * u / std::pow(1 + u * u, s / 2); });
        const auto w = make_weight(s, 0.0);
        CHECK(w.c() == doctest::Approx(c_ref).epsilon(1e-10));
        const double norm = oracle::integrate_line([&](double u) { return u * u / w.omega(u); });
        CHECK(norm == doctest::Approx(1.0).epsilon(1e-10));
        const double cw = oracle::integrate_line([&](double u) { return std::abs(u) / w.omega(u); });
        CHECK(w.c_omega() == doctest::Approx(cw).epsilon(1e-9));
    }
    const auto w4 = make_weight(4, 0.0);
    CHECK(w4.c() == doctest::Approx(std::numbers::pi / 2).epsilon(1e-14));
    CHECK(w4.c_omega() == doctest::Approx(2.0 / std::numbers::pi).epsilon(1e-12));
    CHECK(make_weight(6, 0.0).c() == doctest::Approx(std::numbers::pi / 8).epsilon(1e-12));
    // d^4 w = 24 c is the largest coefficient for s = 4
    CHECK(w4.kappa() == doctest::Approx(12 * std::numbers::pi).epsilon(1e-14));
}

TEST_CASE("ladder seeds and low orders") {
    for (int s : {4, 6}) {
        const auto w = make_weight(s, 0.0);
        CHECK(to_poly(poly_coeffs(w, LadderKind::dlnw, 1)) == Poly{Q(0), Q(s)});
        CHECK(to_poly(poly_coeffs(w, LadderKind::dlnw, 2)) == Poly{Q(s), Q(0), Q(-s)});
        CHECK(to_poly(poly_coeffs(w, LadderKind::dlnw, 3)) == Poly{Q(0), Q(-6 * s), Q(0), Q(2 * s)});
        CHECK(to_poly(poly_coeffs(w, LadderKind::h, 0)) == Poly{Q(s, 2), Q(0), Q(-(s + s * s), 2)});
        CHECK(to_poly(poly_coeffs(w, LadderKind::inv1pu2, 0)) == Poly{Q(s)});
    }
}

TEST_CASE("ladders equal symbolic quotient-rule derivatives") {
    for (int s : {4, 6}) {
        const auto w = make_weight(s, 0.0);
        RatFn dl{Poly{Q(0), Q(s)}, one_plus_u2()};
        RatFn hh = h_symbolic(s);
        RatFn inv{Poly{Q(s)}, one_plus_u2()};
        for (int d = 0; d <= 10; ++d) {
            CAPTURE(s);
            CAPTURE(d);
            if (d >= 1) {
                CHECK(same_function(dl, poly_coeffs(w, LadderKind::dlnw, d), d));
                dl = oracle::quotient_rule(dl);
            }
            CHECK(same_function(hh, poly_coeffs(w, LadderKind::h, d), d + 2));
            CHECK(same_function(inv, poly_coeffs(w, LadderKind::inv1pu2, d), d + 1));
            hh = oracle::quotient_rule(hh);
            inv = oracle::quotient_rule(inv);
        }
    }
}

TEST_CASE("poly_coeffs range errors") {
    const auto w = make_weight(4, 0.0, 12);
    CHECK_THROWS_AS(poly_coeffs(w, LadderKind::dlnw, 13), InvalidInput);
    CHECK_THROWS_AS(poly_coeffs(w, LadderKind::dlnw, 0), InvalidInput);
    CHECK_NOTHROW(poly_coeffs(w, LadderKind::h, 12));
    CHECK_THROWS_AS(parse_ladder_kind("lnw"), InvalidInput);
    CHECK(parse_ladder_kind("inv1pu2") == LadderKind::inv1pu2);
}

TEST_CASE("closed forms at sample points") {
    const auto w = make_weight(4, 0.3);
    auto v0 = w.eval(0.0);
    CHECK(v0.omega == doctest::Approx(w.c()));
    CHECK(v0.dlnw == 0.0);
    CHECK(v0.h == doctest::Approx(2.0));
    CHECK(v0.h_hat == doctest::Approx(2.0 - 0.3));
    CHECK(w.dlnw(1.0) == doctest::Approx(2.0));
    for (int s : {4, 6, 10}) {
        auto ws = make_weight(s, 0.0);
        CHECK(std::abs(ws.h(1e6)) < 1e-9 * (s + s * s));
    }
}

TEST_CASE("ladder evaluation agrees with closed forms and finite differences") {
    const auto w = make_weight(4, 0.7);
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> U(-5, 5);
    for (int rep = 0; rep < 20; ++rep) {
        const double u = U(gen);
        CHECK(w.ladder_value(LadderKind::dlnw, 1, u) == doctest::Approx(w.dlnw(u)).epsilon(1e-12));
        CHECK(w.ladder_value(LadderKind::h, 0, u) == doctest::Approx(w.h(u)).epsilon(1e-12));
        // h_hat - h + beta + beta s u^2/(1+u^2) = 0
        CHECK(std::abs(w.h_hat(u) - w.h(u) + 0.7 + 0.7 * 4 * u * u / (1 + u * u)) < 1e-13);
        auto lnw = [&](long double x) { return std::log(static_cast<long double>(w.c())) + 2.0L * std::log1p(x * x); };
        auto hl = [&](long double x) {
            long double q = 1 + x * x;
            return (4.0L - 20.0L * x * x) / (2 * q * q);
        };
        for (int l = 1; l <= 8; ++l) {
            const double step = 0.08;
            const double fd = oracle::central_fd(lnw, u, l, l / 2 + 6, step);
            const double ex = w.ladder_value(LadderKind::dlnw, l, u);
            const double scale = std::max(1.0, std::abs(ex));
            CHECK(std::abs(fd - ex) <= 1e-4 * scale);
            const double fdh = oracle::central_fd(hl, u, l, l / 2 + 6, step);
            const double exh = w.ladder_value(LadderKind::h, l, u);
            CHECK(std::abs(fdh - exh) <= 1e-4 * std::max(1.0, std::abs(exh)));
        }
    }
}

TEST_CASE("factorial bounds") {
    for (int s : {4, 6}) {
        const auto w = make_weight(s, 0.0);
        auto rep = check_derivative_bounds(w, 0, 8);
        CHECK(rep.ok());
        CHECK(rep.first_failure().empty());
        for (const auto& r : rep.rows) {
            // independent dense-grid sups on [-50, 50] never exceed the reported ones
            const double bs = oracle::brute_sup([&](double u) { return w.ladder_value(LadderKind::dlnw, r.l + 1, u); }, -50, 50);
            CHECK(r.sup_dlnw == doctest::Approx(bs).epsilon(1e-9));
            const double bh = oracle::brute_sup([&](double u) { return w.ladder_value(LadderKind::h, r.l, u); }, -50, 50);
            CHECK(r.sup_h == doctest::Approx(bh).epsilon(1e-9));
        }
    }
    const auto w4 = make_weight(4, 0.0);
    auto rep = check_derivative_bounds(w4, 0, 1);
    CHECK(rep.rows[0].sup_dlnw == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(rep.rows[0].bound_dlnw == doctest::Approx(8.0));
    CHECK(rep.rows[1].sup_dlnw == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(rep.rows[1].bound_dlnw == doctest::Approx(96.0));
    CHECK_THROWS_AS(check_derivative_bounds(w4, 0, 13), InvalidInput);
}
