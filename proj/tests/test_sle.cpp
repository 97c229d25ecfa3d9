#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include <gsl/gsl_cdf.h>

#include "lqglab/errors.hpp"
#include "lqglab/sle.hpp"
#include "lqglab/stats.hpp"

using namespace lqg;
using namespace lqg::sle;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("driftless driving function is sqrt(kappa) Brownian motion") {
    Rng rng(1);
    std::vector<double> w1;
    EmpiricalSample incr;
    for (int i = 0; i < 10000; ++i) {
        const auto d = sample_driving(2.0, 0.0, 0.0, 1000, 1e-3, rng);
        w1.push_back(d.W.back());
        if (i < 20)
            for (std::size_t k = 1; k < d.W.size(); ++k) incr.add((d.W[k] - d.W[k - 1]) / std::sqrt(2.0 * d.dt));
    }
    double ss = 0.0;
    for (double x : w1) ss += x * x;
    const double ratio = ss / w1.size() / 2.0;
    CHECK(ratio > 0.97);
    CHECK(ratio < 1.03);
    CHECK(ks_one_sample(incr, [](double x) { return gsl_cdf_ugaussian_P(x); }).p_value > 0.01);
}

TEST_CASE("force points bracket the driving function at every step") {
    for (auto [rm, rp] : {std::pair{-1.5, 0.0}, std::pair{0.5, -0.8}, std::pair{-1.9, -1.9}, std::pair{3.0, 2.0}}) {
        const auto d = sample_driving(2.0, rm, rp, 20000, 1e-5, 3);
        d.validate();
        for (std::size_t k = 0; k < d.W.size(); ++k) {
            REQUIRE(d.V_minus[k] <= d.W[k]);
            REQUIRE(d.W[k] <= d.V_plus[k]);
        }
    }
    CHECK_THROWS_AS(sample_driving(2.0, -2.5, 0.0, 10, 1e-3, 1), ParameterError);
}

TEST_CASE("mirror symmetry of the force-point SDE") {
    Rng a(5), b(6);
    EmpiricalSample left, right_flipped;
    for (int i = 0; i < 3000; ++i) {
        left.add(sample_driving(2.0, -0.5, 1.0, 400, 2.5e-3, a).W.back());
        right_flipped.add(-sample_driving(2.0, 1.0, -0.5, 400, 2.5e-3, b).W.back());
    }
    CHECK(ks_two_sample(left, right_flipped).p_value > 0.01);

    const auto d = sample_driving(2.0, -0.5, 1.0, 100, 1e-3, 2);
    const auto m = mirror(d);
    m.validate();
    CHECK(m.rho_minus == 1.0);
    CHECK(m.rho_plus == -0.5);
    for (std::size_t k = 0; k < d.W.size(); ++k) {
        CHECK(m.W[k] == -d.W[k]);
        CHECK(m.V_minus[k] == -d.V_plus[k]);
    }
}

TEST_CASE("slit maps are inverse to each other") {
    for (Complex z : {Complex{0.3, 0.7}, Complex{-2.0, 0.01}, Complex{5.0, 3.0}}) {
        const Complex w = forward_slit(z, 0.2, 1e-3);
        CHECK(std::abs(inverse_slit(w, 0.2, 1e-3) - z) < 1e-12);
        CHECK(inverse_slit(z, 0.2, 1e-3).imag() >= 0.0);
    }
}

TEST_CASE("zero driving traces the vertical slit 2 sqrt(t) i") {
    DrivingPath d;
    d.dt = 1e-4;
    d.kappa = 2.0;
    d.W.assign(10001, 0.0);
    d.V_minus.assign(10001, 0.0);
    d.V_plus.assign(10001, 0.0);
    const auto c = trace_curve(d);
    double dev = 0.0;
    for (std::size_t k = 1; k < c.points.size(); ++k) {
        dev = std::max(dev, std::abs(c.points[k].real()));
        CHECK_THAT(c.points[k].imag() / (2.0 * std::sqrt(c.t[k])), WithinRel(1.0, 0.01));
    }
    CHECK(dev < 1e-3);
}

TEST_CASE("traced curves stay in the closed upper half-plane; forward flow returns the driving value") {
    const auto d = sample_driving(2.0, -0.5, -0.5, 4000, 2.5e-4, 9);
    const auto c = trace_curve(d);
    for (const auto& p : c.points) CHECK(p.imag() >= -1e-9);
    for (std::size_t k : {std::size_t{500}, std::size_t{2000}, std::size_t{4000}}) {
        Complex z = tip(d, k);
        for (std::size_t j = 1; j <= k; ++j) z = forward_slit(z, step_driving(d, j), d.dt);
        CHECK(std::abs(z - step_driving(d, k)) < 1e-6);
    }
}

TEST_CASE("boundary hitting: direction of the left-hit fraction") {
    HitOptions o;
    o.workers = 2;
    const auto hit = hit_fractions(2.0, -1.5, 0.0, 100, 1e-2, 1, o);
    const auto miss = hit_fractions(2.0, 0.5, 0.0, 100, 1e-2, 2, o);
    CHECK(hit.left > 0.5);
    CHECK(miss.left < 0.05);
    CHECK(boundary_hit_stats(2.0, -1.5, 0.0, 100, 1e-2, 1, o).pass);
    CHECK(boundary_hit_stats(2.0, 0.5, 0.0, 100, 1e-2, 2, o).pass);
}

TEST_CASE("hit fractions are monotone in the threshold") {
    HitOptions o;
    o.n_steps = 20000;
    double prev = -1.0;
    for (double thr : {1e-3, 1e-2, 5e-2, 2e-1}) {
        const double f = hit_fractions(2.0, -0.8, 0.0, 60, thr, 4, o).left;
        CHECK(f >= prev);
        prev = f;
    }
}

TEST_CASE("multiple SLE: two weights reduce to a single SLE_kappa(rho-; rho+)") {
    const double gamma = std::sqrt(2.0);
    const auto multi = sample_multiple({2.0, 1.5}, gamma, 3000, 1e-4, 77);
    REQUIRE(multi.size() == 1);
    Rng rng(77);
    const auto d = sample_driving(gamma * gamma, 0.0, -0.5, 3000, 1e-4, rng);
    const auto c = trace_curve(d);
    REQUIRE(c.points.size() == multi[0].points.size());
    for (std::size_t k = 0; k < c.points.size(); ++k) CHECK(c.points[k] == multi[0].points[k]);
}

TEST_CASE("multiple SLE: thick weights give disjoint, ordered curves") {
    const double gamma = std::sqrt(2.0);
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const auto curves = sample_multiple({2.0, 2.0, 2.0}, gamma, 4000, 2.5e-4, seed);
        REQUIRE(curves.size() == 2);
        CHECK(min_distance(curves[0], curves[1]) > 0.0);
        CHECK(curves[0].neglected_components == 0);
        // curve 0 separates W_1 from the rest and sits to the left of curve 1
        auto mean_x = [](const LoewnerCurve& c) {
            double s = 0.0;
            for (const auto& p : c.points) s += p.real();
            return s / static_cast<double>(c.points.size());
        };
        CHECK(mean_x(curves[0]) < mean_x(curves[1]));
    }
    CHECK_THROWS_AS(sample_multiple({2.0}, gamma, 10, 1e-3, 1), ParameterError);
}

TEST_CASE("hitting phase check passes at desk scale") {
    PhaseOptions o;
    o.hit.n_steps = 20000;
    o.hit.dt = 5e-5;
    const auto r = hitting_phase_check(2.0, 150, 1e-2, 5, o);
    CHECK(std::isfinite(r.estimate));
    CHECK(r.extras.at("monotone") == 1.0);
    CHECK(r.pass);
}
