#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <vector>

#include "lqglab/cone.hpp"
#include "lqglab/errors.hpp"
#include "lqglab/stats.hpp"

using namespace lqg;
using namespace lqg::cone;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const double s2 = std::sqrt(2.0);
const double s3 = std::sqrt(3.0);
constexpr double kPi = std::numbers::pi;

}  // namespace

TEST_CASE("covariance structure") {
    const auto a = CovSpec::from_gamma(s2);
    CHECK_THAT(a.theta(), WithinRel(kPi / 2.0, 1e-15));
    CHECK_THAT(a.correlation(), WithinAbs(0.0, 1e-15));
    CHECK_THAT(a.a2, WithinRel(2.0, 1e-15));
    const auto b = CovSpec::from_gamma(s3);
    CHECK_THAT(b.a2, WithinRel(2.0 * s2, 1e-15));
    CHECK_THAT(b.covariance(), WithinRel(2.0, 1e-14));
    CHECK_THAT(CovSpec::from_gamma(s3, 5.0).a2, WithinRel(5.0, 1e-15));
    CHECK_THROWS_AS(CovSpec::from_gamma(2.5), ParameterError);
}

TEST_CASE("shear and power map") {
    const auto c = CovSpec::from_gamma(s2);
    // gamma = sqrt2: no shear, scaling 1/a, then w -> w^2
    const auto w = shear({1.0, 1.0}, c);
    CHECK_THAT(w.real(), WithinRel(1.0 / s2, 1e-15));
    CHECK_THAT(w.imag(), WithinRel(1.0 / s2, 1e-15));
    const auto z = shear_and_power({1.0, 1.0}, c);
    CHECK_THAT(z.real(), WithinAbs(0.0, 1e-15));
    CHECK_THAT(z.imag(), WithinRel(1.0, 1e-14));
    CHECK(shear_and_power({0.0, 0.0}, c) == std::complex<double>{0.0, 0.0});
    for (double g : {0.8, s2, s3, 1.9}) {
        const auto cg = CovSpec::from_gamma(g);
        const auto p = shear_and_power({2.5, 0.0}, cg);
        CHECK(p.real() > 0.0);
        CHECK(p.imag() == 0.0);
        const auto q = shear_and_power({0.0, 1.5}, cg);
        CHECK(q.real() < 0.0);
        CHECK(std::abs(q.imag()) < 1e-12 * std::abs(q));
    }
}

TEST_CASE("cone paths: increment statistics and exit on an axis") {
    for (double g : {s2, s3}) {
        const auto c = CovSpec::from_gamma(g);
        Rng rng(3);
        double sl = 0, sr = 0, sll = 0, srr = 0, slr = 0;
        long n = 0;
        const double dt = 1e-3;
        for (int i = 0; i < 400; ++i) {
            const auto p = sample_cone_path({1.0, 1.0}, c, dt, rng, 20000);
            if (p.exited) {
                CHECK((std::abs(p.exit_point.L) < 1e-9 || std::abs(p.exit_point.R) < 1e-9));
                CHECK(p.exit_point.L >= 0.0);
                CHECK(p.exit_point.R >= 0.0);
            }
            const std::size_t last = p.exited ? p.points.size() - 1 : p.points.size();
            for (std::size_t k = 1; k < last; ++k) {
                const double dl = p.points[k].L - p.points[k - 1].L, dr = p.points[k].R - p.points[k - 1].R;
                sl += dl, sr += dr, sll += dl * dl, srr += dr * dr, slr += dl * dr, ++n;
            }
        }
        REQUIRE(n > 100000);
        const double vl = (sll / n - (sl / n) * (sl / n)) / dt, vr = (srr / n - (sr / n) * (sr / n)) / dt;
        const double cv = (slr / n - (sl / n) * (sr / n)) / dt;
        CHECK_THAT(vl, WithinRel(c.a2, 0.02));
        CHECK_THAT(vr, WithinRel(c.a2, 0.02));
        CHECK_THAT(cv / std::sqrt(vl * vr), WithinAbs(c.correlation(), 0.02));
    }
}

TEST_CASE("increment moments within 1 percent") {
    for (double g : {s2, s3}) {
        const auto c = CovSpec::from_gamma(g);
        const auto m = increment_moments(c, 0.01, 1000000, 4);
        CHECK_THAT(m.var_L, WithinRel(c.a2, 0.01));
        CHECK_THAT(m.var_R, WithinRel(c.a2, 0.01));
        CHECK_THAT(m.corr, WithinAbs(c.correlation(), 0.01));
    }
}

TEST_CASE("closed-form kernel") {
    CHECK_THAT(closed_form_kernel(1.0, 1.0, s2), WithinRel(0.25, 1e-15));
    CHECK_THAT(closed_form_kernel(2.0, 1.0, s2), WithinRel(2.0 / 25.0, 1e-15));
    CHECK_THAT(closed_form_kernel(2.0, 1.0, s2) / closed_form_kernel(1.0, 1.0, s2), WithinRel(0.32, 1e-14));
    CHECK_THAT(closed_form_kernel(2.0, 2.0, s2) / closed_form_kernel(1.0, 1.0, s2), WithinRel(0.25, 1e-14));
    for (double g : {0.7, s2, s3})
        for (auto [l, r] : {std::pair{0.3, 2.0}, std::pair{1.0, 4.0}})
            CHECK_THAT(closed_form_kernel(l, r, g), WithinRel(closed_form_kernel(r, l, g), 1e-14));
}

TEST_CASE("corner exit probability is increasing in eps") {
    const auto c = CovSpec::from_gamma(s2);
    const auto p = exit_corner_probs({1.0, 1.0}, {0.05, 0.1, 0.2, 0.4}, c, 1e-8, 200000, 2);
    for (std::size_t i = 1; i < p.size(); ++i) CHECK(p[i].value > p[i - 1].value);
    CHECK(p[0].hits > 0);
}

TEST_CASE("shear_and_power sends cone exits to the half-plane harmonic measure") {
    for (double g : {s2, s3}) {
        const auto c = CovSpec::from_gamma(g);
        const Point start{1.0, 0.6};
        const auto z0 = shear_and_power(start, c);
        Rng rng(19);
        EmpiricalSample u;
        for (int i = 0; i < 20000; ++i) {
            const auto e = sample_exit_point(start, c, 1e-6, rng);
            const Point p = e.axis == Axis::Horizontal ? Point{e.position, 0.0} : Point{0.0, e.position};
            u.add(shear_and_power(p, c).real());
        }
        auto cauchy = [&](double x) { return 0.5 + std::atan((x - z0.real()) / z0.imag()) / kPi; };
        CHECK(ks_one_sample(u, cauchy).p_value > 0.01);
    }
}

TEST_CASE("exit position density along the vertical axis integrates to the vertical exit probability") {
    const auto c = CovSpec::from_gamma(s2);
    Rng rng(29);
    const int n = 100000;
    const double width = 0.05, top = 200.0;
    std::vector<double> counts(static_cast<std::size_t>(top / width), 0.0);
    int vertical = 0;
    for (int i = 0; i < n; ++i) {
        const auto e = sample_exit_point({1.0, 1.0}, c, 1e-6, rng);
        if (e.axis != Axis::Vertical) continue;
        ++vertical;
        if (e.position < top) counts[static_cast<std::size_t>(e.position / width)] += 1.0;
    }
    double integral = 0.0;
    for (double k : counts) integral += (k / n / width) * width;
    CHECK_THAT(integral, WithinAbs(double(vertical) / n, 1e-3));
    // symmetric start: half the paths leave through each axis
    CHECK_THAT(double(vertical) / n, WithinAbs(0.5, 0.006));
}

TEST_CASE("kernel estimates: symmetry and Brownian scaling") {
    const auto c = CovSpec::from_gamma(s2);
    const double h = 0.1;
    // windows centered on r keep the finite-h bias second order
    const auto k21 = kernel_estimate(2.0, 1.0 - h / 2.0, h, h, c, 1e-8, 10000000, 1);
    const auto k12 = kernel_estimate(1.0, 2.0 - h / 2.0, h, h, c, 1e-8, 10000000, 2);
    CHECK_THAT(k21.value / k12.value, WithinAbs(1.0, 0.05));

    const auto k11 = kernel_estimate(1.0, 1.0, h, h, c, 1e-8, 2000000, 3);
    const auto k22 = kernel_estimate(2.0, 2.0, 2.0 * h, 2.0 * h, c, 4e-8, 2000000, 4);
    CHECK_THAT(k22.value / k11.value, WithinAbs(0.25, 0.03));
    CHECK(k11.hits > 0);
    CHECK(k11.std_error > 0.0);
}

TEST_CASE("durations: positive, Brownian scaling, reproducible mean") {
    const auto c = CovSpec::from_gamma(s2);
    DurationOptions o;
    o.delta = 0.1;
    const auto d1 = duration_samples(1.0, 1.0, 1.5, c, 1e-4, 150000, 7, o);
    DurationOptions o2;
    o2.delta = 0.2;
    const auto d2 = duration_samples(2.0, 2.0, 3.0, c, 4e-4, 150000, 8, o2);
    REQUIRE(d1.size() > 300);
    REQUIRE(d2.size() > 300);
    EmpiricalSample a, b;
    for (double t : d1) {
        CHECK(t > 0.0);
        CHECK(std::isfinite(t));
        a.add(t);
    }
    for (double t : d2) b.add(t / 4.0);
    CHECK(ks_two_sample(a, b).p_value > 0.01);

    const auto e1 = duration_samples(1.0, 0.9, 1.1, c, 1e-4, 100000, 11, o);
    const auto e2 = duration_samples(1.0, 0.9, 1.1, c, 1e-4, 100000, 12, o);
    const auto m1 = mean_and_se(e1), m2 = mean_and_se(e2);
    CHECK(std::abs(m1.mean - m2.mean) < 3.0 * std::hypot(m1.se, m2.se));
}

TEST_CASE("corner exponent check at reduced size") {
    CornerOptions o;
    const auto r = corner_exit_exponent_check(s2, 1000000, 5, o);
    CHECK_THAT(r.estimate, WithinAbs(2.0, 0.2));
}
