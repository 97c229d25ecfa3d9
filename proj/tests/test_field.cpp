#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <vector>

#include <gsl/gsl_cdf.h>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>

#include "lqglab/errors.hpp"
#include "lqglab/field.hpp"
#include "lqglab/gmc.hpp"

using namespace lqg;
using namespace lqg::field;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const double s2 = std::sqrt(2.0);
const double s3 = std::sqrt(3.0);

double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

// E[2 M_t - Y_t] for Y = sigma B + mu t and M its running max (Rogers-Pitman: this is
// the drift-mu BM conditioned to stay positive).
double conditioned_mean(double mu, double sigma2, double t) {
    struct P {
        double mu, sigma2, t;
    } par{mu, sigma2, t};
    gsl_function f;
    f.function = [](double m, void* v) {
        auto* p = static_cast<P*>(v);
        const double s = std::sqrt(p->sigma2 * p->t);
        const double tail = gsl_cdf_ugaussian_Q((m - p->mu * p->t) / s);
        const double refl = std::exp(2.0 * p->mu * m / p->sigma2) * gsl_cdf_ugaussian_P((-m - p->mu * p->t) / s);
        return tail + refl;
    };
    f.params = &par;
    gsl_integration_workspace* ws = gsl_integration_workspace_alloc(1000);
    double res = 0, err = 0;
    const double top = mu * t + 30.0 * std::sqrt(sigma2 * t);
    gsl_integration_qags(&f, 0.0, top, 1e-12, 1e-10, 1000, ws, &res, &err);
    gsl_integration_workspace_free(ws);
    return 2.0 * res - mu * t;
}

}  // namespace

TEST_CASE("derive_params arithmetic") {
    const auto p = derive_params(s2, 2.0);
    CHECK_THAT(p.Q, WithinAbs(2.121320, 1e-6));
    CHECK_THAT(p.beta, WithinAbs(1.414214, 1e-6));
    CHECK_THAT(p.Q - p.beta, WithinAbs(0.707107, 1e-6));
    CHECK(p.thick);

    // W = gamma^2/2: the horizontal drift Q - beta vanishes
    const auto b = derive_params(s2, 1.0);
    CHECK_THAT(b.beta, WithinRel(b.Q, 1e-15));
    CHECK(b.thick);
    CHECK_THAT(derive_params(s2, 2.0).beta, WithinRel(b.Q - s2 / 2.0, 1e-15));

    const auto q = derive_params(s3, 2.0);
    CHECK_THAT(q.Q, WithinAbs(2.020726, 1e-6));
    CHECK_THAT(q.beta, WithinAbs(1.732051, 1e-6));
}

TEST_CASE("derive_params: Q to machine precision and the thickness test") {
    for (double g : {0.3, 1.0, s2, 1.7, 1.99}) {
        for (double W : {0.1, 0.5, g * g / 2.0, g * g, 2.0, 5.0}) {
            const auto p = derive_params(g, W);
            CHECK(p.Q == g / 2.0 + 2.0 / g);
            const double tol = 1e-13 * p.Q;
            CHECK((p.beta < p.Q + tol) == (W >= g * g / 2.0));
            CHECK((p.beta < p.Q - tol) == (W > g * g / 2.0));
            CHECK((p.beta <= p.Q - g / 2.0 + tol) == (W >= g * g * (1.0 - 1e-12)));
            CHECK(p.thick == (W >= g * g / 2.0));
        }
    }
    CHECK_THROWS_AS(derive_params(2.0, 1.0), ParameterError);
    CHECK_THROWS_AS(derive_params(1.0, 0.0), ParameterError);
}

TEST_CASE("grid tiles the truncated strip") {
    const GridSpec g{3.0, 60, 8};
    CHECK(g.dt() > 0.0);
    CHECK_THAT(g.nx * g.dt(), WithinRel(6.0, 1e-15));
    CHECK_THAT(g.ny * g.dy(Domain::Strip), WithinRel(std::numbers::pi, 1e-15));
    CHECK_THAT(g.ny * g.dy(Domain::Cylinder), WithinRel(2.0 * std::numbers::pi, 1e-15));
    CHECK_THAT(g.node(g.nx), WithinAbs(3.0, 1e-14));
    CHECK_THROWS_AS((GridSpec{0.0, 10, 10}.validate()), ParameterError);
}

TEST_CASE("conditioned negative BM stays nonpositive") {
    Rng rng(11);
    for (double a : {0.0, 0.3, 1.0 / s2, 2.0}) {
        for (int i = 0; i < 300; ++i) {
            const auto h = sample_conditioned_negative_bm(a, s2, 0.01, 3.0, rng);
            REQUIRE(h.values.size() == h.times.size());
            CHECK(h.values.front() == 0.0);
            for (double v : h.values) REQUIRE(v <= 0.0);
        }
    }
}

TEST_CASE("conditioned negative BM: quadratic variation 2 dt per step") {
    // gamma = sqrt2, W = 2: a = 1/sqrt2.
    Rng rng(5);
    const double dt = 2e-3;
    double qv = 0.0;
    long count = 0;
    for (int i = 0; i < 20000; ++i) {
        const auto h = sample_conditioned_negative_bm(1.0 / s2, s2, dt, 2.0, rng);
        for (std::size_t k = 1; k < h.values.size(); ++k) {
            const double d = h.values[k] - h.values[k - 1];
            qv += d * d;
            ++count;
        }
    }
    CHECK_THAT(qv / count / (2.0 * dt), WithinAbs(1.0, 0.02));
}

TEST_CASE("conditioned negative BM: larger drift lowers the path") {
    Rng rng(7);
    std::vector<double> lo, hi;
    for (int i = 0; i < 20000; ++i) {
        lo.push_back(sample_conditioned_negative_bm(0.5, s2, 0.05, 1.0, rng).values.back());
        hi.push_back(sample_conditioned_negative_bm(2.0, s2, 0.05, 1.0, rng).values.back());
    }
    CHECK(mean(hi) < mean(lo) - 0.5);
}

TEST_CASE("sample_horizontal: disk is pinned at 0 and drifts down at rate Q - beta") {
    const auto p = derive_params(s2, 2.0);
    const double mu = p.Q - p.beta;
    const GridSpec g{8.0, 128, 4};
    Rng rng(3);
    std::vector<double> sum(g.nx + 1, 0.0), sq(g.nx + 1, 0.0);
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
        const auto h = sample_horizontal(SurfaceKind::ThickDisk, p, g, rng);
        REQUIRE(h.values[g.center_node()] == 0.0);
        for (int k = 0; k <= g.nx; ++k) {
            REQUIRE(h.values[k] <= 0.0);
            sum[k] += h.values[k];
            sq[k] += h.values[k] * h.values[k];
        }
    }
    for (int k = g.center_node() + 8; k <= g.nx; k += 8) {
        const double t = g.node(k), m = sum[k] / n;
        const double se = std::sqrt((sq[k] / n - m * m) / n);
        const double ml = sum[g.nx - k] / n;  // mirror node on the left branch
        CHECK_THAT(m, WithinAbs(-conditioned_mean(mu, 2.0, t), 4.0 * se + 0.01));
        CHECK_THAT(ml, WithinAbs(-conditioned_mean(mu, 2.0, t), 4.0 * se + 0.01));
    }
    // late-time slope of the mean
    const double t1 = 4.0, t2 = 8.0;
    const double slope = (sum[g.nx] - sum[g.center_node() + 32]) / n / (t2 - t1);
    const double ref = (conditioned_mean(mu, 2.0, t2) - conditioned_mean(mu, 2.0, t1)) / (t2 - t1);
    CHECK_THAT(-slope, WithinRel(ref, 0.05));
    CHECK_THAT((conditioned_mean(mu, 2.0, 60.0) - conditioned_mean(mu, 2.0, 30.0)) / 30.0, WithinRel(mu, 0.01));
}

TEST_CASE("sample_horizontal: wedge left branch is nonnegative") {
    const auto p = derive_params(s2, 2.0);
    const GridSpec g{6.0, 96, 4};
    Rng rng(9);
    for (int i = 0; i < 500; ++i) {
        const auto h = sample_horizontal(SurfaceKind::Wedge, p, g, rng);
        for (int k = 0; k < g.center_node(); ++k) REQUIRE(h.values[k] >= 0.0);
    }
}

TEST_CASE("unconditioned branches: increment variance is 2 dt on the strip, dt on the cylinder") {
    const GridSpec g{4.0, 64, 4};
    for (auto kind : {SurfaceKind::Wedge, SurfaceKind::Cone}) {
        const auto p = derive_params(s2, 2.0);
        const double var = domain_of(kind) == Domain::Strip ? 2.0 : 1.0;
        Rng rng(21);
        double s = 0.0, ss = 0.0;
        long n = 0;
        while (n < 100000) {
            const auto h = sample_horizontal(kind, p, g, rng);
            for (int k = g.center_node() + 1; k <= g.nx; ++k) {
                const double d = h.values[k] - h.values[k - 1];
                s += d, ss += d * d, ++n;
            }
        }
        const double v = ss / n - (s / n) * (s / n);
        const double ratio = v / (var * g.dt());
        CHECK(ratio > 0.95);
        CHECK(ratio < 1.05);
    }
}

TEST_CASE("lateral field: zero column means and bulk variance of the truncated series") {
    const GridSpec g{4.0, 64, 16};
    const LateralSampler lat(g, Domain::Strip);
    Rng rng(13);
    const int i0 = 20, j0 = 7, i1 = 40, j1 = 3;
    double s0 = 0, ss0 = 0, s1 = 0, s01 = 0, ss1 = 0;
    const int n = 10000;
    for (int k = 0; k < n; ++k) {
        const Eigen::MatrixXd m = lat.sample(rng);
        for (int i = 0; i < g.nx; ++i) REQUIRE(std::abs(m.row(i).mean()) < 1e-10);
        const double a = m(i0, j0), b = m(i1, j1);
        s0 += a, ss0 += a * a, s1 += b, ss1 += b * b, s01 += a * b;
    }
    const double var0 = ss0 / n - (s0 / n) * (s0 / n);
    CHECK_THAT(var0, WithinRel(lat.cell_variance(i0, j0), 0.05));

    // covariance of cells in two disjoint columns vs the series, within 3 standard errors
    const double cov = s01 / n - (s0 / n) * (s1 / n);
    const double var1 = ss1 / n - (s1 / n) * (s1 / n);
    const double exact = lat.cell_covariance(i0, j0, i1, j1);
    const double se = std::sqrt((var0 * var1 + exact * exact) / n);
    CHECK(std::abs(cov - exact) < 3.0 * se);

    const LateralSampler cyl(g, Domain::Cylinder);
    const Eigen::MatrixXd c = cyl.sample(rng);
    for (int i = 0; i < g.nx; ++i) CHECK(std::abs(c.row(i).mean()) < 1e-10);
}

TEST_CASE("field value is horizontal + lateral + constant") {
    const auto f = sample_surface(SurfaceKind::ThickDisk, s2, 2.0, GridSpec{4.0, 32, 8}, CWindow{0.0}, 17);
    for (int i = 0; i < 32; ++i)
        for (int j = 0; j < 8; ++j)
            CHECK(f.value(i, j) == f.horizontal.cell_average(i) + f.lateral(i, j) + f.c_const);
    CHECK(f.c_const > 0.0);
}

TEST_CASE("window masses") {
    const auto p = derive_params(s2, 2.0);
    CHECK_THAT(c_window_mass(SurfaceKind::ThickDisk, p, {0.0}), WithinRel(1.0, 1e-14));
    CHECK_THAT(c_window_mass(SurfaceKind::ThickDisk, p, {-1.0}), WithinRel(std::exp(1.0 / s2), 1e-12));

    // closed form vs quadrature of (gamma/2) e^{(beta - Q) c}
    gsl_set_error_handler_off();
    gsl_integration_workspace* ws = gsl_integration_workspace_alloc(1000);
    for (double W : {1.2, 2.0, 2.7}) {
        const auto q = derive_params(s2, W);
        struct P {
            double g, r;
        } par{s2 / 2.0, q.Q - q.beta};
        gsl_function f;
        f.function = [](double c, void* v) {
            auto* pp = static_cast<P*>(v);
            return pp->g * std::exp(-pp->r * c);
        };
        f.params = &par;
        double res = 0, err = 0;
        gsl_integration_qags(&f, -0.5, 2.5, 0, 1e-13, 1000, ws, &res, &err);
        CHECK_THAT(c_window_mass(SurfaceKind::ThickDisk, q, {-0.5, 2.5}), WithinRel(res, 1e-12));
    }
    gsl_integration_workspace_free(ws);

    // window (-M, hi]: mass increases to (gamma/2)(Q-beta)^{-1} e^{(Q-beta) M} as hi grows
    const double M = 1.5, limit = (s2 / 2.0) / (p.Q - p.beta) * std::exp((p.Q - p.beta) * M);
    double prev = 0.0;
    for (double hi : {0.0, 5.0, 20.0, 60.0}) {
        const double m = c_window_mass(SurfaceKind::ThickDisk, p, {-M, hi});
        CHECK(m > prev);
        CHECK(m <= limit * (1 + 1e-15));
        prev = m;
    }
    CHECK_THAT(prev, WithinRel(limit, 1e-12));
}

TEST_CASE("sample_surface: wedge weight is one, determinism, window rules") {
    const GridSpec g{4.0, 32, 8};
    const auto w = sample_surface(SurfaceKind::Wedge, s2, 2.0, g, std::nullopt, 1);
    CHECK(w.importance_weight == 1.0);
    const auto a = sample_surface(SurfaceKind::Sphere, s2, 3.0, g, CWindow{0.0}, 42);
    const auto b = sample_surface(SurfaceKind::Sphere, s2, 3.0, g, CWindow{0.0}, 42);
    CHECK(a.lateral == b.lateral);
    CHECK(a.horizontal.values == b.horizontal.values);
    CHECK(a.c_const == b.c_const);
    CHECK(a.importance_weight == b.importance_weight);
    CHECK_THROWS_AS(sample_surface(SurfaceKind::ThickDisk, s2, 2.0, g, std::nullopt, 1), ParameterError);
    CHECK_THROWS_AS(sample_surface(SurfaceKind::Wedge, s2, 2.0, g, CWindow{0.0}, 1), ParameterError);
    CHECK_THROWS_AS(sample_surface(SurfaceKind::ThickDisk, s2, 0.5, g, CWindow{0.0}, 1), ParameterError);
}

TEST_CASE("calibrated t_cut leaves little boundary mass beyond the cut") {
    for (double W : {2.0, 3.0, 4.0}) {
        const auto p = derive_params(s2, W);
        const double t = calibrated_t_cut(p, SurfaceKind::ThickDisk);
        // sample on a strip twice as long and measure the mass outside [-t, t]
        const SurfaceSampler big(SurfaceKind::ThickDisk, p, GridSpec{2.0 * t, 1024, 4});
        Rng rng(8);
        double outside = 0.0, total = 0.0;
        for (int i = 0; i < 300; ++i) {
            const auto f = big.sample(CWindow{0.0, 1.0}, rng);
            const auto m = gmc::boundary_measure(f, gmc::Side::Lower);
            total += m.total;
            outside += m.total - gmc::arc_length(m, -t, t);
        }
        INFO("W = " << W << ", t_cut = " << t);
        CHECK(outside / total < 1e-3);
    }
}

TEST_CASE("disk with two prescribed boundary lengths") {
    // cell edges fall on 0 and 1 so the bump cells are exactly [0, 1]
    const GridSpec g{8.0, 256, 16};
    for (auto [l1, l2] : {std::pair{0.5, 2.0}, std::pair{1.0, 1.0}}) {
        const auto d = sample_disk_two_lengths(s2, 2.0, l1, l2, 3.0, g, 99);
        const auto lower = gmc::boundary_measure(d.sample, gmc::Side::Lower);
        const auto upper = gmc::boundary_measure(d.sample, gmc::Side::Upper);
        CHECK_THAT(lower.total, WithinRel(l1, 1e-6));
        CHECK_THAT(upper.total, WithinRel(l2, 1e-6));
        CHECK(d.sample.importance_weight > 0.0);
        CHECK(d.attempts >= 1);
    }
    CHECK_THROWS_AS(sample_disk_two_lengths(s2, 0.5, 1.0, 1.0, 1.0, g, 1), ParameterError);
}

TEST_CASE("bump: [0,1] mass is increasing in the bump coefficient") {
    const GridSpec g{8.0, 256, 16};
    const auto f = sample_surface(SurfaceKind::ThickDisk, s2, 2.0, g, CWindow{0.0}, 4);
    const Eigen::MatrixXd bump = Bump::cell_averages(g, false);
    double prev = -1.0;
    for (double alpha : {-2.0, -1.0, 0.0, 0.5, 1.0, 3.0}) {
        auto h = f;
        h.lateral += alpha * bump;
        const double m = gmc::arc_length(gmc::boundary_measure(h, gmc::Side::Lower), 0.0, 1.0);
        CHECK(m > prev);
        prev = m;
    }
    // zero column means: the bump lives in the lateral space
    for (int i = 0; i < g.nx; ++i) CHECK(std::abs(bump.row(i).mean()) < 1e-12);
}
