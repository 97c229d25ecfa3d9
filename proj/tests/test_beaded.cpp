#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include <gsl/gsl_cdf.h>
#include <gsl/gsl_integration.h>
#include <gsl/gsl_randist.h>

#include "lqglab/beaded.hpp"
#include "lqglab/errors.hpp"
#include "lqglab/stats.hpp"

using namespace lqg;
using namespace lqg::beaded;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const double s2 = std::sqrt(2.0);

// int_{ell-delta-x}^{ell-x} x^{-p} y^{p-2} (ell-x-y)^{-p} dy with the endpoint singularity handled by QAWS.
double integral_form_gsl(double ell, double delta, double p, double x) {
    struct P {
        double p;
    } par{p};
    gsl_function f;
    f.function = [](double y, void* v) { return std::pow(y, static_cast<P*>(v)->p - 2.0); };
    f.params = &par;
    gsl_integration_qaws_table* t = gsl_integration_qaws_table_alloc(0.0, -p, 0, 0);
    gsl_integration_workspace* ws = gsl_integration_workspace_alloc(2000);
    double res = 0, err = 0;
    gsl_integration_qaws(&f, ell - delta - x, ell - x, t, 0.0, 1e-13, 2000, ws, &res, &err);
    gsl_integration_workspace_free(ws);
    gsl_integration_qaws_table_free(t);
    return std::pow(x, -p) * res;
}

}  // namespace

TEST_CASE("thin exponent and Levy mass") {
    CHECK_THAT(thin_exponent(0.5, s2), WithinRel(0.5, 1e-15));
    CHECK_THROWS_AS(thin_exponent(1.0, s2), ParameterError);
    CHECK_THROWS_AS(thin_exponent(0.0, s2), ParameterError);
    CHECK_THAT(levy_tail_mass(0.5, 0.01), WithinRel(20.0, 1e-14));
    CHECK_THAT(expected_bead_count(0.5, s2, 1.0, 0.01), WithinRel(20.0, 1e-14));
    CHECK_THAT(expected_bead_count(0.5, s2, 2.0, 0.01), WithinRel(40.0, 1e-14));
    CHECK_THAT(levy_tail_mass(0.3, 0.1, 2.0), WithinRel((std::pow(2.0, -0.7) - std::pow(0.1, -0.7)) / -0.7, 1e-14));
}

TEST_CASE("bead count: empirical mean matches the intensity") {
    for (double T : {1.0, 2.0}) {
        Rng rng(1);
        std::vector<double> counts;
        for (int i = 0; i < 4000; ++i) counts.push_back(double(sample_levy_marks(0.5, s2, T, 0.01, rng).beads.size()));
        const auto ms = mean_and_se(counts);
        CHECK(std::abs(ms.mean - 20.0 * T) < 3.0 * ms.se);
    }
    CHECK(sample_levy_marks(0.5, s2, 0.0, 0.01, 3).beads.empty());
}

TEST_CASE("chain labels are sorted in [0, T] and lengths exceed the cutoff") {
    const auto c = sample_levy_marks(0.3, s2, 2.5, 1e-4, 8);
    c.validate();
    for (std::size_t i = 0; i < c.beads.size(); ++i) {
        CHECK(c.beads[i].u >= 0.0);
        CHECK(c.beads[i].u <= 2.5);
        CHECK(c.beads[i].left_len > 1e-4);
        if (i) CHECK(c.beads[i].u > c.beads[i - 1].u);
    }
}

TEST_CASE("Poisson counts in a box pass a chi-square test") {
    // box [0.2, 0.7] x (0.05, 0.2), p = 0.5
    const double p = 0.5, mu = 0.5 * levy_tail_mass(p, 0.05, 0.2);
    Rng rng(17);
    const int n = 5000, K = 8;
    std::vector<double> obs(K + 1, 0.0);
    for (int i = 0; i < n; ++i) {
        const auto c = sample_levy_marks(0.5, s2, 1.0, 0.01, rng);
        int k = 0;
        for (const auto& b : c.beads)
            if (b.u >= 0.2 && b.u <= 0.7 && b.left_len > 0.05 && b.left_len < 0.2) ++k;
        obs[std::min(k, K)] += 1.0;
    }
    double chi2 = 0.0;
    for (int k = 0; k <= K; ++k) {
        const double pk = k < K ? gsl_ran_poisson_pdf(k, mu) : gsl_cdf_poisson_Q(K - 1, mu);
        chi2 += (obs[k] - n * pk) * (obs[k] - n * pk) / (n * pk);
    }
    CHECK(gsl_cdf_chisq_Q(chi2, K) > 0.01);
}

TEST_CASE("bead length sampler matches the truncated power law") {
    const double p = 0.4, c = 0.01, M = 3.0;
    Rng rng(4);
    EmpiricalSample s, sb;
    for (int i = 0; i < 20000; ++i) {
        s.add(sample_bead_length(p, c, M, rng));
        sb.add(sample_size_biased_length(p, c, M, rng));
    }
    auto cdf = [&](double q) {
        return [=](double x) {
            x = std::clamp(x, c, M);
            return (std::pow(x, q) - std::pow(c, q)) / (std::pow(M, q) - std::pow(c, q));
        };
    };
    CHECK(ks_one_sample(s, cdf(p - 1.0)).p_value > 0.01);
    CHECK(ks_one_sample(sb, cdf(p)).p_value > 0.01);
}

TEST_CASE("subordinator path is nondecreasing and self-similar") {
    // alpha = 1 - 2W/gamma^2 = 0.5: L_{2t} has the law of 2^{1/alpha} L_t = 4 L_t
    Rng rng(23);
    EmpiricalSample at1, at_half_scaled;
    for (int i = 0; i < 3000; ++i) {
        const auto c = sample_levy_marks(0.5, s2, 1.0, 1e-7, rng);
        const auto path = subordinator_path(c);
        for (std::size_t k = 1; k < path.L.size(); ++k) REQUIRE(path.L[k] >= path.L[k - 1]);
        at1.add(path.at(1.0));
        const auto d = sample_levy_marks(0.5, s2, 1.0, 1e-7, rng);
        at_half_scaled.add(4.0 * subordinator_path(d).at(0.5));
    }
    CHECK(ks_two_sample(at1, at_half_scaled).p_value > 0.01);
}

TEST_CASE("delta_trim drops exactly the beads covering delta and conserves length") {
    Rng rng(31);
    for (int i = 0; i < 200; ++i) {
        const auto c = sample_levy_marks(0.5, s2, 1.0, 1e-4, rng);
        if (c.beads.size() < 3) continue;
        const double last = c.beads.back().left_len;
        const auto one = delta_trim(c, 0.5 * last);
        CHECK(one.beads.size() == c.beads.size() - 1);

        std::vector<double> lens;
        for (const auto& b : c.beads) lens.push_back(b.left_len);
        const double delta = 0.3 * c.left_length();
        const auto split = trim_split(lens, delta);
        const auto trimmed = delta_trim(c, delta);
        CHECK(trimmed.beads.size() == split.kept);
        CHECK_THAT(trimmed.left_length() + split.dropped, WithinRel(c.left_length(), 1e-14));
        CHECK(split.dropped >= delta);
    }
}

TEST_CASE("concatenation adds masses") {
    const auto a = sample_levy_marks(0.5, s2, 0.4, 1e-3, 1);
    const auto b = sample_levy_marks(0.5, s2, 0.6, 1e-3, 2);
    const auto c = concatenate(a, b);
    CHECK_THAT(c.T, WithinRel(1.0, 1e-15));
    CHECK(c.beads.size() == a.beads.size() + b.beads.size());
    CHECK_THAT(c.left_length(), WithinRel(a.left_length() + b.left_length(), 1e-14));
    c.validate();
}

TEST_CASE("thinning a chain equals sampling at the larger cutoff") {
    Rng rng(40);
    std::vector<double> thinned, direct;
    for (int i = 0; i < 3000; ++i) {
        thinned.push_back(double(thin_chain(sample_levy_marks(0.5, s2, 1.0, 1e-3, rng), 0.01).beads.size()));
        direct.push_back(double(sample_levy_marks(0.5, s2, 1.0, 0.01, rng).beads.size()));
    }
    const auto a = mean_and_se(thinned), b = mean_and_se(direct);
    CHECK(std::abs(a.mean - b.mean) < 3.0 * std::hypot(a.se, b.se));
}

TEST_CASE("f density: closed form equals the integral form (QAWS oracle)") {
    for (double W : {0.3, 0.5, 0.7}) {
        const double p = thin_exponent(W, s2);
        for (auto [ell, delta] : {std::pair{1.0, 0.1}, std::pair{2.0, 0.7}}) {
            const FDensity f(ell, delta, p);
            double worst = 0.0;
            for (int i = 1; i <= 1000; ++i) {
                const double x = (ell - delta) * (i - 0.5) / 1000.0;
                worst = std::max(worst, std::abs(f.kernel(x) / integral_form_gsl(ell, delta, p, x) - 1.0));
            }
            CHECK(worst < 1e-8);
        }
    }
}

TEST_CASE("f density: normalization, positivity and the x^{-p} singularity") {
    const double p = thin_exponent(0.5, s2);
    const FDensity f(1.0, 0.1, p);
    CHECK_THAT(f.cdf(0.9), WithinAbs(1.0, 1e-8));
    for (int i = 1; i < 100; ++i) {
        const double x = 0.9 * i / 100.0;
        CHECK(std::isfinite(f(x)));
        CHECK(f(x) > 0.0);
    }
    const double slope = (std::log(f(1e-6)) - std::log(f(1e-7))) / std::log(10.0);
    CHECK_THAT(slope, WithinAbs(-0.5, 0.02));
    CHECK_THAT(f_density(1.0, 0.1, 0.5, s2, 0.3), WithinRel(f(0.3), 1e-15));
}

TEST_CASE("marked decomposition sample: support and x-marginal") {
    Rng rng(12);
    const double ell = 1.0, delta = 0.2;
    EmpiricalSample xs;
    for (int i = 0; i < 20000; ++i) {
        const auto t = marked_decomposition_sample(0.5, s2, ell, delta, rng);
        REQUIRE(t.x < ell - delta);
        REQUIRE(ell - delta < t.x + t.y);
        REQUIRE(t.x + t.y < ell);
        REQUIRE_THAT(t.x + t.y + t.z, WithinAbs(ell, 1e-15));
        xs.add(t.x);
    }
    const FDensity f(ell, delta, 0.5);
    CHECK(ks_one_sample(xs, [&](double x) { return f.cdf(std::clamp(x, 0.0, ell - delta)); }).p_value > 0.01);
}

TEST_CASE("trimmed chain lengths follow f (small n)") {
    const auto s = trimmed_left_lengths(0.5, s2, 1.0, 0.1, 3000, 5);
    const FDensity f(1.0, 0.1, 0.5);
    CHECK(ks_one_sample(s, [&](double x) { return f.cdf(std::clamp(x, 0.0, 0.9)); }).p_value > 0.01);
}

TEST_CASE("decomposition equivalence and its negative control") {
    const auto pass = decomposition_equivalence_test(0.5, s2, 1.0, 20000, 3);
    CHECK(pass.pass);
    CHECK(pass.estimate > 0.01);
    DecompositionOptions o;
    o.unbiased_insert = true;
    const auto control = decomposition_equivalence_test(0.5, s2, 1.0, 20000, 3, o);
    CHECK(control.pass);
    CHECK(control.estimate < 1e-3);
    CHECK(control.name == "decomposition_equivalence_control");
}

TEST_CASE("Laplace exponent slope 1 - 2W/gamma^2") {
    LaplaceOptions o;
    o.workers = 2;
    const auto r = subordinator_exponent_check(0.5, s2, 100000, 9, o);
    CHECK_THAT(r.estimate, WithinAbs(0.5, 0.015));
    CHECK(r.pass);
}
