#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <vector>

#include "lqglab/report.hpp"
#include "lqglab/rng.hpp"

namespace lqg::cone {

// Correlated planar Brownian motion (L, R): Var = a2 t, Cov = -cos(pi gamma^2/4) a2 t.
struct CovSpec {
    double gamma = 0.0;
    double a2 = 0.0;

    // a2 defaults to 2/sin(pi gamma^2/4).
    static CovSpec from_gamma(double gamma, std::optional<double> a2 = std::nullopt);
    double theta() const;        // pi gamma^2/4
    double correlation() const;  // -cos(theta)
    double covariance() const { return correlation() * a2; }
    void validate() const;
};

struct Point {
    double L = 0.0;
    double R = 0.0;
};

// Shear z -> Lambda z onto the wedge of angle theta, then w -> w^{4/gamma^2} onto the upper half-plane.
std::complex<double> shear(Point p, const CovSpec& cov);
std::complex<double> shear_and_power(Point p, const CovSpec& cov);

struct ConePath {
    Point start;
    double dt = 0.0;
    std::vector<Point> points;  // points[0] = start; last point is the exit point when exited
    bool exited = false;
    Point exit_point;
    double exit_time = 0.0;
};

// Euler path with per-step Brownian-bridge crossing detection; stops at exit or after max_steps.
ConePath sample_cone_path(Point start, const CovSpec& cov, double dt, Rng& rng, std::size_t max_steps = 1u << 22,
                          bool record = true);
ConePath sample_cone_path(Point start, const CovSpec& cov, double dt, std::uint64_t seed,
                          std::size_t max_steps = 1u << 22);

enum class Axis { Horizontal, Vertical };  // R = 0 or L = 0

struct ExitPoint {
    Axis axis = Axis::Horizontal;
    double position = 0.0;  // L on the horizontal axis, R on the vertical axis
    int steps = 0;
};

// Exit position of the path from `start` by walk-on-spheres in whitened coordinates; the walk stops within
// `shell` (whitened units) of the boundary.
ExitPoint sample_exit_point(Point start, const CovSpec& cov, double shell, Rng& rng);

// Shell width used for a requested time step: one step's standard deviation.
double shell_for_dt(double dt);

struct KernelEstimate {
    double value = 0.0;
    double std_error = 0.0;
    double upper95 = 0.0;  // one-sided bound, meaningful when hits == 0
    std::uint64_t n_paths = 0;
    std::uint64_t hits = 0;
    double ell = 0.0, r = 0.0, delta = 0.0, eps = 0.0;
};

struct ExitOptions {
    std::size_t per_task = 100000;
    int workers = 0;
};

// P[exit on the vertical axis within (0, eps)] from start, one estimate per eps from a shared path set.
std::vector<KernelEstimate> exit_corner_probs(Point start, const std::vector<double>& eps, const CovSpec& cov,
                                              double dt, std::uint64_t n, std::uint64_t seed,
                                              const ExitOptions& options = {});
KernelEstimate exit_corner_prob(Point start, double eps, const CovSpec& cov, double dt, std::uint64_t n,
                                std::uint64_t seed, const ExitOptions& options = {});

// (1/(delta eps)) P_{(ell, delta)}[exit on the vertical axis within (r, r + eps)], one per r, shared paths.
std::vector<KernelEstimate> kernel_estimates(double ell, const std::vector<double>& rs, double delta, double eps,
                                             const CovSpec& cov, double dt, std::uint64_t n, std::uint64_t seed,
                                             const ExitOptions& options = {});
KernelEstimate kernel_estimate(double ell, double r, double delta, double eps, const CovSpec& cov, double dt,
                               std::uint64_t n, std::uint64_t seed, const ExitOptions& options = {});

// First-order extrapolation 2 K(h/2) - K(h) from independent estimates.
KernelEstimate richardson(const KernelEstimate& coarse, const KernelEstimate& fine);

// ell^{q-1} r^{q-1} / (ell^q + r^q)^2, q = 4/gamma^2.
double closed_form_kernel(double ell, double r, double gamma);

struct DurationOptions {
    double delta = 0.1;
    double max_time = 0.0;  // 0: 50 (ell^2 + r^2) / a2
    std::size_t per_task = 2000;
    int workers = 0;
};

// Exit times of paths from (ell, delta) that exit the vertical axis inside [r_lo, r_hi]; n attempted paths.
std::vector<double> duration_samples(double ell, double r_lo, double r_hi, const CovSpec& cov, double dt,
                                     std::uint64_t n, std::uint64_t seed, const DurationOptions& options = {});

struct IncrementMoments {
    double var_L = 0.0;  // per unit time
    double var_R = 0.0;
    double cov_LR = 0.0;
    double corr = 0.0;
    std::uint64_t n = 0;
};

IncrementMoments increment_moments(const CovSpec& cov, double dt, std::uint64_t n, std::uint64_t seed);

// Correlated increment (dL, dR) over time dt.
Point sample_increment(const CovSpec& cov, double dt, Rng& rng);

struct KernelRatioOptions {
    double h_coarse = 0.1;  // delta = eps = h
    double dt = 1e-8;
    ExitOptions exit;
};

// K(2,1)/K(1,1) after a Richardson pair in h; closed-form target.
LawReport cone_kernel_ratio_check(double gamma, std::uint64_t n, std::uint64_t seed,
                                  const KernelRatioOptions& options = {});

struct CornerOptions {
    std::vector<double> eps{0.05, 0.1, 0.2};
    Point start{1.0, 1.0};
    double dt = 1e-8;
    double tolerance = 0.1;
    ExitOptions exit;
};

// Log-log slope of the corner-exit probability against 4/gamma^2.
LawReport corner_exit_exponent_check(double gamma, std::uint64_t n, std::uint64_t seed,
                                     const CornerOptions& options = {}, std::vector<PlotData>* plots = nullptr);

}  // namespace lqg::cone
