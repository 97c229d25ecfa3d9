#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "lqglab/report.hpp"
#include "lqglab/rng.hpp"

namespace lqg::sle {

using Complex = std::complex<double>;

// Driving function and force points on the grid k*dt, k = 0..steps.
struct DrivingPath {
    double dt = 0.0;
    std::vector<double> W;
    std::vector<double> V_minus;
    std::vector<double> V_plus;
    double kappa = 0.0;
    double rho_minus = 0.0;
    double rho_plus = 0.0;
    int left_collisions = 0;  // steps that used the exact Bessel update on the left gap
    int right_collisions = 0;

    std::size_t steps() const { return W.empty() ? 0 : W.size() - 1; }
    double time(std::size_t k) const { return static_cast<double>(k) * dt; }
    void validate() const;
};

struct DrivingOptions {
    // Gaps below collision_factor * sqrt(kappa dt) are advanced with the exact Bessel transition.
    double collision_factor = 3.0;
};

DrivingPath sample_driving(double kappa, double rho_minus, double rho_plus, std::size_t n_steps, double dt,
                           Rng& rng, const DrivingOptions& options = {});
DrivingPath sample_driving(double kappa, double rho_minus, double rho_plus, std::size_t n_steps, double dt,
                           std::uint64_t seed, const DrivingOptions& options = {});

// Mirror image: (W, V-, V+, rho-, rho+) -> (-W, -V+, -V-, rho+, rho-).
DrivingPath mirror(const DrivingPath& d);

// Inverse slit map of step j (1-based) applied to z: U + sqrt((z-U)^2 - 4 dt), Im >= 0 branch.
Complex inverse_slit(Complex z, double U, double dt);
// Forward slit map of step j: U + sqrt((z-U)^2 + 4 dt).
Complex forward_slit(Complex z, double U, double dt);
// Driving value used on step j (midpoint of W_{j-1}, W_j).
double step_driving(const DrivingPath& d, std::size_t j);

// f_1 o ... o f_k (z): maps the image half-plane at time t_k back to H minus the curve.
Complex inverse_loewner(const DrivingPath& d, std::size_t k, Complex z);
// Tip gamma(t_k).
Complex tip(const DrivingPath& d, std::size_t k);

struct LoewnerCurve {
    std::vector<double> t;
    std::vector<Complex> points;
    DrivingPath driving;
    bool touched_left = false;
    bool touched_right = false;
    int neglected_components = 0;
};

struct TraceOptions {
    std::size_t stride = 0;  // 0: about 1000 traced points
    double touch_threshold = 1e-2;
    std::size_t burn_in = 100;
};

LoewnerCurve trace_curve(const DrivingPath& d, const TraceOptions& options = {});

// min over k >= burn_in of (W - V-)/sqrt(kappa t_k) (left) or (V+ - W)/sqrt(kappa t_k) (right).
double min_relative_gap(const DrivingPath& d, bool left, std::size_t burn_in = 100);

// Whether the gap comes within threshold * sqrt(kappa t) in continuous time: grid values plus a Brownian-bridge
// dip between consecutive grid points.
bool approaches(const DrivingPath& d, bool left, double threshold, std::size_t burn_in, Rng& rng);

struct HitOptions {
    std::size_t n_steps = 100000;
    double dt = 1e-5;
    std::size_t burn_in = 100;
    std::size_t per_task = 10;
    int workers = 0;
    DrivingOptions driving;
};

struct HitFractions {
    double left = 0.0;
    double right = 0.0;
    std::size_t n = 0;
};

HitFractions hit_fractions(double kappa, double rho_minus, double rho_plus, std::size_t n_curves, double threshold,
                           std::uint64_t seed, const HitOptions& options = {});

// Fraction of curves whose left gap proxy drops below threshold; passes when it lies on the side of 1/2
// predicted by the hitting criterion rho < kappa/2 - 2.
LawReport boundary_hit_stats(double kappa, double rho_minus, double rho_plus, std::size_t n_curves,
                             double threshold, std::uint64_t seed, const HitOptions& options = {});

struct PhaseOptions {
    std::vector<double> rhos{-1.8, -1.5, -1.0, -0.5, 0.5};
    double rho_plus = 0.0;
    double tolerance = 0.3;  // on the crossing location
    HitOptions hit;
};

// Left-hit fraction over a rho grid: monotone decreasing and crossing 1/2 near kappa/2 - 2.
LawReport hitting_phase_check(double kappa, std::size_t n_curves, double threshold, std::uint64_t seed,
                              const PhaseOptions& options = {}, std::vector<PlotData>* plots = nullptr);

struct MultipleOptions {
    TraceOptions trace;
    DrivingOptions driving;
};

// Recursive multiple-SLE sample; curve k separates weights W_1..W_{k+1} from the rest, ordered left to right.
std::vector<LoewnerCurve> sample_multiple(const std::vector<double>& weights, double gamma, std::size_t n_steps,
                                          double dt, std::uint64_t seed, const MultipleOptions& options = {});

// Smallest distance between two traced point sets.
double min_distance(const LoewnerCurve& a, const LoewnerCurve& b);

}  // namespace lqg::sle
