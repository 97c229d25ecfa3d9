#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lqglab/beaded.hpp"
#include "lqglab/cone.hpp"
#include "lqglab/field.hpp"
#include "lqglab/report.hpp"
#include "lqglab/stats.hpp"

namespace lqg::laws {

// (ell + r)^{-4/gamma^2 - 1}
double law_weight2_joint(double ell, double r, double gamma);
// (ell r)^{q-1} / (ell^q + r^q)^2, q = 4/gamma^2
double law_gamma2half_joint(double ell, double r, double gamma);

struct Exponent {
    bool infinite = false;
    double value = 0.0;
};

// Power of ell in the boundary-length law; infinite once W >= gamma Q.
Exponent boundary_length_exponent(double W, double gamma);

// Normalized law of the interface length between disks of weights W1 and W2 in {2, gamma^2/2}.
class InterfaceDensity {
public:
    InterfaceDensity(double ell, double ellp, double W1, double W2, double gamma);
    double operator()(double x) const;
    double unnormalized(double x) const;
    double normalizer() const { return z_; }

private:
    double ell_, ellp_, W1_, W2_, gamma_, z_;
};

double interface_length_density(double ell, double ellp, double W1, double W2, double gamma, double x);

struct TailFitOptions {
    int bins = 20;
    int bootstrap = 200;
    std::uint64_t bootstrap_seed = 0;
    std::optional<double> target;
    double tolerance = 0.05;
};

struct TailFit {
    LawReport report;
    std::vector<double> bin_centers;
    std::vector<double> densities;
};

// Weighted log-log least squares of the empirical density over log-spaced bins in [lo, hi].
TailFit fit_tail(const EmpiricalSample& sample, std::pair<double, double> window, const TailFitOptions& options = {});
LawReport fit_tail_exponent(const EmpiricalSample& sample, std::pair<double, double> window,
                            const TailFitOptions& options = {});

// KS against a reference cdf; pass when p > tolerance.
LawReport ks_compare(const EmpiricalSample& sample, const std::function<double(double)>& cdf,
                     const std::string& name = "ks_compare", double tolerance = 0.01);

struct Weight2Samples {
    std::vector<double> ell, r, total;
};

// Total length S from s^{-4/gamma^2} on the window, U uniform, (ell, r) = (US, (1-U)S).
Weight2Samples weight2_remarking_samples(double gamma, std::pair<double, double> window, std::size_t n,
                                         std::uint64_t seed);
// CDF of ell under law_weight2_joint restricted to ell + r in the window (nested quadrature, tabulated).
std::function<double(double)> weight2_ell_marginal_cdf(double gamma, std::pair<double, double> window);
LawReport weight2_remarking_check(double gamma, std::pair<double, double> window, std::size_t n, std::uint64_t seed,
                                  std::vector<PlotData>* plots = nullptr);

LawReport mot_cov_check(double gamma, std::optional<double> a2, double horizon, std::size_t n, std::uint64_t seed);

// Window mass recorded by the disk sampler vs (2W/gamma^2 - 1)^{-1} e^{(Q-beta) zeta}.
double window_mass_closed_form(double W, double gamma, double zeta);
LawReport window_mass_check(double W, double gamma, double zeta, std::uint64_t seed = 0);

// int_{ell-delta-x}^{ell-x} x^{-p} y^{p-2} (ell-x-y)^{-p} dy
double f_density_integral_form(double ell, double delta, double p, double x);
LawReport f_density_oracle_check(double W, double gamma, double ell, double delta, std::size_t n_points);

LawReport trimmed_length_ks_check(double W, double gamma, double ell, double delta, std::size_t n, std::uint64_t seed,
                                  const beaded::TrimmedLengthOptions& options = {}, std::vector<PlotData>* plots = nullptr);

struct BoundaryExponentOptions {
    int nx = 512;
    int ny = 32;
    double zeta = 0.0;
    double tolerance = 0.1;
    double upper_quantile = 0.999;
    std::size_t per_task = 50;
    int workers = 0;
};

struct BoundaryLengths {
    EmpiricalSample total;        // boundary length of the disk
    std::vector<double> base;     // same without the additive constant
};

BoundaryLengths boundary_length_samples(double gamma, double W, std::size_t n, std::uint64_t seed,
                                        const BoundaryExponentOptions& options = {});
// Fit window: from exp(mean + 3 sd) of log base lengths up to the upper quantile of the totals.
std::pair<double, double> boundary_fit_window(const BoundaryLengths& s, double upper_quantile);
LawReport boundary_exponent_check(double gamma, double W, std::size_t n, std::uint64_t seed,
                                  const BoundaryExponentOptions& options = {}, std::vector<PlotData>* plots = nullptr);

// add_constant((2/gamma) log lambda) scales boundary cells by lambda and area cells by lambda^2.
LawReport scaling_invariance_check(double gamma, double W, double lambda, std::size_t n_samples, std::uint64_t seed);

struct GridCheckOptions {
    std::vector<double> ells{1.0, 2.0, 3.0};
    std::vector<double> rs{1.0, 2.0};
    double h_coarse = 0.1;
    double dt = 1e-8;
    double tolerance = 0.1;
    cone::ExitOptions exit;
};

// Kernel estimates over the (ell, r) grid, ratios to (1,1) against the closed form.
LawReport gamma2half_grid_check(double gamma, std::uint64_t n, std::uint64_t seed,
                                const GridCheckOptions& options = {}, std::vector<PlotData>* plots = nullptr);

}  // namespace lqg::laws
