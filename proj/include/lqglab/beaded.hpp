#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "lqglab/report.hpp"
#include "lqglab/rng.hpp"
#include "lqglab/stats.hpp"

namespace lqg::beaded {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Bead {
    double u = 0.0;         // cut-point label
    double left_len = 0.0;
    std::optional<double> right_len;
};

// Beads with left lengths in (cutoff, max_len), labels in [0, T].
struct BeadChain {
    std::vector<Bead> beads;
    double T = 0.0;
    double W = 0.0;
    double gamma = 0.0;
    double cutoff = 0.0;
    double max_len = kInf;

    double left_length() const;
    void validate() const;
};

struct SubordinatorPath {
    std::vector<double> u;
    std::vector<double> L;  // L[k] = sum of left lengths with label <= u[k]

    // L_t (right-continuous step function).
    double at(double t) const;
};

// p = 2W/gamma^2; throws unless 0 < W < gamma^2/2.
double thin_exponent(double W, double gamma);

// int_cutoff^max_len L^{p-2} dL
double levy_tail_mass(double p, double cutoff, double max_len = kInf);
double expected_bead_count(double W, double gamma, double T, double cutoff, double max_len = kInf);

// Lengths from L^{p-2} dL and the size-biased L^{p-1} dL on (cutoff, max_len).
double sample_bead_length(double p, double cutoff, double max_len, Rng& rng);
double sample_size_biased_length(double p, double cutoff, double max_len, Rng& rng);

BeadChain sample_levy_marks(double W, double gamma, double T, double cutoff, Rng& rng, double max_len = kInf);
BeadChain sample_levy_marks(double W, double gamma, double T, double cutoff, std::uint64_t seed,
                            double max_len = kInf);

// Keeps only beads longer than new_cutoff (a sample at the larger cutoff).
BeadChain thin_chain(const BeadChain& chain, double new_cutoff);

// b placed after a; the result has mass a.T + b.T.
BeadChain concatenate(const BeadChain& a, const BeadChain& b);

SubordinatorPath subordinator_path(const BeadChain& chain);

struct TrimSplit {
    std::size_t kept = 0;  // beads retained from the start
    double dropped = 0.0;  // left length removed
};

// Walks from the v-end (largest label) and drops beads up to and including the one
// containing cumulative left length delta.
TrimSplit trim_split(std::span<const double> left_lengths, double delta);
BeadChain delta_trim(const BeadChain& chain, double delta);

// f_{ell,delta}: density of the trimmed left length.
class FDensity {
public:
    FDensity(double ell, double delta, double p);

    double operator()(double x) const;
    double cdf(double x) const;
    // Unnormalized closed form; kernel_gap takes the distance to the right end of the support separately.
    double kernel(double x) const;
    double kernel_gap(double x, double right_gap) const;
    double normalizer() const { return z_; }
    double support_end() const { return ell_ - delta_; }

private:
    double ell_, delta_, p_, z_;
};

double f_density(double ell, double delta, double W, double gamma, double x);

struct Triple {
    double x = 0.0, y = 0.0, z = 0.0;
};

// (x, y) from x^{-p} y^{p-2} (ell-x-y)^{-p} on x < ell-delta < x+y < ell, z = ell-x-y.
Triple marked_decomposition_sample(double W, double gamma, double ell, double delta, Rng& rng);
Triple marked_decomposition_sample(double W, double gamma, double ell, double delta, std::uint64_t seed);

struct TrimmedLengthOptions {
    double cutoff = 1e-6;  // in units of ell
    double eta = 1e-2;     // conditioning window [ell(1-eta), ell(1+eta)]
    std::size_t per_task = 2000;
    int workers = 0;
};

// Left lengths of delta-trimmed chains conditioned on left length ell, importance weighted.
EmpiricalSample trimmed_left_lengths(double W, double gamma, double ell, double delta, std::size_t n,
                                     std::uint64_t seed, const TrimmedLengthOptions& options = {});

struct DecompositionOptions {
    double cutoff = 1e-3;
    double max_len = 1.0;
    bool unbiased_insert = false;  // negative control
    std::size_t per_task = 5000;
    int workers = 0;
};

struct DecompositionSamples {
    EmpiricalSample marked_chain;  // procedure 1
    EmpiricalSample inserted;      // procedure 3
};

DecompositionSamples decomposition_samples(double W, double gamma, double T, std::size_t n, std::uint64_t seed,
                                           const DecompositionOptions& options = {});
LawReport decomposition_equivalence_test(double W, double gamma, double T, std::size_t n, std::uint64_t seed,
                                         const DecompositionOptions& options = {}, std::vector<PlotData>* plots = nullptr);

struct LaplaceOptions {
    std::vector<double> lambdas{0.05, 0.0707, 0.1, 0.1414, 0.2, 0.2828, 0.4, 0.5};
    double cutoff_small = 1e-4;
    double cutoff_large = 4e-4;
    double tolerance = 0.03;  // relative
    std::size_t per_task = 2000;
    int workers = 0;
};

struct LaplaceCurve {
    std::vector<double> lambdas;
    std::vector<double> phi_small;  // -log E exp(-lambda L_1) at the small cutoff
    std::vector<double> phi_large;
    std::vector<double> phi_extrapolated;
};

LaplaceCurve laplace_exponent_curve(double W, double gamma, std::size_t n, std::uint64_t seed,
                                    const LaplaceOptions& options = {});
// Slope of log Phi vs log lambda after two-cutoff extrapolation, against 1 - 2W/gamma^2.
LawReport subordinator_exponent_check(double W, double gamma, std::size_t n, std::uint64_t seed,
                                      const LaplaceOptions& options = {}, std::vector<PlotData>* plots = nullptr);

}  // namespace lqg::beaded
