#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "lqglab/rng.hpp"

namespace lqg::field {

struct LqgParams {
    double gamma = 0.0;
    double Q = 0.0;
    double W = 0.0;
    double beta = 0.0;   // strip surfaces
    double alpha = 0.0;  // cylinder surfaces
    bool thick = false;  // W >= gamma^2 / 2
};

LqgParams derive_params(double gamma, double W);

enum class SurfaceKind { ThickDisk, Wedge, Sphere, Cone };
enum class Domain { Strip, Cylinder };

Domain domain_of(SurfaceKind kind);
std::string_view to_string(SurfaceKind kind);
SurfaceKind parse_kind(std::string_view name);

// Truncated strip [-t_cut, t_cut] x [0, pi] (or cylinder [0, 2 pi]) cut into nx x ny cells.
struct GridSpec {
    double t_cut = 0.0;
    int nx = 0;
    int ny = 0;

    double dt() const { return 2.0 * t_cut / nx; }
    double height(Domain d) const;
    double dy(Domain d) const { return height(d) / ny; }
    double node(int k) const { return -t_cut + k * dt(); }
    double cell_center(int i) const { return -t_cut + (i + 0.5) * dt(); }
    int center_node() const { return nx / 2; }
    void validate() const;
};

// t_cut at which the mean boundary (strip) or area (cylinder) mass beyond the cut falls below `tail`,
// from the large-t asymptotics of the conditioned horizontal process.
double calibrated_t_cut(const LqgParams& p, SurfaceKind kind, double tail = 1e-3);

// Vertical-average process sampled on the grid nodes.
struct HorizontalProcess {
    std::vector<double> times;
    std::vector<double> values;

    double cell_average(int i) const { return 0.5 * (values[i] + values[i + 1]); }
};

struct FieldSample {
    GridSpec grid;
    HorizontalProcess horizontal;
    Eigen::MatrixXd lateral;  // nx x ny cell averages, zero-mean columns
    double c_const = 0.0;
    SurfaceKind kind = SurfaceKind::ThickDisk;
    LqgParams params;
    double importance_weight = 1.0;

    Domain domain() const { return domain_of(kind); }
    double value(int i, int j) const { return horizontal.cell_average(i) + lateral(i, j) + c_const; }
};

// (B_{variance t} - drift t) conditioned to stay negative, on the grid k*dt, k = 0..ceil(horizon/dt).
HorizontalProcess sample_conditioned_negative_bm(double drift, double gamma, double dt, double horizon, Rng& rng,
                                                 double variance = 2.0);
HorizontalProcess sample_conditioned_negative_bm(double drift, double gamma, double dt, double horizon,
                                                 std::uint64_t seed, double variance = 2.0);

HorizontalProcess sample_horizontal(SurfaceKind kind, const LqgParams& p, const GridSpec& grid, Rng& rng);

// Truncated orthonormal expansion of the zero-mean (lateral) part of a Neumann GFF.
class LateralSampler {
public:
    LateralSampler(const GridSpec& grid, Domain domain);

    Eigen::MatrixXd sample(Rng& rng) const;
    // Field from explicit standard-normal coefficients (modes_x x modes_y).
    Eigen::MatrixXd synthesize(const Eigen::MatrixXd& coefficients) const;

    double cell_variance(int i, int j) const;
    double cell_covariance(int i1, int j1, int i2, int j2) const;

    int modes_x() const { return static_cast<int>(sd_.rows()); }
    int modes_y() const { return static_cast<int>(sd_.cols()); }

private:
    GridSpec grid_;
    Domain domain_;
    Eigen::MatrixXd cx_;  // nx x Kx
    Eigen::MatrixXd cy_;  // ny x Ky
    Eigen::MatrixXd sd_;  // Kx x Ky
};

Eigen::MatrixXd sample_lateral(const GridSpec& grid, Domain domain, Rng& rng);

// Window (lo, hi] for the additive constant of the infinite-measure surfaces.
struct CWindow {
    double lo = 0.0;
    double hi = std::numeric_limits<double>::infinity();
};

// Mass of the constant's law restricted to the window.
double c_window_mass(SurfaceKind kind, const LqgParams& p, const CWindow& window);

class SurfaceSampler {
public:
    SurfaceSampler(SurfaceKind kind, const LqgParams& params, const GridSpec& grid);

    FieldSample sample(const std::optional<CWindow>& window, Rng& rng) const;

    SurfaceKind kind() const { return kind_; }
    const LqgParams& params() const { return params_; }
    const GridSpec& grid() const { return grid_; }
    const LateralSampler& lateral() const { return lateral_; }

private:
    SurfaceKind kind_;
    LqgParams params_;
    GridSpec grid_;
    LateralSampler lateral_;
};

FieldSample sample_surface(SurfaceKind kind, double gamma, double W, const GridSpec& grid,
                           const std::optional<CWindow>& window, std::uint64_t seed);

// Fixed bumps on [0,1] x [0, pi/2] (lower) and its reflection (upper); unit Dirichlet energy, zero column means.
struct Bump {
    static double amplitude();
    static double value(double x, double y, bool upper);
    static double laplacian(double x, double y, bool upper);
    // Cell averages on the grid (nx x ny).
    static Eigen::MatrixXd cell_averages(const GridSpec& grid, bool upper);
    static Eigen::MatrixXd laplacian_cell_averages(const GridSpec& grid, bool upper);
};

struct DiskTwoLengthsOptions {
    int max_attempts = 100000;
    double root_tolerance = 1e-12;
};

struct WeightedDisk {
    FieldSample sample;
    double alpha_lower = 0.0;  // solved coefficient of the lower bump
    double alpha_upper = 0.0;
    int attempts = 0;
    double acceptance_rate = 0.0;
};

// Disintegration sampler: field with prescribed lower/upper boundary lengths, importance weighted.
WeightedDisk sample_disk_two_lengths(double gamma, double W, double ell_lower, double ell_upper, double zeta,
                                     const GridSpec& grid, std::uint64_t seed,
                                     const DiskTwoLengthsOptions& options = {});

}  // namespace lqg::field
