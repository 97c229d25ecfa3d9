#include "lqglab/field.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/tools/roots.hpp>

#include "lqglab/bessel.hpp"
#include "lqglab/errors.hpp"

namespace lqg::field {

namespace {

constexpr double kPi = std::numbers::pi;

void require(bool ok, const char* message) {
    if (!ok) throw ParameterError(message);
}

}  // namespace

LqgParams derive_params(double gamma, double W) {
    require(gamma > 0.0 && gamma < 2.0, "gamma must lie in (0,2)");
    require(W > 0.0, "weight W must be positive");
    LqgParams p;
    p.gamma = gamma;
    p.W = W;
    p.Q = gamma / 2.0 + 2.0 / gamma;
    p.beta = gamma / 2.0 + p.Q - W / gamma;
    p.alpha = p.Q - W / (2.0 * gamma);
    p.thick = W >= gamma * gamma / 2.0 * (1.0 - 1e-12);
    return p;
}

Domain domain_of(SurfaceKind kind) {
    switch (kind) {
        case SurfaceKind::ThickDisk:
        case SurfaceKind::Wedge:
            return Domain::Strip;
        case SurfaceKind::Sphere:
        case SurfaceKind::Cone:
            return Domain::Cylinder;
    }
    return Domain::Strip;
}

std::string_view to_string(SurfaceKind kind) {
    switch (kind) {
        case SurfaceKind::ThickDisk: return "disk";
        case SurfaceKind::Wedge: return "wedge";
        case SurfaceKind::Sphere: return "sphere";
        case SurfaceKind::Cone: return "cone";
    }
    return "disk";
}

SurfaceKind parse_kind(std::string_view name) {
    if (name == "disk" || name == "thick-disk") return SurfaceKind::ThickDisk;
    if (name == "wedge") return SurfaceKind::Wedge;
    if (name == "sphere") return SurfaceKind::Sphere;
    if (name == "cone") return SurfaceKind::Cone;
    throw ParameterError("unknown surface kind: " + std::string(name));
}

double GridSpec::height(Domain d) const { return d == Domain::Strip ? kPi : 2.0 * kPi; }

void GridSpec::validate() const {
    require(t_cut > 0.0, "grid t_cut must be positive");
    require(nx >= 8, "grid nx must be at least 8");
    require(nx % 2 == 0, "grid nx must be even (t = 0 is a node)");
    require(ny >= 4, "grid ny must be at least 4");
}

double calibrated_t_cut(const LqgParams& p, SurfaceKind kind, double tail) {
    require(tail > 0.0 && tail < 1.0, "tail fraction must lie in (0,1)");
    const bool strip = domain_of(kind) == Domain::Strip;
    const double drift = strip ? p.Q - p.beta : p.Q - p.alpha;
    require(drift > 0.0, "calibration needs a strictly negative drift");
    // mean of exp(lambda psi_t): boundary lambda = gamma/2 on the strip, area lambda = gamma on the cylinder
    const double v = strip ? 2.0 : 1.0;
    const double lambda = strip ? p.gamma / 2.0 : p.gamma;
    // the asymptotics fix rates, not prefactors; aim a decade lower
    tail /= 10.0;
    if (lambda * v < drift) {
        // the tilted path still drifts down: plain exponential decay
        const double rate = lambda * drift - 0.5 * lambda * lambda * v;
        return std::max(1.0, std::log(1.0 / (tail * rate)) / rate);
    }
    // otherwise the cost of staying negative dominates: t^{-3/2} exp(-drift^2 t / (2v))
    const double rate = drift * drift / (2.0 * v);
    auto excess = [&](double t) { return -1.5 * std::log(t) - rate * t - std::log(rate) - std::log(tail); };
    if (excess(1.0) <= 0.0) return 1.0;
    double hi = 2.0;
    while (excess(hi) > 0.0) hi *= 2.0;
    std::uintmax_t iters = 100;
    const auto r = boost::math::tools::toms748_solve(excess, 1.0, hi, boost::math::tools::eps_tolerance<double>(40),
                                                     iters);
    return 0.5 * (r.first + r.second);
}

// --- conditioned Brownian motion ---------------------------------------------

namespace {

// First time a Brownian bridge (variance per unit time `variance`) from y0 < 0 to y1 over [0, span]
// touches 0, given that it does. Inverse CDF on the density
// s^{-3/2} e^{-y0^2/(2 v s)} (span - s)^{-1/2} e^{-y1^2/(2 v (span - s))}.
double bridge_hit_time(double y0, double y1, double span, double variance, Rng& rng) {
    constexpr int kCells = 512;
    const double a = y0 * y0 / (2.0 * variance), b = y1 * y1 / (2.0 * variance);
    std::array<double, kCells + 1> cdf{};
    std::array<double, kCells> logd{};
    double peak = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < kCells; ++i) {
        const double w = (i + 0.5) / kCells;
        const double s = span * w, rest = span - s;
        logd[i] = -1.5 * std::log(s) - a / s - 0.5 * std::log(rest) - b / rest;
        peak = std::max(peak, logd[i]);
    }
    for (int i = 0; i < kCells; ++i) cdf[i + 1] = cdf[i] + std::exp(logd[i] - peak);
    if (!(cdf[kCells] > 0.0)) return 0.5 * span;
    const double u = rng.uniform() * cdf[kCells];
    const int i = static_cast<int>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin()) - 1;
    const int j = std::clamp(i, 0, kCells - 1);
    const double frac = (u - cdf[j]) / std::max(cdf[j + 1] - cdf[j], 1e-300);
    return span * (j + std::clamp(frac, 0.0, 1.0)) / kCells;
}

}  // namespace

HorizontalProcess sample_conditioned_negative_bm(double a, double gamma, double dt, double horizon, Rng& rng,
                                                 double variance) {
    require(a >= 0.0, "drift must be nonnegative");
    require(gamma > 0.0 && gamma < 2.0, "gamma must lie in (0,2)");
    require(dt > 0.0 && horizon >= dt, "need dt > 0 and horizon >= dt");
    require(variance > 0.0, "variance must be positive");

    const int n = static_cast<int>(std::ceil(horizon / dt - 1e-9));
    HorizontalProcess out;
    out.times.resize(n + 1);
    out.values.assign(n + 1, 0.0);
    for (int k = 0; k <= n; ++k) out.times[k] = k * dt;

    if (a == 0.0) {
        // driftless case: minus a three-dimensional Bessel process
        double x = 0.0;
        for (int k = 1; k <= n; ++k) {
            x = squared_bessel_step(x, 3.0, variance * dt, rng);
            out.values[k] = -std::sqrt(x);
        }
        return out;
    }

    // Only the last excursion of the (4 - delta)-dimensional Bessel path from 0 to 1 survives the reversal;
    // conditioned to reach 1 it is a delta-dimensional Bessel process, delta = 2 + 2 a scale / variance.
    const double scale = 2.0 / gamma;
    const double dim = 2.0 + 2.0 * a * scale / variance;

    constexpr int kSubsteps = 4;
    const double dr = dt / kSubsteps;
    const double ds = dr * variance / (scale * scale);
    const double sigma = std::sqrt(variance);
    const double depth = a * horizon + 2.0 * sigma * std::sqrt(horizon) + 2.0;

    // Bessel time -> log scale: Y = (scale/2) log X; r-time increments (scale^2/variance) dt / X
    std::vector<double> r{0.0};
    std::vector<double> y;
    const double t0 = std::exp(-2.0 * depth / scale);
    double x = std::max(squared_bessel_step(0.0, dim, t0, rng), 1e-300);
    y.push_back(0.5 * scale * std::log(x));
    const std::size_t max_iter = 200'000'000;
    for (std::size_t it = 0;; ++it) {
        if (it > max_iter) throw NumericalError("Bessel path failed to reach level 1");
        const double h = ds * x;
        const double xn = std::max(squared_bessel_step(x, dim, h, rng), 1e-300);
        const double step_r = dr * std::sqrt(x / xn);
        const double yn = 0.5 * scale * std::log(xn);
        // level 0 may also be crossed between two sub-zero samples
        const bool crossed =
            xn >= 1.0 || rng.uniform() < std::exp(-2.0 * y.back() * yn / (variance * step_r));
        if (crossed) {
            r.push_back(r.back() + bridge_hit_time(y.back(), yn, step_r, variance, rng));
            y.push_back(0.0);
            break;
        }
        r.push_back(r.back() + step_r);
        y.push_back(yn);
        x = xn;
    }

    // time reversal
    const double r_end = r.back();
    const std::size_t m = r.size();
    std::vector<double> tau(m), val(m);
    for (std::size_t j = 0; j < m; ++j) {
        tau[j] = r_end - r[m - 1 - j];
        val[j] = y[m - 1 - j];
    }

    // Brownian-bridge fill onto the output grid, conditioned to stay nonpositive
    std::size_t i = 0;
    double left_t = tau[0], left_v = val[0];
    for (int k = 1; k <= n; ++k) {
        const double t = k * dt;
        while (i + 1 < m && tau[i + 1] < t) {
            ++i;
            left_t = tau[i];
            left_v = val[i];
        }
        double v;
        if (i + 1 < m) {
            const double right_t = tau[i + 1], right_v = val[i + 1];
            const double span = right_t - left_t;
            const double w = span > 0.0 ? (t - left_t) / span : 1.0;
            const double mean = left_v + w * (right_v - left_v);
            const double sd = span > 0.0 ? sigma * std::sqrt((t - left_t) * (right_t - t) / span) : 0.0;
            do {
                v = mean + sd * rng.normal();
            } while (v > 0.0);
        } else {
            // beyond the generated excursion: continue with the drifted walk
            const double h = t - left_t;
            do {
                v = left_v - a * h + sigma * std::sqrt(h) * rng.normal();
            } while (v > 0.0);
        }
        out.values[k] = v;
        left_t = t;
        left_v = v;
    }
    return out;
}

HorizontalProcess sample_conditioned_negative_bm(double drift, double gamma, double dt, double horizon,
                                                 std::uint64_t seed, double variance) {
    Rng rng(seed);
    return sample_conditioned_negative_bm(drift, gamma, dt, horizon, rng, variance);
}

HorizontalProcess sample_horizontal(SurfaceKind kind, const LqgParams& p, const GridSpec& grid, Rng& rng) {
    grid.validate();
    const bool strip = domain_of(kind) == Domain::Strip;
    const double variance = strip ? 2.0 : 1.0;
    const double a = strip ? p.Q - p.beta : p.Q - p.alpha;
    if (strip) {
        require(p.thick, "strip surfaces need W >= gamma^2/2");
    }
    require(a >= 0.0, "surface drift must be nonnegative");
    if (kind == SurfaceKind::Wedge || kind == SurfaceKind::Cone) {
        require(a > 0.0, "wedge and cone need W > gamma^2/2 (strictly positive drift)");
    }

    const int half = grid.nx / 2;
    const double dt = grid.dt();
    const double horizon = half * dt;
    HorizontalProcess out;
    out.times.resize(grid.nx + 1);
    out.values.assign(grid.nx + 1, 0.0);
    for (int k = 0; k <= grid.nx; ++k) out.times[k] = grid.node(k);
    const int c = grid.center_node();

    const bool free_right = kind == SurfaceKind::Wedge || kind == SurfaceKind::Cone;
    if (free_right) {
        const double sd = std::sqrt(variance * dt);
        for (int k = 1; k <= half; ++k) out.values[c + k] = out.values[c + k - 1] - a * dt + sd * rng.normal();
        const auto left = sample_conditioned_negative_bm(a, p.gamma, dt, horizon, rng, variance);
        for (int k = 1; k <= half; ++k) out.values[c - k] = -left.values[k];
    } else {
        const auto right = sample_conditioned_negative_bm(a, p.gamma, dt, horizon, rng, variance);
        const auto left = sample_conditioned_negative_bm(a, p.gamma, dt, horizon, rng, variance);
        for (int k = 1; k <= half; ++k) {
            out.values[c + k] = right.values[k];
            out.values[c - k] = left.values[k];
        }
    }
    return out;
}

// --- lateral field -----------------------------------------------------------

LateralSampler::LateralSampler(const GridSpec& grid, Domain domain) : grid_(grid), domain_(domain) {
    grid_.validate();
    const int kx = std::max(grid_.nx, 32);
    const int ky = std::max(grid_.ny, 32);
    const double len = 2.0 * grid_.t_cut;
    const double dx = grid_.dt();
    const double dy = grid_.dy(domain_);

    cx_.resize(grid_.nx, kx);
    for (int j = 0; j < kx; ++j) {
        const double w = j * kPi / len;
        for (int i = 0; i < grid_.nx; ++i) {
            if (j == 0) {
                cx_(i, j) = 1.0;
            } else {
                const double u0 = i * dx, u1 = (i + 1) * dx;
                cx_(i, j) = (std::sin(w * u1) - std::sin(w * u0)) / (w * dx);
            }
        }
    }

    cy_.resize(grid_.ny, ky);
    std::vector<double> freq(ky);
    for (int m = 0; m < ky; ++m) {
        const bool cylinder = domain_ == Domain::Cylinder;
        const int k = cylinder ? m / 2 + 1 : m + 1;
        const bool is_sin = cylinder && (m % 2 == 1);
        freq[m] = k;
        for (int j = 0; j < grid_.ny; ++j) {
            const double y0 = j * dy, y1 = (j + 1) * dy;
            cy_(j, m) = is_sin ? (std::cos(k * y0) - std::cos(k * y1)) / (k * dy)
                               : (std::sin(k * y1) - std::sin(k * y0)) / (k * dy);
        }
        // exact column mean is zero; remove rounding residue
        cy_.col(m).array() -= cy_.col(m).mean();
    }

    // orthonormal in (1/2pi) int grad f . grad g
    const double vnorm = domain_ == Domain::Strip ? kPi / 2.0 : kPi;
    sd_.resize(kx, ky);
    for (int j = 0; j < kx; ++j) {
        const double w = j * kPi / len;
        const double hnorm = j == 0 ? len : len / 2.0;
        for (int m = 0; m < ky; ++m) {
            const double energy = (w * w + freq[m] * freq[m]) * hnorm * vnorm / (2.0 * kPi);
            sd_(j, m) = 1.0 / std::sqrt(energy);
        }
    }
}

Eigen::MatrixXd LateralSampler::synthesize(const Eigen::MatrixXd& coefficients) const {
    const Eigen::MatrixXd scaled = coefficients.cwiseProduct(sd_);
    const Eigen::MatrixXd tmp = scaled * cy_.transpose();  // Kx x ny
    return cx_ * tmp;                                       // nx x ny
}

Eigen::MatrixXd LateralSampler::sample(Rng& rng) const {
    Eigen::MatrixXd xi(sd_.rows(), sd_.cols());
    for (Eigen::Index m = 0; m < xi.cols(); ++m)
        for (Eigen::Index j = 0; j < xi.rows(); ++j) xi(j, m) = rng.normal();
    return synthesize(xi);
}

double LateralSampler::cell_variance(int i, int j) const { return cell_covariance(i, j, i, j); }

double LateralSampler::cell_covariance(int i1, int j1, int i2, int j2) const {
    double s = 0.0;
    for (Eigen::Index a = 0; a < sd_.rows(); ++a) {
        const double hx = cx_(i1, a) * cx_(i2, a);
        for (Eigen::Index m = 0; m < sd_.cols(); ++m) s += sd_(a, m) * sd_(a, m) * hx * cy_(j1, m) * cy_(j2, m);
    }
    return s;
}

Eigen::MatrixXd sample_lateral(const GridSpec& grid, Domain domain, Rng& rng) {
    return LateralSampler(grid, domain).sample(rng);
}

// --- surfaces ----------------------------------------------------------------

namespace {

// Decay rate of the constant's density (gamma/2) exp(-rate c).
double c_rate(SurfaceKind kind, const LqgParams& p) {
    if (kind == SurfaceKind::ThickDisk) return p.Q - p.beta;
    if (kind == SurfaceKind::Sphere) return 2.0 * (p.Q - p.alpha);
    throw ParameterError("wedge and cone laws are probability measures without a constant");
}

}  // namespace

double c_window_mass(SurfaceKind kind, const LqgParams& p, const CWindow& window) {
    require(std::isfinite(window.lo), "c window lower end must be finite");
    require(window.lo < window.hi, "c window needs lo < hi");
    const double rate = c_rate(kind, p);
    const double g2 = p.gamma / 2.0;
    if (rate == 0.0) {
        require(std::isfinite(window.hi), "flat constant law needs a bounded window");
        return g2 * (window.hi - window.lo);
    }
    require(rate > 0.0, "constant law needs a positive decay rate");
    const double head = g2 / rate * std::exp(-rate * window.lo);
    if (!std::isfinite(window.hi)) return head;
    return head * -std::expm1(-rate * (window.hi - window.lo));
}

SurfaceSampler::SurfaceSampler(SurfaceKind kind, const LqgParams& params, const GridSpec& grid)
    : kind_(kind), params_(params), grid_(grid), lateral_(grid, domain_of(kind)) {}

FieldSample SurfaceSampler::sample(const std::optional<CWindow>& window, Rng& rng) const {
    const bool has_constant = kind_ == SurfaceKind::ThickDisk || kind_ == SurfaceKind::Sphere;
    if (has_constant) {
        require(window.has_value(), "disk and sphere laws are infinite; a c window is required");
        require(window->lo < window->hi, "c window needs c_min < c_max");
    } else {
        require(!window.has_value(), "wedge and cone laws take no c window");
    }

    FieldSample s;
    s.grid = grid_;
    s.kind = kind_;
    s.params = params_;
    s.horizontal = sample_horizontal(kind_, params_, grid_, rng);
    s.lateral = lateral_.sample(rng);
    if (has_constant) {
        const double rate = c_rate(kind_, params_);
        const double lo = window->lo, hi = window->hi;
        const double u = rng.uniform();
        if (rate == 0.0) {
            s.c_const = lo + u * (hi - lo);
        } else if (std::isfinite(hi)) {
            s.c_const = lo - std::log1p(u * std::expm1(-rate * (hi - lo))) / rate;
        } else {
            s.c_const = lo - std::log(u) / rate;
        }
        s.importance_weight = c_window_mass(kind_, params_, *window);
    }
    return s;
}

FieldSample sample_surface(SurfaceKind kind, double gamma, double W, const GridSpec& grid,
                           const std::optional<CWindow>& window, std::uint64_t seed) {
    Rng rng(seed);
    return SurfaceSampler(kind, derive_params(gamma, W), grid).sample(window, rng);
}

// --- bumps -------------------------------------------------------------------

double Bump::amplitude() { return 1.0 / std::sqrt(kPi * kPi / 8.0 + 15.0 / 16.0); }

namespace {

bool in_support(double x, double y) { return x >= 0.0 && x <= 1.0 && y >= 0.0 && y <= kPi / 2.0; }

// antiderivatives on the support
double s_int(double x) { return x / 2.0 - std::sin(2.0 * kPi * x) / (4.0 * kPi); }
double s2_int(double x) { return kPi * std::sin(2.0 * kPi * x); }
double g_int(double y) { return std::sin(2.0 * y) / 2.0 + std::sin(4.0 * y) / 4.0; }
double g2_int(double y) { return -2.0 * std::sin(2.0 * y) - 4.0 * std::sin(4.0 * y); }

Eigen::MatrixXd bump_cells(const GridSpec& grid, bool upper, bool laplacian) {
    grid.validate();
    const double dx = grid.dt();
    const double dy = grid.dy(Domain::Strip);
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(grid.nx, grid.ny);
    const double A = Bump::amplitude();
    for (int i = 0; i < grid.nx; ++i) {
        const double x0 = std::max(grid.node(i), 0.0), x1 = std::min(grid.node(i + 1), 1.0);
        if (x1 <= x0) continue;
        const double sx = s_int(x1) - s_int(x0);
        const double sxx = s2_int(x1) - s2_int(x0);
        for (int j = 0; j < grid.ny; ++j) {
            // reflect the upper bump onto the lower support
            double y0 = j * dy, y1 = (j + 1) * dy;
            if (upper) {
                const double r0 = kPi - y1, r1 = kPi - y0;
                y0 = r0;
                y1 = r1;
            }
            y0 = std::max(y0, 0.0);
            y1 = std::min(y1, kPi / 2.0);
            if (y1 <= y0) continue;
            const double gy = g_int(y1) - g_int(y0);
            double v;
            if (laplacian) {
                const double gyy = g2_int(y1) - g2_int(y0);
                v = sxx * gy + sx * gyy;
            } else {
                v = sx * gy;
            }
            out(i, j) = A * v / (dx * dy);
        }
    }
    return out;
}

}  // namespace

double Bump::value(double x, double y, bool upper) {
    if (upper) y = kPi - y;
    if (!in_support(x, y)) return 0.0;
    const double s = std::sin(kPi * x);
    return amplitude() * s * s * (std::cos(2.0 * y) + std::cos(4.0 * y));
}

double Bump::laplacian(double x, double y, bool upper) {
    if (upper) y = kPi - y;
    if (!in_support(x, y)) return 0.0;
    const double s = std::sin(kPi * x);
    const double g = std::cos(2.0 * y) + std::cos(4.0 * y);
    const double sxx = 2.0 * kPi * kPi * std::cos(2.0 * kPi * x);
    const double gyy = -4.0 * std::cos(2.0 * y) - 16.0 * std::cos(4.0 * y);
    return amplitude() * (sxx * g + s * s * gyy);
}

Eigen::MatrixXd Bump::cell_averages(const GridSpec& grid, bool upper) { return bump_cells(grid, upper, false); }

Eigen::MatrixXd Bump::laplacian_cell_averages(const GridSpec& grid, bool upper) {
    return bump_cells(grid, upper, true);
}

}  // namespace lqg::field
