#include <cmath>
#include <numbers>
#include <vector>

#include <boost/math/tools/roots.hpp>

#include "lqglab/errors.hpp"
#include "lqglab/field.hpp"
#include "lqglab/gmc.hpp"

namespace lqg::field {

namespace {

constexpr double kPi = std::numbers::pi;

double inner_product(const Eigen::MatrixXd& h, const Eigen::MatrixXd& lap, double cell_area) {
    // (1/2pi) int grad h . grad f = -(1/2pi) int h lap f  (Neumann terms vanish for the bumps)
    return -(h.cwiseProduct(lap)).sum() * cell_area / (2.0 * kPi);
}

struct ArcSolve {
    double alpha = 0.0;
    double jacobian = 0.0;
};

// Solve sum_i m_i exp(g2 alpha f_i) = target over the bump support.
ArcSolve solve_arc(const std::vector<double>& m, const std::vector<double>& f, double g2, double target,
                   double tol) {
    auto mass = [&](double a) {
        double s = 0.0;
        for (std::size_t i = 0; i < m.size(); ++i) s += m[i] * std::exp(g2 * a * f[i]);
        return s;
    };
    auto objective = [&](double a) { return std::log(mass(a)) - std::log(target); };
    double lo = 0.0, hi = 0.0;
    if (objective(0.0) < 0.0) {
        hi = 1.0;
        while (objective(hi) < 0.0) {
            lo = hi;
            hi *= 2.0;
            if (hi > 1e8) throw NumericalError("bump coefficient root not bracketed above");
        }
    } else {
        lo = -1.0;
        while (objective(lo) > 0.0) {
            hi = lo;
            lo *= 2.0;
            if (lo < -1e8) throw NumericalError("bump coefficient root not bracketed below");
        }
    }
    std::uintmax_t iters = 200;
    auto stop = [tol](double a, double b) { return std::abs(b - a) <= tol * std::max(1.0, std::abs(a)); };
    const auto bracket = boost::math::tools::toms748_solve(objective, lo, hi, stop, iters);
    ArcSolve out;
    out.alpha = 0.5 * (bracket.first + bracket.second);
    double jac = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) jac += f[i] * m[i] * std::exp(g2 * out.alpha * f[i]);
    out.jacobian = g2 * jac;
    return out;
}

double std_normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * kPi); }

}  // namespace

WeightedDisk sample_disk_two_lengths(double gamma, double W, double ell_lower, double ell_upper, double zeta,
                                     const GridSpec& grid, std::uint64_t seed,
                                     const DiskTwoLengthsOptions& options) {
    const LqgParams p = derive_params(gamma, W);
    if (!(W > gamma * gamma / 2.0)) throw ParameterError("two-length disintegration needs W > gamma^2/2");
    if (!(ell_lower > 0.0 && ell_upper > 0.0)) throw ParameterError("boundary lengths must be positive");
    if (!(zeta > 0.0)) throw ParameterError("zeta must be positive");
    grid.validate();
    if (grid.ny % 2 != 0) throw ParameterError("two-length disintegration needs an even ny");
    if (grid.t_cut <= 1.0) throw ParameterError("truncated strip must contain [0,1]");

    const Eigen::MatrixXd f_low = Bump::cell_averages(grid, false);
    const Eigen::MatrixXd f_up = Bump::cell_averages(grid, true);
    const Eigen::MatrixXd lap_low = Bump::laplacian_cell_averages(grid, false);
    const Eigen::MatrixXd lap_up = Bump::laplacian_cell_averages(grid, true);
    const double cell_area = grid.dt() * grid.dy(Domain::Strip);
    const double g2 = gamma / 2.0;
    const double scale = std::pow(grid.dt(), 1.0 + gamma * gamma / 4.0);
    const int top = grid.ny - 1;

    const SurfaceSampler sampler(SurfaceKind::ThickDisk, p, grid);
    const CWindow window{-zeta, std::numeric_limits<double>::infinity()};
    Rng rng(seed);

    for (int attempt = 1; attempt <= options.max_attempts; ++attempt) {
        FieldSample s = sampler.sample(window, rng);
        const double a1 = inner_product(s.lateral, lap_low, cell_area);
        const double a2 = inner_product(s.lateral, lap_up, cell_area);
        s.lateral -= a1 * f_low + a2 * f_up;

        auto split = [&](int row, const Eigen::MatrixXd& bump, double ell, std::vector<double>& m,
                         std::vector<double>& f) {
            double outside = 0.0;
            for (int i = 0; i < grid.nx; ++i) {
                const double mass = std::exp(g2 * s.value(i, row)) * scale;
                if (bump(i, row) > 0.0) {
                    m.push_back(mass);
                    f.push_back(bump(i, row));
                } else {
                    outside += mass;
                }
            }
            return ell - outside;
        };
        std::vector<double> m1, f1, m2, f2;
        const double d1 = split(0, f_low, ell_lower, m1, f1);
        const double d2 = split(top, f_up, ell_upper, m2, f2);
        if (d1 <= 0.0 || d2 <= 0.0) continue;

        const ArcSolve r1 = solve_arc(m1, f1, g2, d1, options.root_tolerance);
        const ArcSolve r2 = solve_arc(m2, f2, g2, d2, options.root_tolerance);
        s.lateral += r1.alpha * f_low + r2.alpha * f_up;
        s.importance_weight *= std_normal_pdf(r1.alpha) * std_normal_pdf(r2.alpha) / (r1.jacobian * r2.jacobian);

        WeightedDisk out;
        out.sample = std::move(s);
        out.alpha_lower = r1.alpha;
        out.alpha_upper = r2.alpha;
        out.attempts = attempt;
        out.acceptance_rate = 1.0 / attempt;
        return out;
    }
    throw NumericalError("two-length disintegration: no accepted sample within max_attempts");
}

}  // namespace lqg::field
