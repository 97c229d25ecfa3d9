#include "lqglab/cone.hpp"

#include <chrono>
#include <cmath>
#include <numbers>

#include "lqglab/errors.hpp"
#include "lqglab/parallel.hpp"
#include "lqglab/stats.hpp"

namespace lqg::cone {

namespace {

constexpr double kPi = std::numbers::pi;

double elapsed_ms(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

CovSpec CovSpec::from_gamma(double gamma, std::optional<double> a2) {
    CovSpec c;
    c.gamma = gamma;
    c.a2 = a2 ? *a2 : 2.0 / std::sin(kPi * gamma * gamma / 4.0);
    c.validate();
    return c;
}

double CovSpec::theta() const { return kPi * gamma * gamma / 4.0; }

double CovSpec::correlation() const { return -std::cos(theta()); }

void CovSpec::validate() const {
    if (!(gamma > 0.0 && gamma < 2.0)) throw ParameterError("gamma must lie in (0, 2)");
    if (!(a2 > 0.0) || !std::isfinite(a2)) throw ParameterError("a2 must be positive");
}

std::complex<double> shear(Point p, const CovSpec& cov) {
    const double a = std::sqrt(cov.a2), th = cov.theta();
    return {(p.L / std::sin(th) + p.R / std::tan(th)) / a, p.R / a};
}

std::complex<double> shear_and_power(Point p, const CovSpec& cov) {
    if (p.L < 0.0 || p.R < 0.0) throw ParameterError("point must lie in the closed quadrant");
    const std::complex<double> w = shear(p, cov);
    if (std::abs(w) == 0.0) return {0.0, 0.0};
    return std::polar(std::pow(std::abs(w), 4.0 / (cov.gamma * cov.gamma)),
                      std::arg(w) * 4.0 / (cov.gamma * cov.gamma));
}

Point sample_increment(const CovSpec& cov, double dt, Rng& rng) {
    const double s = std::sqrt(cov.a2 * dt), rho = cov.correlation();
    const double n1 = rng.normal(), n2 = rng.normal();
    return {s * n1, s * (rho * n1 + std::sqrt(1.0 - rho * rho) * n2)};
}

ConePath sample_cone_path(Point start, const CovSpec& cov, double dt, Rng& rng, std::size_t max_steps,
                          bool record) {
    cov.validate();
    if (!(start.L > 0.0 && start.R > 0.0)) throw ParameterError("start must lie in the open quadrant");
    if (!(dt > 0.0)) throw ParameterError("dt must be positive");
    ConePath path;
    path.start = start;
    path.dt = dt;
    if (record) path.points.push_back(start);
    const double var = cov.a2 * dt;
    Point x = start;
    for (std::size_t k = 0; k < max_steps; ++k) {
        const Point d = sample_increment(cov, dt, rng);
        const Point y{x.L + d.L, x.R + d.R};
        // Crossing if the endpoint left the quadrant or a bridge between interior endpoints touched an axis.
        const double u = rng.uniform();
        const bool cross_L = y.L <= 0.0 || u < std::exp(-2.0 * x.L * y.L / var);
        const double v = rng.uniform();
        const bool cross_R = y.R <= 0.0 || v < std::exp(-2.0 * x.R * y.R / var);
        if (cross_L || cross_R) {
            // Fraction of the step at which the first coordinate reaches its axis (linear interpolation).
            auto frac = [](double a, double b) { return b <= 0.0 ? a / (a - b) : 0.5; };
            const double fL = cross_L ? frac(x.L, y.L) : 2.0;
            const double fR = cross_R ? frac(x.R, y.R) : 2.0;
            const double f = std::min(fL, fR);
            Point e{x.L + f * d.L, x.R + f * d.R};
            if (fL <= fR)
                e.L = 0.0;
            else
                e.R = 0.0;
            e.L = std::max(e.L, 0.0);
            e.R = std::max(e.R, 0.0);
            path.exited = true;
            path.exit_point = e;
            path.exit_time = (static_cast<double>(k) + f) * dt;
            if (record) path.points.push_back(e);
            return path;
        }
        x = y;
        if (record) path.points.push_back(x);
    }
    path.exit_time = static_cast<double>(max_steps) * dt;
    path.exit_point = x;
    return path;
}

ConePath sample_cone_path(Point start, const CovSpec& cov, double dt, std::uint64_t seed, std::size_t max_steps) {
    Rng rng(seed);
    return sample_cone_path(start, cov, dt, rng, max_steps);
}

double shell_for_dt(double dt) {
    if (!(dt > 0.0)) throw ParameterError("dt must be positive");
    return std::sqrt(dt);
}

ExitPoint sample_exit_point(Point start, const CovSpec& cov, double shell, Rng& rng) {
    if (!(start.L > 0.0 && start.R > 0.0)) throw ParameterError("start must lie in the open quadrant");
    if (!(shell > 0.0)) throw ParameterError("shell must be positive");
    const double th = cov.theta();
    const double ex = std::cos(th), ey = std::sin(th);
    const double back = std::sqrt(cov.a2) * std::sin(th);
    const std::complex<double> w = shear(start, cov);
    double x = w.real(), y = w.imag();
    for (int steps = 1; steps <= 1000000; ++steps) {
        const double t0 = std::max(0.0, x);
        const double d0 = std::hypot(x - t0, y);
        const double t1 = std::max(0.0, x * ex + y * ey);
        const double d1 = std::hypot(x - t1 * ex, y - t1 * ey);
        const double d = std::min(d0, d1);
        if (d < shell) {
            if (d0 <= d1) return {Axis::Horizontal, t0 * back, steps};
            return {Axis::Vertical, t1 * back, steps};
        }
        const double phi = 2.0 * kPi * rng.uniform();
        x += d * std::cos(phi);
        y += d * std::sin(phi);
    }
    throw NumericalError("walk-on-spheres did not reach the boundary");
}

namespace {

// Counts of vertical-axis exits inside each [lo_k, hi_k).
std::vector<std::uint64_t> count_windows(Point start, const std::vector<std::pair<double, double>>& windows,
                                         const CovSpec& cov, double dt, std::uint64_t n, std::uint64_t seed,
                                         const ExitOptions& options) {
    cov.validate();
    if (n == 0) throw ParameterError("need at least one path");
    const double shell = shell_for_dt(dt);
    const auto chunks = make_chunks(n, std::max<std::size_t>(options.per_task, 1));
    auto task = [&](std::size_t k) {
        Rng rng = Rng::stream(seed, k);
        std::vector<std::uint64_t> hits(windows.size(), 0);
        for (std::size_t i = chunks[k].begin; i < chunks[k].end; ++i) {
            const ExitPoint e = sample_exit_point(start, cov, shell, rng);
            if (e.axis != Axis::Vertical) continue;
            for (std::size_t j = 0; j < windows.size(); ++j)
                if (e.position >= windows[j].first && e.position < windows[j].second) ++hits[j];
        }
        return hits;
    };
    const auto parts = parallel_map(chunks.size(), static_cast<unsigned>(std::max(options.workers, 0)), task);
    std::vector<std::uint64_t> total(windows.size(), 0);
    for (const auto& part : parts)
        for (std::size_t j = 0; j < windows.size(); ++j) total[j] += part[j];
    return total;
}

KernelEstimate from_hits(std::uint64_t hits, std::uint64_t n, double norm) {
    KernelEstimate e;
    const double p = static_cast<double>(hits) / static_cast<double>(n);
    e.n_paths = n;
    e.hits = hits;
    e.value = p / norm;
    e.std_error = std::sqrt(p * (1.0 - p) / static_cast<double>(n)) / norm;
    e.upper95 = (hits == 0 ? 3.0 / static_cast<double>(n) : p + 1.645 * std::sqrt(p * (1.0 - p) / n)) / norm;
    return e;
}

}  // namespace

std::vector<KernelEstimate> exit_corner_probs(Point start, const std::vector<double>& eps, const CovSpec& cov,
                                              double dt, std::uint64_t n, std::uint64_t seed,
                                              const ExitOptions& options) {
    std::vector<std::pair<double, double>> windows;
    for (double e : eps) {
        if (!(e > 0.0)) throw ParameterError("eps must be positive");
        windows.emplace_back(0.0, e);
    }
    const auto hits = count_windows(start, windows, cov, dt, n, seed, options);
    std::vector<KernelEstimate> out;
    for (std::size_t j = 0; j < eps.size(); ++j) {
        KernelEstimate e = from_hits(hits[j], n, 1.0);
        e.ell = start.L;
        e.delta = start.R;
        e.eps = eps[j];
        out.push_back(e);
    }
    return out;
}

KernelEstimate exit_corner_prob(Point start, double eps, const CovSpec& cov, double dt, std::uint64_t n,
                                std::uint64_t seed, const ExitOptions& options) {
    return exit_corner_probs(start, {eps}, cov, dt, n, seed, options).front();
}

std::vector<KernelEstimate> kernel_estimates(double ell, const std::vector<double>& rs, double delta, double eps,
                                             const CovSpec& cov, double dt, std::uint64_t n, std::uint64_t seed,
                                             const ExitOptions& options) {
    if (!(ell > 0.0 && delta > 0.0 && eps > 0.0)) throw ParameterError("ell, delta and eps must be positive");
    std::vector<std::pair<double, double>> windows;
    for (double r : rs) {
        if (!(r > 0.0)) throw ParameterError("r must be positive");
        windows.emplace_back(r, r + eps);
    }
    const auto hits = count_windows({ell, delta}, windows, cov, dt, n, seed, options);
    std::vector<KernelEstimate> out;
    for (std::size_t j = 0; j < rs.size(); ++j) {
        KernelEstimate e = from_hits(hits[j], n, delta * eps);
        e.ell = ell;
        e.r = rs[j];
        e.delta = delta;
        e.eps = eps;
        out.push_back(e);
    }
    return out;
}

KernelEstimate kernel_estimate(double ell, double r, double delta, double eps, const CovSpec& cov, double dt,
                               std::uint64_t n, std::uint64_t seed, const ExitOptions& options) {
    return kernel_estimates(ell, {r}, delta, eps, cov, dt, n, seed, options).front();
}

KernelEstimate richardson(const KernelEstimate& coarse, const KernelEstimate& fine) {
    KernelEstimate e = fine;
    e.value = 2.0 * fine.value - coarse.value;
    e.std_error = std::sqrt(4.0 * fine.std_error * fine.std_error + coarse.std_error * coarse.std_error);
    e.upper95 = 2.0 * fine.upper95;
    e.n_paths = fine.n_paths + coarse.n_paths;
    e.hits = fine.hits + coarse.hits;
    return e;
}

double closed_form_kernel(double ell, double r, double gamma) {
    if (!(ell > 0.0 && r > 0.0)) throw ParameterError("ell and r must be positive");
    const double q = 4.0 / (gamma * gamma);
    const double s = std::pow(ell, q) + std::pow(r, q);
    return std::pow(ell, q - 1.0) * std::pow(r, q - 1.0) / (s * s);
}

std::vector<double> duration_samples(double ell, double r_lo, double r_hi, const CovSpec& cov, double dt,
                                     std::uint64_t n, std::uint64_t seed, const DurationOptions& options) {
    cov.validate();
    if (!(ell > 0.0 && r_lo > 0.0 && r_hi > r_lo)) throw ParameterError("need ell > 0 and 0 < r_lo < r_hi");
    const double max_time =
        options.max_time > 0.0 ? options.max_time : 50.0 * (ell * ell + r_hi * r_hi) / cov.a2;
    const auto max_steps = static_cast<std::size_t>(std::ceil(max_time / dt));
    const auto chunks = make_chunks(n, std::max<std::size_t>(options.per_task, 1));
    auto task = [&](std::size_t k) {
        Rng rng = Rng::stream(seed, k);
        std::vector<double> out;
        for (std::size_t i = chunks[k].begin; i < chunks[k].end; ++i) {
            const ConePath p = sample_cone_path({ell, options.delta}, cov, dt, rng, max_steps, false);
            if (p.exited && p.exit_point.L == 0.0 && p.exit_point.R >= r_lo && p.exit_point.R <= r_hi)
                out.push_back(p.exit_time);
        }
        return out;
    };
    const auto parts = parallel_map(chunks.size(), static_cast<unsigned>(std::max(options.workers, 0)), task);
    std::vector<double> merged;
    for (const auto& part : parts) merged.insert(merged.end(), part.begin(), part.end());
    if (merged.empty()) throw InsufficientDataError("no path exited in the window; widen r_window");
    return merged;
}

IncrementMoments increment_moments(const CovSpec& cov, double dt, std::uint64_t n, std::uint64_t seed) {
    cov.validate();
    if (!(dt > 0.0) || n < 2) throw ParameterError("need dt > 0 and n >= 2");
    Rng rng(seed);
    double sl = 0, sr = 0, sll = 0, srr = 0, slr = 0;
    for (std::uint64_t i = 0; i < n; ++i) {
        const Point d = sample_increment(cov, dt, rng);
        sl += d.L;
        sr += d.R;
        sll += d.L * d.L;
        srr += d.R * d.R;
        slr += d.L * d.R;
    }
    const double m = static_cast<double>(n);
    IncrementMoments out;
    out.n = n;
    out.var_L = (sll - sl * sl / m) / (m - 1.0) / dt;
    out.var_R = (srr - sr * sr / m) / (m - 1.0) / dt;
    out.cov_LR = (slr - sl * sr / m) / (m - 1.0) / dt;
    out.corr = out.cov_LR / std::sqrt(out.var_L * out.var_R);
    return out;
}

LawReport cone_kernel_ratio_check(double gamma, std::uint64_t n, std::uint64_t seed,
                                  const KernelRatioOptions& o) {
    const auto start = std::chrono::steady_clock::now();
    const CovSpec cov = CovSpec::from_gamma(gamma);
    const double h = o.h_coarse;
    auto K = [&](double ell, int stream) {
        const KernelEstimate coarse =
            kernel_estimate(ell, 1.0, h, h, cov, o.dt, n, mix64(seed + 2 * stream), o.exit);
        const KernelEstimate fine =
            kernel_estimate(ell, 1.0, h / 2.0, h / 2.0, cov, o.dt, n, mix64(seed + 2 * stream + 1), o.exit);
        return std::pair{richardson(coarse, fine), fine};
    };
    const auto [k21, k21_fine] = K(2.0, 0);
    const auto [k11, k11_fine] = K(1.0, 1);
    LawReport r;
    r.name = "cone_kernel_ratio";
    r.params = {{"gamma", gamma}, {"h", h}, {"dt", o.dt}};
    r.estimate = k21.value / k11.value;
    r.std_error = std::abs(r.estimate) * std::hypot(k21.std_error / k21.value, k11.std_error / k11.value);
    r.target = closed_form_kernel(2.0, 1.0, gamma) / closed_form_kernel(1.0, 1.0, gamma);
    r.tolerance = 0.03;
    r.rule = VerdictRule::AbsoluteTolerance;
    r.n = n;
    r.seed = seed;
    r.extras = {{"K21", k21.value},
                {"K11", k11.value},
                {"ratio_fine_only", k21_fine.value / k11_fine.value},
                {"paths_total", static_cast<double>(4 * n)}};
    r.decide();
    r.runtime_ms = elapsed_ms(start);
    return r;
}

LawReport corner_exit_exponent_check(double gamma, std::uint64_t n, std::uint64_t seed, const CornerOptions& o,
                                     std::vector<PlotData>* plots) {
    const auto start = std::chrono::steady_clock::now();
    const CovSpec cov = CovSpec::from_gamma(gamma);
    const auto est = exit_corner_probs(o.start, o.eps, cov, o.dt, n, seed, o.exit);
    std::vector<double> x, y, w;
    for (const auto& e : est) {
        if (e.hits == 0) throw InsufficientDataError("corner exit: zero hits for some eps");
        x.push_back(std::log(e.eps));
        y.push_back(std::log(e.value));
        w.push_back(static_cast<double>(e.hits));  // 1 / Var(log p) ~ hits
    }
    const LinearFit fit = weighted_linear_fit(x, y, w);
    LawReport r;
    r.name = "corner_exit_exponent";
    r.params = {{"gamma", gamma}, {"start_L", o.start.L}, {"start_R", o.start.R}, {"dt", o.dt}};
    r.estimate = fit.slope;
    r.std_error = fit.slope_se;
    r.target = 4.0 / (gamma * gamma);
    r.tolerance = o.tolerance;
    r.rule = VerdictRule::AbsoluteTolerance;
    r.n = n;
    r.seed = seed;
    for (const auto& e : est) r.extras["p_eps_" + std::to_string(e.eps).substr(0, 5)] = e.value;
    r.decide();
    if (plots) {
        PlotData d{"corner_exit", {"eps", "probability", "stderr", "fit"}, {}};
        for (std::size_t i = 0; i < est.size(); ++i)
            d.rows.push_back({est[i].eps, est[i].value, est[i].std_error, std::exp(fit.intercept + fit.slope * x[i])});
        plots->push_back(std::move(d));
    }
    r.runtime_ms = elapsed_ms(start);
    return r;
}

}  // namespace lqg::cone
