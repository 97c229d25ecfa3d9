#include "lqglab/laws.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "lqglab/errors.hpp"
#include "lqglab/gmc.hpp"
#include "lqglab/parallel.hpp"

namespace lqg::laws {

namespace {

double elapsed_ms(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

void check_gamma(double gamma) {
    if (!(gamma > 0.0 && gamma < 2.0)) throw ParameterError("gamma must lie in (0, 2)");
}

bool is_weight(double W, double target) { return std::abs(W - target) <= 1e-12 * std::max(1.0, std::abs(target)); }

}  // namespace

double law_weight2_joint(double ell, double r, double gamma) {
    check_gamma(gamma);
    if (!(ell > 0.0 && r > 0.0)) throw ParameterError("lengths must be positive");
    return std::pow(ell + r, -4.0 / (gamma * gamma) - 1.0);
}

double law_gamma2half_joint(double ell, double r, double gamma) {
    check_gamma(gamma);
    if (!(ell > 0.0 && r > 0.0)) throw ParameterError("lengths must be positive");
    const double q = 4.0 / (gamma * gamma);
    const double s = std::pow(ell, q) + std::pow(r, q);
    return std::pow(ell * r, q - 1.0) / (s * s);
}

Exponent boundary_length_exponent(double W, double gamma) {
    check_gamma(gamma);
    if (!(W > 0.0)) throw ParameterError("W must be positive");
    const double Q = gamma / 2.0 + 2.0 / gamma;
    if (W >= gamma * Q) return {true, 0.0};
    return {false, -2.0 * W / (gamma * gamma)};
}

InterfaceDensity::InterfaceDensity(double ell, double ellp, double W1, double W2, double gamma)
    : ell_(ell), ellp_(ellp), W1_(W1), W2_(W2), gamma_(gamma), z_(1.0) {
    check_gamma(gamma);
    if (!(ell > 0.0 && ellp > 0.0)) throw ParameterError("boundary lengths must be positive");
    const double half = gamma * gamma / 2.0;
    for (double W : {W1, W2})
        if (!is_weight(W, 2.0) && !is_weight(W, half))
            throw NoClosedFormError("interface law has a closed form only for weights 2 and gamma^2/2");
    boost::math::quadrature::tanh_sinh<double> q;
    z_ = q.integrate([this](double x) { return unnormalized(x); }, 0.0, std::numeric_limits<double>::infinity(),
                     1e-13);
    if (!(z_ > 0.0) || !std::isfinite(z_)) throw NumericalError("interface law normalizer did not converge");
}

double InterfaceDensity::unnormalized(double x) const {
    if (!(x > 0.0) || !std::isfinite(x)) return 0.0;
    auto joint = [this](double W, double a, double b) {
        return is_weight(W, 2.0) ? law_weight2_joint(a, b, gamma_) : law_gamma2half_joint(a, b, gamma_);
    };
    return joint(W1_, ell_, x) * joint(W2_, x, ellp_);
}

double InterfaceDensity::operator()(double x) const { return unnormalized(x) / z_; }

double interface_length_density(double ell, double ellp, double W1, double W2, double gamma, double x) {
    return InterfaceDensity(ell, ellp, W1, W2, gamma)(x);
}

TailFit fit_tail(const EmpiricalSample& sample, std::pair<double, double> window, const TailFitOptions& o) {
    const auto start = std::chrono::steady_clock::now();
    sample.validate();
    const auto [lo, hi] = window;
    if (!(lo > 0.0 && hi > lo)) throw ParameterError("tail window needs 0 < lo < hi");
    if (o.bins < 2) throw ParameterError("tail fit needs at least two bins");
    std::vector<double> v, w;
    for (std::size_t i = 0; i < sample.size(); ++i)
        if (sample.values[i] >= lo && sample.values[i] < hi && sample.weights[i] > 0.0) {
            v.push_back(sample.values[i]);
            w.push_back(sample.weights[i]);
        }
    EmpiricalSample inside{v, w};
    if (inside.effective_n() < 1000.0) throw InsufficientDataError("tail fit needs 1000 effective samples in window");
    const double total = sample.total_weight();
    const double log_lo = std::log(lo), step = (std::log(hi) - log_lo) / o.bins;

    auto slope_of = [&](const std::vector<std::size_t>* pick, std::vector<double>* centers,
                        std::vector<double>* dens) {
        std::vector<double> W(o.bins, 0.0), W2(o.bins, 0.0);
        const std::size_t m = pick ? pick->size() : v.size();
        for (std::size_t k = 0; k < m; ++k) {
            const std::size_t i = pick ? (*pick)[k] : k;
            const int b = std::clamp(static_cast<int>((std::log(v[i]) - log_lo) / step), 0, o.bins - 1);
            W[b] += w[i];
            W2[b] += w[i] * w[i];
        }
        std::vector<double> x, y, fw;
        for (int b = 0; b < o.bins; ++b) {
            if (!(W[b] > 0.0)) continue;
            const double e0 = std::exp(log_lo + b * step), e1 = std::exp(log_lo + (b + 1) * step);
            const double c = std::sqrt(e0 * e1);
            const double d = W[b] / (total * (e1 - e0));
            x.push_back(std::log(c));
            y.push_back(std::log(d));
            fw.push_back(W[b] * W[b] / W2[b]);
            if (centers) centers->push_back(c);
            if (dens) dens->push_back(d);
        }
        return weighted_linear_fit(x, y, fw).slope;
    };

    TailFit out;
    const double slope = slope_of(nullptr, &out.bin_centers, &out.densities);
    Rng rng(o.bootstrap_seed);
    std::vector<double> reps;
    std::vector<std::size_t> pick(v.size());
    for (int b = 0; b < o.bootstrap; ++b) {
        for (auto& p : pick) p = static_cast<std::size_t>(rng.uniform() * static_cast<double>(v.size()));
        reps.push_back(slope_of(&pick, nullptr, nullptr));
    }
    const MeanSe ms = mean_and_se(reps);

    LawReport& r = out.report;
    r.name = "tail_exponent";
    r.params = {{"window_lo", lo}, {"window_hi", hi}, {"bins", static_cast<double>(o.bins)}};
    r.estimate = slope;
    r.std_error = ms.se * std::sqrt(static_cast<double>(reps.size()));
    r.target = o.target;
    r.tolerance = o.tolerance;
    r.n = sample.size();
    r.seed = o.bootstrap_seed;
    r.extras = {{"n_eff_window", inside.effective_n()}};
    if (o.target) {
        r.rule = VerdictRule::AbsoluteTolerance;
        r.decide();
    } else {
        r.rule = VerdictRule::Predicate;
        r.pass = std::isfinite(slope);
    }
    r.runtime_ms = elapsed_ms(start);
    return out;
}

LawReport fit_tail_exponent(const EmpiricalSample& sample, std::pair<double, double> window,
                            const TailFitOptions& options) {
    return fit_tail(sample, window, options).report;
}

LawReport ks_compare(const EmpiricalSample& sample, const std::function<double(double)>& cdf, const std::string& name,
                     double tolerance) {
    const auto start = std::chrono::steady_clock::now();
    const KsResult ks = ks_one_sample(sample, cdf);
    LawReport r;
    r.name = name;
    r.estimate = ks.p_value;
    r.tolerance = tolerance;
    r.rule = VerdictRule::PValueAbove;
    r.n = sample.size();
    r.extras = {{"ks_statistic", ks.statistic}, {"n_eff", ks.n_eff}};
    r.decide();
    r.runtime_ms = elapsed_ms(start);
    return r;
}

Weight2Samples weight2_remarking_samples(double gamma, std::pair<double, double> window, std::size_t n,
                                         std::uint64_t seed) {
    check_gamma(gamma);
    const auto [a, b] = window;
    if (!(a > 0.0 && b > a) || !std::isfinite(b)) throw ParameterError("total-length window must be bounded in (0, inf)");
    const double q = 4.0 / (gamma * gamma);
    Rng rng(seed);
    Weight2Samples s;
    s.ell.reserve(n);
    s.r.reserve(n);
    s.total.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        // Inverse CDF of s^{-q} on [a, b].
        const double u = rng.uniform();
        double S;
        if (std::abs(q - 1.0) < 1e-14)
            S = a * std::pow(b / a, u);
        else {
            const double pa = std::pow(a, 1.0 - q), pb = std::pow(b, 1.0 - q);
            S = std::pow(pa + u * (pb - pa), 1.0 / (1.0 - q));
        }
        const double U = rng.uniform();
        s.total.push_back(S);
        s.ell.push_back(U * S);
        s.r.push_back((1.0 - U) * S);
    }
    return s;
}

std::function<double(double)> weight2_ell_marginal_cdf(double gamma, std::pair<double, double> window) {
    check_gamma(gamma);
    const auto [a, b] = window;
    if (!(a > 0.0 && b > a)) throw ParameterError("window must satisfy 0 < lo < hi");
    const double q = 4.0 / (gamma * gamma);
    // ell-marginal of (ell + r)^{-q-1} on {a <= ell + r <= b}: (max(ell, a)^{-q} - b^{-q}) / q
    auto mass = [=](double t) {
        t = std::clamp(t, 0.0, b);
        const double flat = (std::pow(a, -q) - std::pow(b, -q)) / q;
        if (t <= a) return t * flat;
        return a * flat + ((std::pow(t, 1.0 - q) - std::pow(a, 1.0 - q)) / (1.0 - q) - std::pow(b, -q) * (t - a)) / q;
    };
    const double total = mass(b);
    return [mass, total](double x) { return mass(x) / total; };
}

LawReport weight2_remarking_check(double gamma, std::pair<double, double> window, std::size_t n, std::uint64_t seed,
                                  std::vector<PlotData>* plots) {
    const auto start = std::chrono::steady_clock::now();
    const Weight2Samples s = weight2_remarking_samples(gamma, window, n, seed);
    const KsResult ell_ks = ks_one_sample(unweighted(s.ell), weight2_ell_marginal_cdf(gamma, window));
    std::vector<double> ratio;
    ratio.reserve(n);
    for (std::size_t i = 0; i < n; ++i) ratio.push_back(s.ell[i] / s.total[i]);
    const KsResult ratio_ks =
        ks_one_sample(unweighted(ratio), [](double x) { return std::clamp(x, 0.0, 1.0); });
    TailFitOptions tail;
    tail.target = -4.0 / (gamma * gamma);
    const TailFit slope_fit = fit_tail(unweighted(s.total), window, tail);
    const LawReport& slope = slope_fit.report;
    if (plots) {
        PlotData d{"total_length_density", {"s", "density", "closed_form_shape"}, {}};
        const double c0 = slope_fit.densities.front() / std::pow(slope_fit.bin_centers.front(), *tail.target);
        for (std::size_t i = 0; i < slope_fit.bin_centers.size(); ++i)
            d.rows.push_back({slope_fit.bin_centers[i], slope_fit.densities[i],
                              c0 * std::pow(slope_fit.bin_centers[i], *tail.target)});
        plots->push_back(std::move(d));
    }

    LawReport r;
    r.name = "weight2_remarking";
    r.params = {{"gamma", gamma}, {"window_lo", window.first}, {"window_hi", window.second}};
    r.estimate = ell_ks.p_value;
    r.tolerance = 0.01;
    r.rule = VerdictRule::PValueAbove;
    r.n = n;
    r.seed = seed;
    r.extras = {{"ks_statistic_ell", ell_ks.statistic},
                {"p_value_ratio_uniform", ratio_ks.p_value},
                {"total_length_slope", slope.estimate},
                {"total_length_slope_target", *tail.target}};
    r.decide();
    r.pass = r.pass && ratio_ks.p_value > 0.01 && slope.pass;
    r.rule = VerdictRule::Predicate;
    r.runtime_ms = elapsed_ms(start);
    return r;
}

LawReport mot_cov_check(double gamma, std::optional<double> a2, double horizon, std::size_t n, std::uint64_t seed) {
    const auto start = std::chrono::steady_clock::now();
    const cone::CovSpec cov = cone::CovSpec::from_gamma(gamma, a2);
    if (!(horizon > 0.0)) throw ParameterError("horizon must be positive");
    const cone::IncrementMoments m = cone::increment_moments(cov, horizon, n, seed);
    LawReport r;
    r.name = "mot_cov";
    r.params = {{"gamma", gamma}, {"a2", cov.a2}, {"horizon", horizon}};
    r.estimate = m.corr;
    r.std_error = (1.0 - m.corr * m.corr) / std::sqrt(static_cast<double>(n));
    r.target = cov.correlation();
    r.tolerance = 0.02;
    r.rule = VerdictRule::AbsoluteTolerance;
    r.n = n;
    r.seed = seed;
    const double ratio_L = m.var_L / cov.a2, ratio_R = m.var_R / cov.a2;
    r.extras = {{"var_L_over_a2", ratio_L},
                {"var_R_over_a2", ratio_R},
                {"cov_per_time", m.cov_LR},
                {"cov_per_time_target", cov.covariance()}};
    r.decide();
    r.pass = r.pass && std::abs(ratio_L - 1.0) <= 0.02 && std::abs(ratio_R - 1.0) <= 0.02;
    r.rule = VerdictRule::Predicate;
    r.runtime_ms = elapsed_ms(start);
    return r;
}

double window_mass_closed_form(double W, double gamma, double zeta) {
    const field::LqgParams p = field::derive_params(gamma, W);
    if (!(W > gamma * gamma / 2.0)) throw ParameterError("window mass closed form needs W > gamma^2/2");
    return std::exp((p.Q - p.beta) * zeta) / (2.0 * W / (gamma * gamma) - 1.0);
}

LawReport window_mass_check(double W, double gamma, double zeta, std::uint64_t seed) {
    const auto start = std::chrono::steady_clock::now();
    const double target = window_mass_closed_form(W, gamma, zeta);
    const field::GridSpec grid{2.0, 8, 4};
    const field::FieldSample s = field::sample_surface(field::SurfaceKind::ThickDisk, gamma, W, grid,
                                                       field::CWindow{-zeta}, seed);
    LawReport r;
    r.name = "window_mass";
    r.params = {{"W", W}, {"gamma", gamma}, {"zeta", zeta}};
    r.estimate = s.importance_weight;
    r.std_error = 0.0;
    r.target = target;
    r.tolerance = 1e-12;
    r.rule = VerdictRule::RelativeTolerance;
    r.n = 1;
    r.seed = seed;
    r.decide();
    r.runtime_ms = elapsed_ms(start);
    return r;
}

double f_density_integral_form(double ell, double delta, double p, double x) {
    if (!(x > 0.0 && x < ell - delta)) return 0.0;
    const double A = ell - x;
    auto f = [=](double y, double yc) {
        const double right = yc > 0.0 ? yc : A - y;
        return std::pow(y, p - 2.0) * std::pow(right, -p);
    };
    boost::math::quadrature::tanh_sinh<double> q;
    return std::pow(x, -p) * q.integrate(f, A - delta, A, 1e-14);
}

LawReport f_density_oracle_check(double W, double gamma, double ell, double delta, std::size_t n_points) {
    const auto start = std::chrono::steady_clock::now();
    const double p = beaded::thin_exponent(W, gamma);
    const beaded::FDensity f(ell, delta, p);
    double worst = 0.0;
    const double b = ell - delta;
    for (std::size_t i = 0; i < n_points; ++i) {
        const double x = b * (static_cast<double>(i) + 0.5) / static_cast<double>(n_points);
        const double closed = f.kernel(x);
        const double integral = f_density_integral_form(ell, delta, p, x);
        worst = std::max(worst, std::abs(closed - integral) / std::abs(integral));
    }
    boost::math::quadrature::tanh_sinh<double> q;
    const double mass = q.integrate(
        [&](double x, double xc) { return f.kernel_gap(x, xc > 0.0 ? xc : b - x) / f.normalizer(); }, 0.0, b, 1e-14);
    LawReport r;
    r.name = "f_density_oracle";
    r.params = {{"W", W}, {"gamma", gamma}, {"ell", ell}, {"delta", delta}};
    r.estimate = worst;
    r.target = 0.0;
    r.tolerance = 1e-8;
    r.rule = VerdictRule::AbsoluteTolerance;
    r.n = n_points;
    r.extras = {{"normalization", mass}};
    r.decide();
    r.pass = r.pass && std::abs(mass - 1.0) <= 1e-8;
    r.rule = VerdictRule::Predicate;
    r.runtime_ms = elapsed_ms(start);
    return r;
}

LawReport trimmed_length_ks_check(double W, double gamma, double ell, double delta, std::size_t n, std::uint64_t seed,
                                  const beaded::TrimmedLengthOptions& options, std::vector<PlotData>* plots) {
    const auto start = std::chrono::steady_clock::now();
    const EmpiricalSample s = beaded::trimmed_left_lengths(W, gamma, ell, delta, n, seed, options);
    const beaded::FDensity f(ell, delta, beaded::thin_exponent(W, gamma));
    LawReport r = ks_compare(s, [&](double x) { return f.cdf(x); }, "trimmed_length_ks");
    r.params = {{"W", W}, {"gamma", gamma}, {"ell", ell}, {"delta", delta}, {"cutoff", options.cutoff},
                {"eta", options.eta}};
    r.seed = seed;
    if (plots) {
        PlotData samples{"samples", {"trimmed_left_length", "weight"}, {}};
        for (std::size_t i = 0; i < s.size(); ++i) samples.rows.push_back({s.values[i], s.weights[i]});
        PlotData overlay{"density_overlay", {"x", "f_density"}, {}};
        for (int i = 1; i < 400; ++i) {
            const double x = f.support_end() * i / 400.0;
            overlay.rows.push_back({x, f(x)});
        }
        plots->push_back(std::move(samples));
        plots->push_back(std::move(overlay));
    }
    r.runtime_ms = elapsed_ms(start);
    return r;
}

BoundaryLengths boundary_length_samples(double gamma, double W, std::size_t n, std::uint64_t seed,
                                        const BoundaryExponentOptions& o) {
    const field::LqgParams p = field::derive_params(gamma, W);
    if (!(W > gamma * gamma / 2.0)) throw ParameterError("boundary exponent check needs a thick disk");
    if (W >= gamma * p.Q) throw NonNormalizableError("boundary length law is infinite for W >= gamma Q");
    const field::GridSpec grid{field::calibrated_t_cut(p, field::SurfaceKind::ThickDisk), o.nx, o.ny};
    const field::SurfaceSampler sampler(field::SurfaceKind::ThickDisk, p, grid);
    const auto chunks = make_chunks(n, std::max<std::size_t>(o.per_task, 1));
    struct Part {
        std::vector<double> total, weight, base;
    };
    auto task = [&](std::size_t k) {
        Rng rng = Rng::stream(seed, k);
        Part part;
        for (std::size_t i = chunks[k].begin; i < chunks[k].end; ++i) {
            const field::FieldSample s = sampler.sample(field::CWindow{-o.zeta}, rng);
            const double L = gmc::boundary_measure(s, gmc::Side::Lower).total +
                             gmc::boundary_measure(s, gmc::Side::Upper).total;
            part.total.push_back(L);
            part.weight.push_back(s.importance_weight);
            part.base.push_back(L * std::exp(-gamma / 2.0 * s.c_const));
        }
        return part;
    };
    const auto parts = parallel_map(chunks.size(), static_cast<unsigned>(std::max(o.workers, 0)), task);
    BoundaryLengths out;
    for (const auto& part : parts) {
        for (std::size_t i = 0; i < part.total.size(); ++i) out.total.add(part.total[i], part.weight[i]);
        out.base.insert(out.base.end(), part.base.begin(), part.base.end());
    }
    return out;
}

std::pair<double, double> boundary_fit_window(const BoundaryLengths& s, double upper_quantile) {
    std::vector<double> logs;
    for (double b : s.base) logs.push_back(std::log(b));
    const MeanSe ms = mean_and_se(logs);
    const double sd = ms.se * std::sqrt(static_cast<double>(logs.size()));
    std::vector<double> sorted = s.total.values;
    std::sort(sorted.begin(), sorted.end());
    const auto idx = static_cast<std::size_t>(upper_quantile * static_cast<double>(sorted.size() - 1));
    return {std::exp(ms.mean + 3.0 * sd), sorted[idx]};
}

LawReport boundary_exponent_check(double gamma, double W, std::size_t n, std::uint64_t seed,
                                  const BoundaryExponentOptions& o, std::vector<PlotData>* plots) {
    const auto start = std::chrono::steady_clock::now();
    const BoundaryLengths s = boundary_length_samples(gamma, W, n, seed, o);
    const auto window = boundary_fit_window(s, o.upper_quantile);
    TailFitOptions tail;
    tail.target = boundary_length_exponent(W, gamma).value;
    tail.tolerance = o.tolerance;
    const TailFit fit = fit_tail(s.total, window, tail);
    LawReport r = fit.report;
    r.name = "boundary_exponent";
    r.params = {{"gamma", gamma}, {"W", W}, {"nx", static_cast<double>(o.nx)}, {"ny", static_cast<double>(o.ny)},
                {"zeta", o.zeta}, {"window_lo", window.first}, {"window_hi", window.second}};
    r.n = n;
    r.seed = seed;
    if (plots) {
        PlotData samples{"samples", {"boundary_length", "weight", "base_length"}, {}};
        for (std::size_t i = 0; i < s.total.size(); ++i)
            samples.rows.push_back({s.total.values[i], s.total.weights[i], s.base[i]});
        PlotData bins{"loglog_density", {"length", "density", "target_slope_line"}, {}};
        const double c0 = fit.densities.front() / std::pow(fit.bin_centers.front(), *tail.target);
        for (std::size_t i = 0; i < fit.bin_centers.size(); ++i)
            bins.rows.push_back({fit.bin_centers[i], fit.densities[i], c0 * std::pow(fit.bin_centers[i], *tail.target)});
        plots->push_back(std::move(samples));
        plots->push_back(std::move(bins));
    }
    r.runtime_ms = elapsed_ms(start);
    return r;
}

LawReport scaling_invariance_check(double gamma, double W, double lambda, std::size_t n_samples, std::uint64_t seed) {
    const auto start = std::chrono::steady_clock::now();
    if (!(lambda > 0.0)) throw ParameterError("lambda must be positive");
    const double c = 2.0 / gamma * std::log(lambda);
    double worst = 0.0;
    std::size_t cells = 0;
    const field::SurfaceKind kinds[] = {field::SurfaceKind::ThickDisk, field::SurfaceKind::Wedge,
                                        field::SurfaceKind::Sphere, field::SurfaceKind::Cone};
    Rng rng(seed);
    for (const auto kind : kinds) {
        const field::LqgParams p = field::derive_params(gamma, W);
        const field::GridSpec grid{4.0, 64, 16};
        const field::SurfaceSampler sampler(kind, p, grid);
        const bool windowed = kind == field::SurfaceKind::ThickDisk || kind == field::SurfaceKind::Sphere;
        for (std::size_t i = 0; i < n_samples; ++i) {
            const field::FieldSample s =
                sampler.sample(windowed ? std::optional<field::CWindow>(field::CWindow{-1.0}) : std::nullopt, rng);
            const field::FieldSample t = gmc::add_constant(s, c);
            auto compare = [&](const std::vector<double>& a, const std::vector<double>& b, double factor) {
                for (std::size_t k = 0; k < a.size(); ++k) {
                    worst = std::max(worst, std::abs(b[k] / (factor * a[k]) - 1.0));
                    ++cells;
                }
            };
            compare(gmc::area_measure(s).cell_masses, gmc::area_measure(t).cell_masses, lambda * lambda);
            if (field::domain_of(kind) == field::Domain::Strip)
                for (const auto side : {gmc::Side::Lower, gmc::Side::Upper})
                    compare(gmc::boundary_measure(s, side).cell_masses, gmc::boundary_measure(t, side).cell_masses,
                            lambda);
        }
    }
    LawReport r;
    r.name = "scaling_invariance";
    r.params = {{"gamma", gamma}, {"W", W}, {"lambda", lambda}};
    r.estimate = worst;
    r.target = 0.0;
    r.tolerance = 1e-12;
    r.rule = VerdictRule::AbsoluteTolerance;
    r.n = n_samples;
    r.seed = seed;
    r.extras = {{"cells_checked", static_cast<double>(cells)}};
    r.decide();
    r.runtime_ms = elapsed_ms(start);
    return r;
}

LawReport gamma2half_grid_check(double gamma, std::uint64_t n, std::uint64_t seed, const GridCheckOptions& o,
                                std::vector<PlotData>* plots) {
    const auto start = std::chrono::steady_clock::now();
    const cone::CovSpec cov = cone::CovSpec::from_gamma(gamma);
    const double h = o.h_coarse;
    std::vector<std::vector<cone::KernelEstimate>> K;  // K[i][j] at (ells[i], rs[j])
    for (std::size_t i = 0; i < o.ells.size(); ++i) {
        const auto coarse = cone::kernel_estimates(o.ells[i], o.rs, h, h, cov, o.dt, n, mix64(seed + 2 * i), o.exit);
        const auto fine =
            cone::kernel_estimates(o.ells[i], o.rs, h / 2.0, h / 2.0, cov, o.dt, n, mix64(seed + 2 * i + 1), o.exit);
        std::vector<cone::KernelEstimate> row;
        for (std::size_t j = 0; j < o.rs.size(); ++j) row.push_back(cone::richardson(coarse[j], fine[j]));
        K.push_back(row);
    }
    const double ref = K[0][0].value;
    const double ref_closed = law_gamma2half_joint(o.ells[0], o.rs[0], gamma);
    double worst = 0.0;
    LawReport r;
    for (std::size_t i = 0; i < o.ells.size(); ++i)
        for (std::size_t j = 0; j < o.rs.size(); ++j) {
            const double est = K[i][j].value / ref;
            const double exact = law_gamma2half_joint(o.ells[i], o.rs[j], gamma) / ref_closed;
            const std::string key = "ratio_" + std::to_string(static_cast<int>(o.ells[i])) + "_" +
                                    std::to_string(static_cast<int>(o.rs[j]));
            r.extras[key] = est;
            r.extras[key + "_closed"] = exact;
            worst = std::max(worst, std::abs(est / exact - 1.0));
        }
    if (plots) {
        PlotData d{"kernel_grid", {"ell", "r", "kernel_estimate", "stderr", "ratio_estimate", "ratio_closed_form"}, {}};
        for (std::size_t i = 0; i < o.ells.size(); ++i)
            for (std::size_t j = 0; j < o.rs.size(); ++j)
                d.rows.push_back({o.ells[i], o.rs[j], K[i][j].value, K[i][j].std_error, K[i][j].value / ref,
                                  law_gamma2half_joint(o.ells[i], o.rs[j], gamma) / ref_closed});
        plots->push_back(std::move(d));
    }
    r.name = "gamma2half_grid";
    r.params = {{"gamma", gamma}, {"h", h}, {"dt", o.dt}};
    r.estimate = worst;
    r.target = 0.0;
    r.tolerance = o.tolerance;
    r.rule = VerdictRule::AbsoluteTolerance;
    r.n = n;
    r.seed = seed;
    r.decide();
    r.runtime_ms = elapsed_ms(start);
    return r;
}

}  // namespace lqg::laws
