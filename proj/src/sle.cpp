#include "lqglab/sle.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "lqglab/bessel.hpp"
#include "lqglab/errors.hpp"
#include "lqglab/parallel.hpp"

namespace lqg::sle {

void DrivingPath::validate() const {
    if (!(dt > 0.0)) throw ParameterError("driving path needs dt > 0");
    if (W.size() != V_minus.size() || W.size() != V_plus.size() || W.empty())
        throw ParameterError("driving path tracks differ in length");
    for (std::size_t k = 0; k < W.size(); ++k)
        if (!(V_minus[k] <= W[k] && W[k] <= V_plus[k]))
            throw ParameterError("force points out of order at step " + std::to_string(k));
}

namespace {

void check_params(double kappa, double rho_minus, double rho_plus) {
    if (!(kappa > 0.0 && kappa <= 4.0)) throw ParameterError("kappa must lie in (0, 4]");
    if (!(rho_minus > -2.0 && rho_plus > -2.0)) throw ParameterError("force-point weights must exceed -2");
}

// Advances the small gap x (to which weight rho is attached) by the exact Bessel transition of dimension
// 1 + 2(rho+2)/kappa, with the far force point's drift added explicitly.
double bessel_gap_step(double x, double rho, double kappa, double dt, double far_drift, Rng& rng) {
    const double dim = 1.0 + 2.0 * (rho + 2.0) / kappa;
    const double y2 = squared_bessel_step(x * x / kappa, dim, dt, rng);
    return std::max(std::sqrt(kappa * y2) + far_drift * dt, 0.0);
}

}  // namespace

DrivingPath sample_driving(double kappa, double rho_minus, double rho_plus, std::size_t n_steps, double dt,
                           Rng& rng, const DrivingOptions& options) {
    check_params(kappa, rho_minus, rho_plus);
    if (!(dt > 0.0)) throw ParameterError("dt must be positive");
    DrivingPath d;
    d.dt = dt;
    d.kappa = kappa;
    d.rho_minus = rho_minus;
    d.rho_plus = rho_plus;
    d.W.reserve(n_steps + 1);
    d.V_minus.reserve(n_steps + 1);
    d.V_plus.reserve(n_steps + 1);
    double w = 0.0, vm = 0.0, vp = 0.0;
    d.W.push_back(w);
    d.V_minus.push_back(vm);
    d.V_plus.push_back(vp);
    const double scale = std::sqrt(kappa * dt);
    const double eps_c = options.collision_factor * scale;
    // Regularized 1/gap for drifts evaluated at (near-)collisions.
    auto inv = [&](double gap) { return 1.0 / std::max(gap, 0.5 * scale); };

    for (std::size_t k = 0; k < n_steps; ++k) {
        const double xm = w - vm, xp = vp - w;
        if (xm < eps_c && xm <= xp) {
            const double xn = bessel_gap_step(xm, rho_minus, kappa, dt, -rho_plus * inv(xp), rng);
            vm -= 2.0 * dt * inv(0.5 * (xm + xn));
            vp += 2.0 * dt * inv(xp);
            w = vm + xn;
            ++d.left_collisions;
        } else if (xp < eps_c) {
            const double xn = bessel_gap_step(xp, rho_plus, kappa, dt, -rho_minus * inv(xm), rng);
            vp += 2.0 * dt * inv(0.5 * (xp + xn));
            vm -= 2.0 * dt * inv(xm);
            w = vp - xn;
            ++d.right_collisions;
        } else {
            w += scale * rng.normal() + (rho_minus / xm - rho_plus / xp) * dt;
            vm -= 2.0 * dt / xm;
            vp += 2.0 * dt / xp;
        }
        w = std::clamp(w, vm, vp);
        d.W.push_back(w);
        d.V_minus.push_back(vm);
        d.V_plus.push_back(vp);
    }
    return d;
}

DrivingPath sample_driving(double kappa, double rho_minus, double rho_plus, std::size_t n_steps, double dt,
                           std::uint64_t seed, const DrivingOptions& options) {
    Rng rng(seed);
    return sample_driving(kappa, rho_minus, rho_plus, n_steps, dt, rng, options);
}

DrivingPath mirror(const DrivingPath& d) {
    DrivingPath m = d;
    std::swap(m.rho_minus, m.rho_plus);
    std::swap(m.left_collisions, m.right_collisions);
    for (std::size_t k = 0; k < d.W.size(); ++k) {
        m.W[k] = -d.W[k];
        m.V_minus[k] = -d.V_plus[k];
        m.V_plus[k] = -d.V_minus[k];
    }
    return m;
}

Complex inverse_slit(Complex z, double U, double dt) {
    const Complex u = z - U;
    Complex s = std::sqrt(u * u - 4.0 * dt);
    if (s.imag() < 0.0 || (s.imag() == 0.0 && s.real() * u.real() < 0.0)) s = -s;
    return U + s;
}

Complex forward_slit(Complex z, double U, double dt) {
    const Complex u = z - U;
    Complex s = std::sqrt(u * u + 4.0 * dt);
    if (s.imag() < 0.0 || (s.imag() == 0.0 && s.real() * u.real() < 0.0)) s = -s;
    return U + s;
}

double step_driving(const DrivingPath& d, std::size_t j) { return 0.5 * (d.W[j - 1] + d.W[j]); }

Complex inverse_loewner(const DrivingPath& d, std::size_t k, Complex z) {
    if (k > d.steps()) throw ParameterError("step index beyond the driving path");
    for (std::size_t j = k; j >= 1; --j) {
        z = inverse_slit(z, step_driving(d, j), d.dt);
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
            throw NumericalError("inverse Loewner map blew up at step " + std::to_string(j));
    }
    return z;
}

Complex tip(const DrivingPath& d, std::size_t k) {
    if (k == 0) return {0.0, 0.0};
    return inverse_loewner(d, k, Complex(step_driving(d, k), 0.0));
}

double min_relative_gap(const DrivingPath& d, bool left, std::size_t burn_in) {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t k = std::max<std::size_t>(burn_in, 1); k < d.W.size(); ++k) {
        const double gap = left ? d.W[k] - d.V_minus[k] : d.V_plus[k] - d.W[k];
        m = std::min(m, gap / std::sqrt(d.kappa * d.time(k)));
    }
    return m;
}

bool approaches(const DrivingPath& d, bool left, double threshold, std::size_t burn_in, Rng& rng) {
    auto excess = [&](std::size_t k) {
        const double gap = left ? d.W[k] - d.V_minus[k] : d.V_plus[k] - d.W[k];
        return gap - threshold * std::sqrt(d.kappa * d.time(k));
    };
    const double var = d.kappa * d.dt;
    double prev = excess(std::max<std::size_t>(burn_in, 1));
    if (prev <= 0.0) return true;
    for (std::size_t k = std::max<std::size_t>(burn_in, 1) + 1; k < d.W.size(); ++k) {
        const double cur = excess(k);
        if (cur <= 0.0) return true;
        if (rng.uniform() < std::exp(-2.0 * prev * cur / var)) return true;
        prev = cur;
    }
    return false;
}

LoewnerCurve trace_curve(const DrivingPath& d, const TraceOptions& options) {
    d.validate();
    LoewnerCurve c;
    const std::size_t n = d.steps();
    const std::size_t stride = options.stride > 0 ? options.stride : std::max<std::size_t>(1, n / 1000);
    for (std::size_t k = 0; k <= n; k += stride) {
        c.t.push_back(d.time(k));
        c.points.push_back(tip(d, k));
    }
    if (n % stride != 0) {
        c.t.push_back(d.time(n));
        c.points.push_back(tip(d, n));
    }
    c.touched_left = min_relative_gap(d, true, options.burn_in) < options.touch_threshold;
    c.touched_right = min_relative_gap(d, false, options.burn_in) < options.touch_threshold;
    c.driving = d;
    return c;
}

HitFractions hit_fractions(double kappa, double rho_minus, double rho_plus, std::size_t n_curves, double threshold,
                           std::uint64_t seed, const HitOptions& o) {
    check_params(kappa, rho_minus, rho_plus);
    if (n_curves == 0) throw ParameterError("need at least one curve");
    const auto chunks = make_chunks(n_curves, std::max<std::size_t>(o.per_task, 1));
    auto task = [&](std::size_t k) {
        Rng rng = Rng::stream(seed, k);
        std::pair<std::size_t, std::size_t> hits{0, 0};
        for (std::size_t i = chunks[k].begin; i < chunks[k].end; ++i) {
            const DrivingPath d = sample_driving(kappa, rho_minus, rho_plus, o.n_steps, o.dt, rng, o.driving);
            if (approaches(d, true, threshold, o.burn_in, rng)) ++hits.first;
            if (approaches(d, false, threshold, o.burn_in, rng)) ++hits.second;
        }
        return hits;
    };
    const auto parts = parallel_map(chunks.size(), static_cast<unsigned>(std::max(o.workers, 0)), task);
    HitFractions f;
    f.n = n_curves;
    for (const auto& p : parts) {
        f.left += static_cast<double>(p.first);
        f.right += static_cast<double>(p.second);
    }
    f.left /= static_cast<double>(n_curves);
    f.right /= static_cast<double>(n_curves);
    return f;
}

LawReport boundary_hit_stats(double kappa, double rho_minus, double rho_plus, std::size_t n_curves,
                             double threshold, std::uint64_t seed, const HitOptions& o) {
    const auto start = std::chrono::steady_clock::now();
    const HitFractions f = hit_fractions(kappa, rho_minus, rho_plus, n_curves, threshold, seed, o);
    LawReport r;
    r.name = "sle_boundary_hit";
    r.params = {{"kappa", kappa}, {"rho_minus", rho_minus}, {"rho_plus", rho_plus}, {"threshold", threshold}};
    r.estimate = f.left;
    r.std_error = std::sqrt(f.left * (1.0 - f.left) / static_cast<double>(n_curves));
    r.tolerance = 0.5;
    r.rule = VerdictRule::Predicate;
    const bool hitting = rho_minus < kappa / 2.0 - 2.0;
    r.pass = hitting ? f.left > 0.5 : f.left < 0.5;
    r.n = n_curves;
    r.seed = seed;
    r.extras = {{"right_fraction", f.right}, {"critical_rho", kappa / 2.0 - 2.0}};
    r.runtime_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return r;
}

LawReport hitting_phase_check(double kappa, std::size_t n_curves, double threshold, std::uint64_t seed,
                              const PhaseOptions& o, std::vector<PlotData>* plots) {
    const auto start = std::chrono::steady_clock::now();
    if (o.rhos.size() < 2 || !std::is_sorted(o.rhos.begin(), o.rhos.end()))
        throw ParameterError("rho grid must be increasing with at least two points");
    std::vector<double> frac;
    for (std::size_t i = 0; i < o.rhos.size(); ++i)
        frac.push_back(hit_fractions(kappa, o.rhos[i], o.rho_plus, n_curves, threshold, mix64(seed + i), o.hit).left);
    bool monotone = true;
    for (std::size_t i = 1; i < frac.size(); ++i) monotone = monotone && frac[i] <= frac[i - 1];
    // First downward crossing of 1/2, linearly interpolated.
    double crossing = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t i = 1; i < frac.size(); ++i)
        if (frac[i - 1] >= 0.5 && frac[i] < 0.5) {
            const double s = (frac[i - 1] - 0.5) / (frac[i - 1] - frac[i]);
            crossing = o.rhos[i - 1] + s * (o.rhos[i] - o.rhos[i - 1]);
            break;
        }
    LawReport r;
    r.name = "sle_hitting";
    r.params = {{"kappa", kappa}, {"threshold", threshold}, {"rho_plus", o.rho_plus},
                {"n_steps", static_cast<double>(o.hit.n_steps)}};
    r.estimate = crossing;
    r.target = kappa / 2.0 - 2.0;
    r.tolerance = o.tolerance;
    r.rule = VerdictRule::AbsoluteTolerance;
    r.n = n_curves;
    r.seed = seed;
    for (std::size_t i = 0; i < frac.size(); ++i) r.extras["hit_fraction_rho_" + std::to_string(o.rhos[i]).substr(0, 5)] = frac[i];
    r.extras["monotone"] = monotone ? 1.0 : 0.0;
    r.decide();
    // Strict inequality: the crossing must lie in the open interval around the critical value.
    r.pass = r.pass && monotone && std::abs(crossing - *r.target) < o.tolerance;
    r.rule = VerdictRule::Predicate;
    if (plots) {
        PlotData d{"hit_fraction", {"rho_minus", "left_hit_fraction"}, {}};
        for (std::size_t i = 0; i < frac.size(); ++i) d.rows.push_back({o.rhos[i], frac[i]});
        plots->push_back(std::move(d));
    }
    r.runtime_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return r;
}

namespace {

// Point of the left component (image of the quadrant left of the tip) for z in H.
Complex uniformize_left(const DrivingPath& d, Complex z) {
    const std::size_t n = d.steps();
    const double wT = d.W[n];
    const double gap = wT - d.V_minus[n];
    const Complex w = wT + Complex(0.0, 1.0) * std::sqrt(z - gap * gap);
    return inverse_loewner(d, n, w);
}

std::vector<LoewnerCurve> multiple(const std::vector<double>& weights, double gamma, std::size_t n_steps, double dt,
                                   Rng& rng, const MultipleOptions& o) {
    const double kappa = gamma * gamma;
    double left = 0.0;
    for (std::size_t i = 0; i + 1 < weights.size(); ++i) left += weights[i];
    const DrivingPath d = sample_driving(kappa, left - 2.0, weights.back() - 2.0, n_steps, dt, rng, o.driving);
    LoewnerCurve outer = trace_curve(d, o.trace);
    if (weights.size() == 2) return {outer};

    const std::vector<double> inner_weights(weights.begin(), weights.end() - 1);
    std::vector<LoewnerCurve> inner = multiple(inner_weights, gamma, n_steps, dt, rng, o);
    // Components pinched off by earlier left touches are not recursed into.
    const int neglected = outer.touched_left ? std::max(d.left_collisions, 1) : 0;
    outer.neglected_components = neglected;
    for (auto& c : inner) {
        for (auto& p : c.points) p = uniformize_left(d, p);
        c.neglected_components += neglected;
    }
    inner.push_back(std::move(outer));
    return inner;
}

}  // namespace

std::vector<LoewnerCurve> sample_multiple(const std::vector<double>& weights, double gamma, std::size_t n_steps,
                                          double dt, std::uint64_t seed, const MultipleOptions& options) {
    if (weights.size() < 2) throw ParameterError("multiple SLE needs at least two weights");
    for (double w : weights)
        if (!(w > 0.0)) throw ParameterError("weights must be positive");
    if (!(gamma > 0.0 && gamma <= 2.0)) throw ParameterError("gamma must lie in (0, 2]");
    Rng rng(seed);
    return multiple(weights, gamma, n_steps, dt, rng, options);
}

double min_distance(const LoewnerCurve& a, const LoewnerCurve& b) {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < a.points.size(); ++i)
        for (std::size_t j = 1; j < b.points.size(); ++j) m = std::min(m, std::abs(a.points[i] - b.points[j]));
    return m;
}

}  // namespace lqg::sle
