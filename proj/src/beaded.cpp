#include "lqglab/beaded.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "lqglab/errors.hpp"
#include "lqglab/parallel.hpp"

namespace lqg::beaded {

double BeadChain::left_length() const {
    double s = 0.0;
    for (const auto& b : beads) s += b.left_len;
    return s;
}

void BeadChain::validate() const {
    thin_exponent(W, gamma);
    if (!(T >= 0.0)) throw ParameterError("chain mass must be nonnegative");
    double prev = -1.0;
    for (const auto& b : beads) {
        if (b.u < 0.0 || b.u > T) throw ParameterError("bead label outside [0, T]");
        if (!(b.u > prev)) throw ParameterError("bead labels must increase strictly");
        if (!(b.left_len > cutoff)) throw ParameterError("bead shorter than the cutoff");
        prev = b.u;
    }
}

double SubordinatorPath::at(double t) const {
    const auto it = std::upper_bound(u.begin(), u.end(), t);
    if (it == u.begin()) return 0.0;
    return L[static_cast<std::size_t>(it - u.begin()) - 1];
}

double thin_exponent(double W, double gamma) {
    if (!(gamma > 0.0 && gamma < 2.0)) throw ParameterError("gamma must lie in (0, 2)");
    if (!(W > 0.0 && W < gamma * gamma / 2.0 * (1.0 - 1e-12))) throw ParameterError("beaded surfaces need 0 < W < gamma^2/2");
    return 2.0 * W / (gamma * gamma);
}

double levy_tail_mass(double p, double cutoff, double max_len) {
    if (!(cutoff > 0.0)) throw ParameterError("cutoff must be positive");
    if (!(max_len > cutoff)) return 0.0;
    const double upper = std::isinf(max_len) ? 0.0 : std::pow(max_len, p - 1.0);
    return (std::pow(cutoff, p - 1.0) - upper) / (1.0 - p);
}

double expected_bead_count(double W, double gamma, double T, double cutoff, double max_len) {
    return T * levy_tail_mass(thin_exponent(W, gamma), cutoff, max_len);
}

double sample_bead_length(double p, double cutoff, double max_len, Rng& rng) {
    const double a = std::pow(cutoff, p - 1.0);
    const double b = std::isinf(max_len) ? 0.0 : std::pow(max_len, p - 1.0);
    return std::pow(a - rng.uniform() * (a - b), 1.0 / (p - 1.0));
}

double sample_size_biased_length(double p, double cutoff, double max_len, Rng& rng) {
    if (std::isinf(max_len)) throw ParameterError("size-biased bead law needs a finite max_len");
    const double a = std::pow(cutoff, p), b = std::pow(max_len, p);
    return std::pow(a + rng.uniform() * (b - a), 1.0 / p);
}

BeadChain sample_levy_marks(double W, double gamma, double T, double cutoff, Rng& rng, double max_len) {
    const double p = thin_exponent(W, gamma);
    if (!(cutoff > 0.0)) throw ParameterError("cutoff must be positive");
    if (!(T >= 0.0)) throw ParameterError("chain mass must be nonnegative");
    BeadChain chain;
    chain.T = T;
    chain.W = W;
    chain.gamma = gamma;
    chain.cutoff = cutoff;
    chain.max_len = max_len;
    const std::uint64_t count = rng.poisson(T * levy_tail_mass(p, cutoff, max_len));
    chain.beads.resize(count);
    for (auto& b : chain.beads) b.u = T * rng.uniform();
    for (auto& b : chain.beads) b.left_len = sample_bead_length(p, cutoff, max_len, rng);
    std::sort(chain.beads.begin(), chain.beads.end(), [](const Bead& a, const Bead& b) { return a.u < b.u; });
    return chain;
}

BeadChain sample_levy_marks(double W, double gamma, double T, double cutoff, std::uint64_t seed, double max_len) {
    Rng rng(seed);
    return sample_levy_marks(W, gamma, T, cutoff, rng, max_len);
}

BeadChain thin_chain(const BeadChain& chain, double new_cutoff) {
    if (new_cutoff < chain.cutoff) throw ParameterError("thinning cannot lower the cutoff");
    BeadChain out = chain;
    out.cutoff = new_cutoff;
    std::erase_if(out.beads, [&](const Bead& b) { return !(b.left_len > new_cutoff); });
    return out;
}

BeadChain concatenate(const BeadChain& a, const BeadChain& b) {
    if (a.W != b.W || a.gamma != b.gamma) throw ParameterError("concatenated chains must share W and gamma");
    BeadChain out = a;
    out.T = a.T + b.T;
    out.cutoff = std::min(a.cutoff, b.cutoff);
    out.max_len = std::max(a.max_len, b.max_len);
    for (Bead bead : b.beads) {
        bead.u += a.T;
        out.beads.push_back(bead);
    }
    return out;
}

SubordinatorPath subordinator_path(const BeadChain& chain) {
    SubordinatorPath path;
    path.u.reserve(chain.beads.size());
    path.L.reserve(chain.beads.size());
    double acc = 0.0;
    for (const auto& b : chain.beads) {
        acc += b.left_len;
        path.u.push_back(b.u);
        path.L.push_back(acc);
    }
    return path;
}

TrimSplit trim_split(std::span<const double> left_lengths, double delta) {
    if (!(delta > 0.0)) throw ParameterError("delta must be positive");
    double acc = 0.0;
    for (std::size_t k = left_lengths.size(); k-- > 0;) {
        acc += left_lengths[k];
        if (acc >= delta) return {k, acc};
    }
    throw ParameterError("chain left length does not exceed delta");
}

BeadChain delta_trim(const BeadChain& chain, double delta) {
    std::vector<double> lengths;
    lengths.reserve(chain.beads.size());
    for (const auto& b : chain.beads) lengths.push_back(b.left_len);
    if (!(chain.left_length() > delta)) throw ParameterError("chain left length does not exceed delta");
    const TrimSplit split = trim_split(lengths, delta);
    BeadChain out = chain;
    out.beads.resize(split.kept);
    return out;
}

namespace {

boost::math::quadrature::tanh_sinh<double>& quadrature() {
    thread_local boost::math::quadrature::tanh_sinh<double> q;
    return q;
}

}  // namespace

FDensity::FDensity(double ell, double delta, double p) : ell_(ell), delta_(delta), p_(p), z_(1.0) {
    if (!(delta > 0.0 && ell > delta)) throw ParameterError("f-density needs 0 < delta < ell");
    if (!(p > 0.0 && p < 1.0)) throw ParameterError("f-density needs p in (0, 1)");
    const double b = support_end();
    // xc is the signed distance to the nearer endpoint, which keeps (b - x) accurate near b.
    auto f = [this, b](double x, double xc) { return kernel_gap(x, xc > 0.0 ? xc : b - x); };
    z_ = quadrature().integrate(f, 0.0, b, 1e-14);
}

double FDensity::kernel_gap(double x, double right_gap) const {
    if (!(x > 0.0 && right_gap > 0.0)) return 0.0;
    return std::pow(delta_, 1.0 - p_) / (1.0 - p_) * std::pow(x, -p_) / ((ell_ - x) * std::pow(right_gap, 1.0 - p_));
}

double FDensity::kernel(double x) const {
    const double b = support_end();
    if (!(x > 0.0 && x < b)) return 0.0;
    return kernel_gap(x, b - x);
}

double FDensity::operator()(double x) const { return kernel(x) / z_; }

double FDensity::cdf(double x) const {
    const double b = support_end();
    if (x <= 0.0) return 0.0;
    if (x >= b) return 1.0;
    auto f = [this](double t) { return kernel(t); };
    return std::clamp(quadrature().integrate(f, 0.0, x, 1e-12) / z_, 0.0, 1.0);
}

double f_density(double ell, double delta, double W, double gamma, double x) {
    return FDensity(ell, delta, thin_exponent(W, gamma))(x);
}

Triple marked_decomposition_sample(double W, double gamma, double ell, double delta, Rng& rng) {
    const double p = thin_exponent(W, gamma);
    if (!(delta > 0.0 && ell > delta)) throw ParameterError("decomposition needs 0 < delta < ell");
    // Proposal x^{-p} w^{p/2-1} z^{-p} v^{p/2-1} with w = ell-delta-x, v = delta-z; the target/proposal
    // ratio is ((w+v)/sqrt(wv))^{p-2} <= 2^{p-2}.
    for (;;) {
        const double bx = rng.beta(1.0 - p, p / 2.0);
        const double bz = rng.beta(1.0 - p, p / 2.0);
        const double x = (ell - delta) * bx;
        const double z = delta * bz;
        const double w = (ell - delta) * (1.0 - bx);
        const double v = delta * (1.0 - bz);
        if (!(x > 0.0 && z > 0.0 && w > 0.0 && v > 0.0)) continue;
        const double accept = std::pow(2.0 * std::sqrt(w * v) / (w + v), 2.0 - p);
        if (rng.uniform() < accept) return {x, w + v, z};
    }
}

Triple marked_decomposition_sample(double W, double gamma, double ell, double delta, std::uint64_t seed) {
    Rng rng(seed);
    return marked_decomposition_sample(W, gamma, ell, delta, rng);
}

EmpiricalSample trimmed_left_lengths(double W, double gamma, double ell, double delta, std::size_t n,
                                     std::uint64_t seed, const TrimmedLengthOptions& options) {
    const double p = thin_exponent(W, gamma);
    if (!(delta > 0.0 && ell > delta)) throw ParameterError("trimming needs 0 < delta < ell");
    if (!(options.eta > 0.0 && options.eta < 1.0)) throw ParameterError("eta must lie in (0, 1)");
    const double cutoff = options.cutoff * ell;
    const double rate = levy_tail_mass(p, cutoff);
    const double lo = ell * (1.0 - options.eta), hi = ell * (1.0 + options.eta);
    const auto chunks = make_chunks(n, std::max<std::size_t>(options.per_task, 1));

    auto task = [&](std::size_t k) {
        Rng rng = Rng::stream(seed, k);
        EmpiricalSample out;
        const std::size_t want = chunks[k].end - chunks[k].begin;
        std::vector<double> lengths, labels;
        while (out.size() < want) {
            lengths.clear();
            labels.clear();
            double t = 0.0, L = 0.0, enter = -1.0, leave = -1.0;
            for (;;) {
                t += rng.exponential() / rate;
                const double len = sample_bead_length(p, cutoff, kInf, rng);
                L += len;
                if (L > hi) {
                    leave = t;
                    break;
                }
                lengths.push_back(len);
                labels.push_back(t);
                if (enter < 0.0 && L >= lo) enter = t;
            }
            if (enter < 0.0) continue;
            // T uniform on the occupation interval of the window; weight = its Lebesgue length.
            const double T = enter + rng.uniform() * (leave - enter);
            const std::size_t count =
                static_cast<std::size_t>(std::upper_bound(labels.begin(), labels.end(), T) - labels.begin());
            double LT = 0.0;
            for (std::size_t i = 0; i < count; ++i) LT += lengths[i];
            // Scale invariance maps the chain of left length LT to one of left length ell.
            const double scale = ell / LT;
            const TrimSplit split = trim_split(std::span<const double>(lengths.data(), count), delta / scale);
            out.add((LT - split.dropped) * scale, leave - enter);
        }
        return out;
    };
    const auto parts = parallel_map(chunks.size(), static_cast<unsigned>(std::max(options.workers, 0)), task);
    EmpiricalSample merged;
    for (const auto& part : parts) {
        merged.values.insert(merged.values.end(), part.values.begin(), part.values.end());
        merged.weights.insert(merged.weights.end(), part.weights.begin(), part.weights.end());
    }
    return merged;
}

namespace {

// Left length of a chain of mass T, only the ordered lengths are needed.
void chain_lengths(double p, double T, double cutoff, double max_len, Rng& rng, std::vector<double>& out) {
    out.clear();
    const std::uint64_t count = rng.poisson(T * levy_tail_mass(p, cutoff, max_len));
    for (std::uint64_t i = 0; i < count; ++i) out.push_back(sample_bead_length(p, cutoff, max_len, rng));
}

double sum(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
}

}  // namespace

DecompositionSamples decomposition_samples(double W, double gamma, double T, std::size_t n, std::uint64_t seed,
                                           const DecompositionOptions& options) {
    const double p = thin_exponent(W, gamma);
    if (!(T > 0.0)) throw ParameterError("chain mass must be positive");
    if (!(options.cutoff > 0.0 && options.max_len > options.cutoff))
        throw ParameterError("decomposition needs 0 < cutoff < max_len");
    const double c = options.cutoff, M = options.max_len;
    const auto chunks = make_chunks(n, std::max<std::size_t>(options.per_task, 1));

    auto task = [&](std::size_t k) {
        Rng rng1 = Rng::stream(seed, 2 * k);
        Rng rng3 = Rng::stream(seed, 2 * k + 1);
        DecompositionSamples out;
        std::vector<double> a, b;
        for (std::size_t i = chunks[k].begin; i < chunks[k].end; ++i) {
            // Procedure 1: chain of mass T weighted by its left length; marked bead picked by length.
            chain_lengths(p, T, c, M, rng1, a);
            const double total = sum(a);
            if (total > 0.0) {
                const double target = rng1.uniform() * total;
                double before = 0.0;
                std::size_t j = 0;
                while (j + 1 < a.size() && before + a[j] <= target) before += a[j++];
                out.marked_chain.add(before + rng1.uniform() * a[j], total);
            }
            // Procedure 3: chains of masses u and T - u around an inserted bead.
            const double u = T * rng3.uniform();
            chain_lengths(p, u, c, M, rng3, a);
            chain_lengths(p, T - u, c, M, rng3, b);
            const double inserted = options.unbiased_insert ? sample_bead_length(p, c, M, rng3)
                                                            : sample_size_biased_length(p, c, M, rng3);
            out.inserted.add(sum(a) + rng3.uniform() * inserted);
        }
        return out;
    };
    const auto parts = parallel_map(chunks.size(), static_cast<unsigned>(std::max(options.workers, 0)), task);
    DecompositionSamples merged;
    for (const auto& part : parts) {
        for (std::size_t i = 0; i < part.marked_chain.size(); ++i)
            merged.marked_chain.add(part.marked_chain.values[i], part.marked_chain.weights[i]);
        for (std::size_t i = 0; i < part.inserted.size(); ++i)
            merged.inserted.add(part.inserted.values[i], part.inserted.weights[i]);
    }
    return merged;
}

LawReport decomposition_equivalence_test(double W, double gamma, double T, std::size_t n, std::uint64_t seed,
                                         const DecompositionOptions& options, std::vector<PlotData>* plots) {
    const auto start = std::chrono::steady_clock::now();
    const DecompositionSamples s = decomposition_samples(W, gamma, T, n, seed, options);
    const KsResult ks = ks_two_sample(s.marked_chain, s.inserted);
    LawReport r;
    r.name = options.unbiased_insert ? "decomposition_equivalence_control" : "decomposition_equivalence";
    r.params = {{"W", W}, {"gamma", gamma}, {"T", T}, {"cutoff", options.cutoff}, {"max_len", options.max_len}};
    r.estimate = ks.p_value;
    r.tolerance = 0.01;
    r.rule = VerdictRule::PValueAbove;
    if (options.unbiased_insert) {
        r.tolerance = 1e-3;
        r.rule = VerdictRule::PValueBelow;
    }
    r.n = n;
    r.seed = seed;
    r.extras = {{"ks_statistic", ks.statistic},
                {"n_eff", ks.n_eff},
                {"n_eff_marked", s.marked_chain.effective_n()},
                {"n_inserted", static_cast<double>(s.inserted.size())}};
    r.decide();
    if (plots) {
        PlotData one{"marked_chain", {"value", "weight"}, {}};
        for (std::size_t i = 0; i < s.marked_chain.size(); ++i)
            one.rows.push_back({s.marked_chain.values[i], s.marked_chain.weights[i]});
        PlotData three{"inserted", {"value", "weight"}, {}};
        for (std::size_t i = 0; i < s.inserted.size(); ++i)
            three.rows.push_back({s.inserted.values[i], s.inserted.weights[i]});
        plots->push_back(std::move(one));
        plots->push_back(std::move(three));
    }
    r.runtime_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return r;
}

namespace {

struct LaplaceSums {
    std::vector<double> small, large;
};

std::vector<double> log_phi(const std::vector<double>& sums, double count) {
    std::vector<double> out;
    for (double s : sums) out.push_back(-std::log(s / count));
    return out;
}

std::vector<double> richardson(const std::vector<double>& small, const std::vector<double>& large, double p,
                               double c_small, double c_large) {
    // Phi_c = Phi - K c^p + o(c^p)
    const double a = std::pow(c_small, p), b = std::pow(c_large, p);
    std::vector<double> out;
    for (std::size_t i = 0; i < small.size(); ++i) out.push_back((small[i] * b - large[i] * a) / (b - a));
    return out;
}

double loglog_slope(const std::vector<double>& lambdas, const std::vector<double>& phi) {
    std::vector<double> x, y, w(lambdas.size(), 1.0);
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
        x.push_back(std::log(lambdas[i]));
        y.push_back(std::log(phi[i]));
    }
    return weighted_linear_fit(x, y, w).slope;
}

}  // namespace

namespace {

std::vector<LaplaceSums> laplace_parts(double p, std::size_t n, std::uint64_t seed, const LaplaceOptions& o,
                                       std::vector<Chunk>& chunks) {
    if (!(o.cutoff_small > 0.0 && o.cutoff_large > o.cutoff_small))
        throw ParameterError("Laplace fit needs 0 < cutoff_small < cutoff_large");
    if (o.lambdas.size() < 2) throw ParameterError("Laplace fit needs at least two lambdas");
    chunks = make_chunks(n, std::max<std::size_t>(o.per_task, 1));
    const double rate = levy_tail_mass(p, o.cutoff_small);
    auto task = [&](std::size_t k) {
        Rng rng = Rng::stream(seed, k);
        LaplaceSums s;
        s.small.assign(o.lambdas.size(), 0.0);
        s.large.assign(o.lambdas.size(), 0.0);
        for (std::size_t i = chunks[k].begin; i < chunks[k].end; ++i) {
            // L_1 at the small cutoff; the larger cutoff reuses the same beads (common random numbers).
            const std::uint64_t count = rng.poisson(rate);
            double Ls = 0.0, Ll = 0.0;
            for (std::uint64_t j = 0; j < count; ++j) {
                const double len = sample_bead_length(p, o.cutoff_small, kInf, rng);
                Ls += len;
                if (len > o.cutoff_large) Ll += len;
            }
            for (std::size_t m = 0; m < o.lambdas.size(); ++m) {
                s.small[m] += std::exp(-o.lambdas[m] * Ls);
                s.large[m] += std::exp(-o.lambdas[m] * Ll);
            }
        }
        return s;
    };
    return parallel_map(chunks.size(), static_cast<unsigned>(std::max(o.workers, 0)), task);
}

}  // namespace

LaplaceCurve laplace_exponent_curve(double W, double gamma, std::size_t n, std::uint64_t seed,
                                    const LaplaceOptions& o) {
    const double p = thin_exponent(W, gamma);
    std::vector<Chunk> chunks;
    const auto parts = laplace_parts(p, n, seed, o, chunks);
    std::vector<double> small(o.lambdas.size(), 0.0), large(o.lambdas.size(), 0.0);
    for (const auto& part : parts)
        for (std::size_t m = 0; m < o.lambdas.size(); ++m) {
            small[m] += part.small[m];
            large[m] += part.large[m];
        }
    LaplaceCurve c;
    c.lambdas = o.lambdas;
    c.phi_small = log_phi(small, static_cast<double>(n));
    c.phi_large = log_phi(large, static_cast<double>(n));
    c.phi_extrapolated = richardson(c.phi_small, c.phi_large, p, o.cutoff_small, o.cutoff_large);
    return c;
}

LawReport subordinator_exponent_check(double W, double gamma, std::size_t n, std::uint64_t seed,
                                      const LaplaceOptions& o, std::vector<PlotData>* plots) {
    const auto start = std::chrono::steady_clock::now();
    const double p = thin_exponent(W, gamma);
    std::vector<Chunk> chunks;
    const auto parts = laplace_parts(p, n, seed, o, chunks);
    const std::size_t m = o.lambdas.size();
    std::vector<double> small(m, 0.0), large(m, 0.0);
    for (const auto& part : parts)
        for (std::size_t i = 0; i < m; ++i) {
            small[i] += part.small[i];
            large[i] += part.large[i];
        }
    auto slope_from = [&](const std::vector<double>& s, const std::vector<double>& l, double count) {
        return loglog_slope(o.lambdas, richardson(log_phi(s, count), log_phi(l, count), p, o.cutoff_small,
                                                  o.cutoff_large));
    };
    const double slope = slope_from(small, large, static_cast<double>(n));
    const double raw_small = loglog_slope(o.lambdas, log_phi(small, static_cast<double>(n)));

    // Delete-one-chunk jackknife.
    double se = 0.0;
    if (parts.size() >= 2) {
        std::vector<double> reps;
        for (std::size_t k = 0; k < parts.size(); ++k) {
            std::vector<double> s = small, l = large;
            for (std::size_t i = 0; i < m; ++i) {
                s[i] -= parts[k].small[i];
                l[i] -= parts[k].large[i];
            }
            reps.push_back(slope_from(s, l, static_cast<double>(n - (chunks[k].end - chunks[k].begin))));
        }
        double mean = 0.0;
        for (double r : reps) mean += r;
        mean /= static_cast<double>(reps.size());
        double ss = 0.0;
        for (double r : reps) ss += (r - mean) * (r - mean);
        const double g = static_cast<double>(reps.size());
        se = std::sqrt((g - 1.0) / g * ss);
    }

    LawReport r;
    r.name = "subordinator_alpha";
    r.params = {{"W", W}, {"gamma", gamma}, {"cutoff_small", o.cutoff_small}, {"cutoff_large", o.cutoff_large}};
    r.estimate = slope;
    r.std_error = se;
    r.target = 1.0 - p;
    r.tolerance = o.tolerance;
    r.rule = VerdictRule::RelativeTolerance;
    r.n = n;
    r.seed = seed;
    r.extras = {{"slope_small_cutoff_only", raw_small}};
    r.decide();
    if (plots) {
        const auto ps = log_phi(small, static_cast<double>(n)), pl = log_phi(large, static_cast<double>(n));
        const auto pe = richardson(ps, pl, p, o.cutoff_small, o.cutoff_large);
        PlotData d{"laplace_exponent", {"lambda", "phi_small_cutoff", "phi_large_cutoff", "phi_extrapolated"}, {}};
        for (std::size_t i = 0; i < m; ++i) d.rows.push_back({o.lambdas[i], ps[i], pl[i], pe[i]});
        plots->push_back(std::move(d));
    }
    r.runtime_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return r;
}

}  // namespace lqg::beaded
