#include "lqglab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lqglab/errors.hpp"

namespace lqg {

double EmpiricalSample::total_weight() const { return std::accumulate(weights.begin(), weights.end(), 0.0); }

double EmpiricalSample::effective_n() const {
    double s = 0.0, s2 = 0.0;
    for (double w : weights) {
        s += w;
        s2 += w * w;
    }
    return s2 > 0.0 ? s * s / s2 : 0.0;
}

void EmpiricalSample::validate() const {
    if (values.size() != weights.size()) throw ParameterError("sample values and weights differ in length");
    for (double w : weights)
        if (!(w >= 0.0) || !std::isfinite(w)) throw ParameterError("sample weights must be finite and nonnegative");
}

EmpiricalSample unweighted(std::vector<double> values) {
    EmpiricalSample s;
    s.weights.assign(values.size(), 1.0);
    s.values = std::move(values);
    return s;
}

double kolmogorov_survival(double lambda) {
    if (lambda < 0.2) return 1.0;
    double sum = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        sum += (k % 2 == 1 ? term : -term);
        if (term < 1e-300) break;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

namespace {

constexpr double kMinEffective = 30.0;

struct Sorted {
    std::vector<double> v;
    std::vector<double> w;  // normalized
};

Sorted sorted_normalized(const EmpiricalSample& s) {
    s.validate();
    std::vector<std::size_t> idx(s.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return s.values[a] < s.values[b]; });
    const double total = s.total_weight();
    if (!(total > 0.0)) throw InsufficientDataError("sample has zero total weight");
    Sorted out;
    out.v.reserve(idx.size());
    out.w.reserve(idx.size());
    for (auto i : idx) {
        out.v.push_back(s.values[i]);
        out.w.push_back(s.weights[i] / total);
    }
    return out;
}

double p_from_statistic(double d, double n) {
    const double rn = std::sqrt(n);
    return kolmogorov_survival((rn + 0.12 + 0.11 / rn) * d);
}

}  // namespace

KsResult ks_one_sample(const EmpiricalSample& sample, const std::function<double(double)>& cdf) {
    const double n_eff = sample.effective_n();
    if (n_eff < kMinEffective) throw InsufficientDataError("KS needs at least 30 effective samples");
    const Sorted s = sorted_normalized(sample);
    double d = 0.0, acc = 0.0;
    for (std::size_t i = 0; i < s.v.size();) {
        std::size_t j = i;
        double below = acc;
        while (j < s.v.size() && s.v[j] == s.v[i]) acc += s.w[j++];
        const double f = cdf(s.v[i]);
        d = std::max({d, std::abs(f - below), std::abs(acc - f)});
        i = j;
    }
    return {d, p_from_statistic(d, n_eff), n_eff};
}

KsResult ks_two_sample(const EmpiricalSample& a, const EmpiricalSample& b) {
    const double na = a.effective_n(), nb = b.effective_n();
    if (na < kMinEffective || nb < kMinEffective) throw InsufficientDataError("KS needs at least 30 effective samples");
    const Sorted sa = sorted_normalized(a), sb = sorted_normalized(b);
    std::size_t i = 0, j = 0;
    double fa = 0.0, fb = 0.0, d = 0.0;
    while (i < sa.v.size() || j < sb.v.size()) {
        double x;
        if (j >= sb.v.size() || (i < sa.v.size() && sa.v[i] <= sb.v[j]))
            x = sa.v[i];
        else
            x = sb.v[j];
        while (i < sa.v.size() && sa.v[i] == x) fa += sa.w[i++];
        while (j < sb.v.size() && sb.v[j] == x) fb += sb.w[j++];
        d = std::max(d, std::abs(fa - fb));
    }
    const double n = na * nb / (na + nb);
    return {d, p_from_statistic(d, n), n};
}

LinearFit weighted_linear_fit(const std::vector<double>& x, const std::vector<double>& y,
                              const std::vector<double>& w) {
    if (x.size() != y.size() || x.size() != w.size() || x.size() < 2)
        throw InsufficientDataError("linear fit needs at least two points");
    double sw = 0, sx = 0, sy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sw += w[i];
        sx += w[i] * x[i];
        sy += w[i] * y[i];
    }
    const double mx = sx / sw, my = sy / sw;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += w[i] * (x[i] - mx) * (x[i] - mx);
        sxy += w[i] * (x[i] - mx) * (y[i] - my);
    }
    if (!(sxx > 0.0)) throw InsufficientDataError("linear fit needs distinct abscissae");
    LinearFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    // inverse-variance weights: se^2 = 1 / sxx
    f.slope_se = std::sqrt(1.0 / sxx);
    return f;
}

MeanSe mean_and_se(const std::vector<double>& v) {
    MeanSe r;
    if (v.empty()) return r;
    double s = 0.0;
    for (double x : v) s += x;
    r.mean = s / static_cast<double>(v.size());
    if (v.size() < 2) return r;
    double ss = 0.0;
    for (double x : v) ss += (x - r.mean) * (x - r.mean);
    r.se = std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
    return r;
}

}  // namespace lqg
