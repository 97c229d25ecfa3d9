#pragma once

#include <functional>
#include <vector>

namespace lqg {

// Values with nonnegative importance weights (default weight 1).
struct EmpiricalSample {
    std::vector<double> values;
    std::vector<double> weights;

    void add(double v, double w = 1.0) {
        values.push_back(v);
        weights.push_back(w);
    }
    std::size_t size() const { return values.size(); }
    double total_weight() const;
    // (sum w)^2 / sum w^2
    double effective_n() const;
    void validate() const;
};

EmpiricalSample unweighted(std::vector<double> values);

struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
    double n_eff = 0.0;
};

// Asymptotic Kolmogorov survival function Q(lambda) = 2 sum (-1)^{k-1} exp(-2 k^2 lambda^2).
double kolmogorov_survival(double lambda);

KsResult ks_one_sample(const EmpiricalSample& sample, const std::function<double(double)>& cdf);
KsResult ks_two_sample(const EmpiricalSample& a, const EmpiricalSample& b);

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_se = 0.0;
};

// Weighted least squares of y on x.
LinearFit weighted_linear_fit(const std::vector<double>& x, const std::vector<double>& y,
                              const std::vector<double>& w);

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
};

MeanSe mean_and_se(const std::vector<double>& v);

}  // namespace lqg
