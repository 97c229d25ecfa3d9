#include "lqglab/bessel.hpp"

#include <cmath>

#include "lqglab/errors.hpp"

namespace lqg {

double squared_bessel_step(double x, double dim, double h, Rng& rng) {
    if (!(dim > 0.0)) throw ParameterError("squared Bessel dimension must be positive");
    if (!(h > 0.0)) throw ParameterError("squared Bessel step must be positive");
    const double lambda = std::max(x, 0.0) / h;
    double chi2;
    if (dim >= 1.0) {
        // (N + sqrt(lambda))^2 + central chi^2 with dim-1 degrees of freedom.
        const double z = rng.normal() + std::sqrt(lambda);
        chi2 = z * z;
        if (dim > 1.0) chi2 += 2.0 * rng.gamma(0.5 * (dim - 1.0));
    } else {
        // Poisson mixture of central chi^2 laws.
        const auto k = rng.poisson(0.5 * lambda);
        chi2 = 2.0 * rng.gamma(0.5 * dim + static_cast<double>(k));
    }
    return h * chi2;
}

}  // namespace lqg
