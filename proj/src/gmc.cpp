#include "lqglab/gmc.hpp"

#include <algorithm>
#include <cmath>

#include "lqglab/errors.hpp"

namespace lqg::gmc {

double pairwise_sum(const double* data, std::size_t n) {
    if (n <= 16) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += data[i];
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(data, half) + pairwise_sum(data + half, n - half);
}

BoundaryMeasure boundary_measure(const field::FieldSample& f, Side side) {
    if (f.domain() != field::Domain::Strip) throw ParameterError("cylinder surfaces have no boundary");
    const double g = f.params.gamma;
    const double dx = f.grid.dt();
    const double scale = std::pow(dx, 1.0 + g * g / 4.0);
    const int row = side == Side::Lower ? 0 : f.grid.ny - 1;
    BoundaryMeasure m;
    m.side = side;
    m.x0 = -f.grid.t_cut;
    m.dx = dx;
    m.cell_masses.resize(f.grid.nx);
    for (int i = 0; i < f.grid.nx; ++i) m.cell_masses[i] = std::exp(0.5 * g * f.value(i, row)) * scale;
    m.total = pairwise_sum(m.cell_masses.data(), m.cell_masses.size());
    return m;
}

AreaMeasure area_measure(const field::FieldSample& f) {
    const double g = f.params.gamma;
    const double dx = f.grid.dt();
    const double da = dx * f.grid.dy(f.domain());
    const double scale = da * std::pow(dx, g * g / 2.0);
    AreaMeasure m;
    m.nx = f.grid.nx;
    m.ny = f.grid.ny;
    m.cell_masses.resize(static_cast<std::size_t>(m.nx) * m.ny);
    for (int i = 0; i < m.nx; ++i)
        for (int j = 0; j < m.ny; ++j)
            m.cell_masses[static_cast<std::size_t>(i) * m.ny + j] = std::exp(g * f.value(i, j)) * scale;
    m.total = pairwise_sum(m.cell_masses.data(), m.cell_masses.size());
    return m;
}

field::FieldSample add_constant(field::FieldSample f, double c) {
    f.c_const += c;
    return f;
}

double arc_length(const BoundaryMeasure& m, double a, double b) {
    if (!(b > a)) return 0.0;
    const double lo = m.x0;
    const double hi = m.x0 + m.dx * static_cast<double>(m.cell_masses.size());
    if (a < lo - 1e-12 * m.dx || b > hi + 1e-12 * m.dx)
        throw ParameterError("arc_length interval leaves the truncated domain");
    a = std::max(a, lo);
    b = std::min(b, hi);
    const auto n = static_cast<long>(m.cell_masses.size());
    const long first = std::clamp(static_cast<long>(std::floor((a - lo) / m.dx)), 0L, n - 1);
    const long last = std::clamp(static_cast<long>(std::ceil((b - lo) / m.dx)) - 1, 0L, n - 1);
    if (first == 0 && last == n - 1 && a == lo && b == hi) return m.total;
    std::vector<double> parts;
    parts.reserve(static_cast<std::size_t>(last - first + 1));
    for (long i = first; i <= last; ++i) {
        const double c0 = lo + i * m.dx, c1 = c0 + m.dx;
        const double cover = std::max(0.0, std::min(b, c1) - std::max(a, c0)) / m.dx;
        parts.push_back(cover >= 1.0 ? m.cell_masses[i] : cover * m.cell_masses[i]);
    }
    return pairwise_sum(parts.data(), parts.size());
}

}  // namespace lqg::gmc
