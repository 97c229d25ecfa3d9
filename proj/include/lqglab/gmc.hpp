#pragma once

#include <vector>

#include "lqglab/field.hpp"

namespace lqg::gmc {

enum class Side { Lower, Upper };

struct BoundaryMeasure {
    Side side = Side::Lower;
    double x0 = 0.0;  // left edge of the first cell
    double dx = 0.0;
    std::vector<double> cell_masses;
    double total = 0.0;

    double cell_left(std::size_t i) const { return x0 + static_cast<double>(i) * dx; }
};

struct AreaMeasure {
    int nx = 0;
    int ny = 0;
    std::vector<double> cell_masses;  // row-major over (i, j)
    double total = 0.0;
};

// e^{(gamma/2) h} dx renormalized at the cell scale: cell mass = e^{(gamma/2) hbar} dx^{1 + gamma^2/4}.
BoundaryMeasure boundary_measure(const field::FieldSample& f, Side side);

// e^{gamma h} d^2z renormalized at the cell scale: cell mass = e^{gamma hbar} dA dx^{gamma^2/2}.
AreaMeasure area_measure(const field::FieldSample& f);

field::FieldSample add_constant(field::FieldSample f, double c);

// Mass of [a, b] with linear pro-rating of partially covered cells.
double arc_length(const BoundaryMeasure& m, double a, double b);

// Pairwise (cascade) summation.
double pairwise_sum(const double* data, std::size_t n);

}  // namespace lqg::gmc
