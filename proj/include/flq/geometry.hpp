#pragma once

#include <string>
#include <vector>

#include "flq/measure.hpp"
#include "flq/models.hpp"

namespace flq {

// Depth-n cylinder cover of a base-p Cantor set: left endpoints as integers
// in base p (cell i covers [i p^-n, (i+1) p^-n)).
struct CantorCells {
    int base = 3;
    int depth = 0;
    std::vector<long long> cells; // sorted distinct

    double scale() const;
};

CantorCells cantor_cells(int p, const std::vector<int>& digits, int n,
                         std::size_t cell_cap = (std::size_t)1 << 24);

// Axis-aligned square cells at a common side length.
struct CellSet2D {
    double scale = 1.0; // cell side
    double origin_x = 0.0, origin_y = 0.0;
    std::vector<std::pair<long long, long long>> cells; // sorted distinct
};

// Number of eps-grid cells meeting both the cover of A and the cover of
// t B + u. Cell scales of A and B must not exceed eps.
long long intersect_affine(const CantorCells& a, const CantorCells& b, double t, double u,
                           double eps);
// Independent rasterization of the same count (per-cell membership tests).
long long intersect_affine_oracle(const CantorCells& a, const CantorCells& b, double t, double u,
                                  double eps);

// Least-squares exponent of N against 1/eps on log scales, fitted over the
// finest half of the grid. r^2 < 0.9 flags the estimate as unstable.
struct ExponentFit {
    double slope = 0.0;
    double r2 = 0.0;
    bool unstable = false;
};
ExponentFit exponent_fit(const std::vector<std::pair<double, long long>>& counts);

// Depth-n cylinder cover of the attractor of {lambda R_alpha x + t_i}: cells
// of side lambda^n * W (W the attractor bounding-box side), each cylinder
// contributing the cells met by its bounding box.
CellSet2D planar_attractor(double lambda, double alpha,
                           const std::vector<std::pair<double, double>>& translations, int n,
                           std::size_t cell_cap = (std::size_t)1 << 24);

// Product cover A x B (same base and depth).
CellSet2D product_cells(const CantorCells& a, const CantorCells& b);

// Number of eps-cells meeting both the cell set and the closed
// eps-neighborhood of the line {p : <p, direction> = offset}.
long long slice_count(const CellSet2D& cells, double dir_x, double dir_y, double offset,
                      double eps);
long long slice_count_oracle(const CellSet2D& cells, double dir_x, double dir_y, double offset,
                             double eps);

// 1D image of planar atoms under p -> <p, direction>, masses preserved.
AtomicMeasure project_measure(const std::vector<PlanarAtom>& atoms, double dir_x, double dir_y);

// Covering counts of A + B over an eps grid, plus the fitted exponent.
struct SumsetDimension {
    std::vector<std::pair<double, long long>> counts;
    ExponentFit fit;
};
SumsetDimension sumset_dimension(const CantorCells& a, const CantorCells& b,
                                 const std::vector<double>& eps_grid);

} // namespace flq
