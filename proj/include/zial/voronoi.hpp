#pragma once

#include <vector>

#include "zial/model.hpp"

// Voronoi cells over the true atoms and the three-term parameter loss used
// as the estimation-error metric: weight discrepancy per cell, first-order
// prompt error on singleton cells, second-order on crowded cells.

namespace zial {

struct CellAssignment {
    std::vector<std::vector<std::size_t>> cells;  // per true atom: estimated-atom indices
    std::vector<std::size_t> owner_of;            // per estimated atom: its true-atom index

    std::size_t occupied_count() const;
};

// Each estimated atom joins the cell of its nearest true atom (Euclidean
// distance); ties break to the lowest true-atom index.
CellAssignment assign_cells(const MixingMeasure& G, const MixingMeasure& G_star);

struct LossBreakdown {
    double weight_term = 0.0;
    double linear_term = 0.0;
    double quadratic_term = 0.0;
    double total = 0.0;
};

// D(G, G_star). Empty cells are legal and charge their full weight to the
// weight term.
LossBreakdown voronoi_loss(const MixingMeasure& G, const MixingMeasure& G_star);

}  // namespace zial
