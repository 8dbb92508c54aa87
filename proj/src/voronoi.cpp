#include "zial/voronoi.hpp"

#include <cmath>
#include <stdexcept>

namespace zial {

std::size_t CellAssignment::occupied_count() const {
    std::size_t n = 0;
    for (const auto& cell : cells)
        if (!cell.empty()) ++n;
    return n;
}

namespace {

double dist2(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw std::invalid_argument("voronoi: prompt dim mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double diff = a[i] - b[i];
        acc += diff * diff;
    }
    return acc;
}

}  // namespace

CellAssignment assign_cells(const MixingMeasure& G, const MixingMeasure& G_star) {
    if (G.size() == 0 || G_star.size() == 0)
        throw std::invalid_argument("assign_cells: both measures must be nonempty");

    CellAssignment out;
    out.cells.assign(G_star.size(), {});
    out.owner_of.assign(G.size(), 0);

    for (std::size_t i = 0; i < G.size(); ++i) {
        std::size_t best = 0;
        double best_d2 = dist2(G.atoms[i].p, G_star.atoms[0].p);
        for (std::size_t j = 1; j < G_star.size(); ++j) {
            const double d2 = dist2(G.atoms[i].p, G_star.atoms[j].p);
            if (d2 < best_d2) {  // strict: ties keep the lowest index
                best_d2 = d2;
                best = j;
            }
        }
        out.owner_of[i] = best;
        out.cells[best].push_back(i);
    }
    return out;
}

LossBreakdown voronoi_loss(const MixingMeasure& G, const MixingMeasure& G_star) {
    const CellAssignment assign = assign_cells(G, G_star);

    LossBreakdown out;
    for (std::size_t j = 0; j < G_star.size(); ++j) {
        const auto& cell = assign.cells[j];
        double cell_weight = 0.0;
        for (std::size_t i : cell) cell_weight += std::exp(G.atoms[i].b);
        out.weight_term += std::fabs(cell_weight - std::exp(G_star.atoms[j].b));

        if (cell.size() == 1) {
            const std::size_t i = cell.front();
            out.linear_term +=
                std::exp(G.atoms[i].b) * std::sqrt(dist2(G.atoms[i].p, G_star.atoms[j].p));
        } else if (cell.size() > 1) {
            for (std::size_t i : cell)
                out.quadratic_term += std::exp(G.atoms[i].b) * dist2(G.atoms[i].p, G_star.atoms[j].p);
        }
    }
    out.total = out.weight_term + out.linear_term + out.quadratic_term;
    return out;
}

}  // namespace zial
