#pragma once

#include <vector>

#include "gaze2seg/seeding.hpp"
#include "gaze2seg/types.hpp"

namespace g2s {

struct RwParams {
    double beta = 90.0;         // contrast parameter on [0,1]-normalized intensities
    double cg_tolerance = 1e-8;
    int max_iters = 0;          // 0 means 10 * number of unknowns
    double crop_margin_mm = 15.0;
};

// 4-connected pixel lattice; weights w = exp(-beta * (I_i - I_j)^2).
struct LatticeGraph {
    int width = 0;
    int height = 0;
    std::vector<double> wx;  // (width-1)*height horizontal edges, index y*(width-1)+x
    std::vector<double> wy;  // width*(height-1) vertical edges, index y*width+x

    double horiz(int x, int y) const { return wx[static_cast<std::size_t>(y) * (width - 1) + x]; }
    double vert(int x, int y) const { return wy[static_cast<std::size_t>(y) * width + x]; }
};

struct SolveStats {
    int iterations = 0;
    double residual = 0.0;
};

// Double-precision field for solver output; Grid2's float storage is coarser
// than cg_tolerance.
struct ProbField {
    int width = 0;
    int height = 0;
    std::vector<double> values;

    ProbField() = default;
    ProbField(int w, int h) : width(w), height(h), values(static_cast<std::size_t>(w) * h, 0.0) {}

    double at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
    double& at(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }
    std::size_t size() const { return values.size(); }
};

struct RwResult {
    ProbField probabilities;  // chance of reaching a FG seed first, seeds pinned to 1/0
    std::vector<std::uint8_t> mask;  // 0.5 superlevel set, same layout as probabilities
    SolveStats stats;
};

LatticeGraph build_lattice(const Grid2& window_image, const RwParams& params);

// Combinatorial Dirichlet solve: Jacobi-preconditioned CG on the unseeded
// block of the lattice Laplacian. Seeds are in window-local coordinates.
RwResult solve_dirichlet(const LatticeGraph& graph, const SeedSet& seeds, const RwParams& params);

// Crop to the seed bounding box + margin, solve, threshold at 0.5 (ties to
// foreground), keep only the connected component containing the FG seed, and
// paste back into a full-slice mask.
Grid2 segment_region(const Grid2& slice_image, const SeedSet& seeds, double sx_mm, double sy_mm,
                     const RwParams& params, SolveStats* stats = nullptr);

}  // namespace g2s
