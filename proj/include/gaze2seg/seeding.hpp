#pragma once

#include <vector>

#include "gaze2seg/gaze.hpp"
#include "gaze2seg/saliency.hpp"
#include "gaze2seg/types.hpp"

namespace g2s {

struct SeedingParams {
    double max_radius_mm = 30.0;      // ray search cap
    double gradient_quantile = 0.9;   // T_g = this quantile of window gradients
    double drop_fraction = 0.5;       // boundary passed when grad < fraction * peak
    int bg_margin_px = 2;             // seed offset past the detected boundary
};

struct SeedSet {
    std::vector<PixelCoord> fg;
    std::vector<PixelCoord> bg;
    int slice = 0;
};

// Per-pixel gradient magnitude, intensity per millimeter. Central differences
// interior, one-sided at borders.
Grid2 gradient_magnitude(const Grid2& slice_image, double sx_mm, double sy_mm);

// Most salient pixel restricted to the attention region disk.
PixelCoord select_fg_seed(const AttentionRegion& region, const SaliencyMap& smap,
                          double pixel_pitch_mm);

// T_g: quantile of gradient magnitudes inside `window`, floored at half the
// window's maximum so sparse strong edges dominate broad noise.
double gradient_threshold(const Grid2& grad, const WindowRect& window, double quantile);

// Walk the four axis rays from fg; a boundary is passed once the running peak
// gradient exceeded T_g and the magnitude fell below drop_fraction * peak.
// Throws NoBoundaryFound when no ray detects a boundary.
std::vector<PixelCoord> select_bg_seeds(const PixelCoord& fg, const Grid2& grad, double t_g,
                                        double sx_mm, double sy_mm, const SeedingParams& params);

}  // namespace g2s
