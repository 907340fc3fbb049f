#pragma once

#include <span>
#include <string>
#include <vector>

#include "gaze2seg/types.hpp"

namespace g2s {

struct SaliencyParams {
    int patch_size = 7;          // odd, >= 3
    int k_patches = 64;          // K most similar patches per pixel
    double lambda = 3.0;         // position weight in the patch distance
    std::vector<double> scales = {1.0, 0.8, 0.5, 0.3};
    double foci_threshold = 0.8;  // quantile above which a pixel is a focus
    double window_margin_mm = 20.0;
    int num_threads = 1;
};

struct SaliencyMap {
    WindowRect window;
    Grid2 values;                 // refined S_hat in [0,1]
    Grid2 sbar;                   // multi-scale average, kept for inspection
    std::vector<Grid2> per_scale; // one field per scale actually computed
    std::vector<double> scales_used;
    std::vector<double> scales_skipped;
};

// d(p_u, p_v) = d_intensity / (1 + lambda * d_position). Intensities must be
// pre-normalized to [0,1]; positions normalized so the window diagonal is 1.
double patch_distance(std::span<const float> patch_u, std::span<const float> patch_v,
                      const Point2& pos_u, const Point2& pos_v, double lambda);

// Min-max normalization of a window; constant windows become all zeros.
Grid2 normalize_window(const Grid2& window);

// Area-weighted downsampling by factor `scale` in (0,1].
Grid2 resample_area(const Grid2& image, double scale);

// S_u^r = 1 - exp(-avg of the K smallest patch distances), computed at scale r
// and bilinearly upsampled back to window resolution. Throws ValidationError
// when the scaled window cannot hold one patch.
Grid2 single_scale_saliency(const Grid2& normalized_window, double scale,
                            const SaliencyParams& params);

// Mean of per-scale fields over the scales that fit; errors when none does.
SaliencyMap multi_scale_saliency(const Grid2& window, const SaliencyParams& params);

// Gestalt refinement: S_hat = Sbar * (1 - d_foci), d_foci normalized by the
// window diagonal. Fills `values` of the map in place.
void refine_with_foci(SaliencyMap& map, const SaliencyParams& params);

// Argmax of the refined map; ties broken row-major (smallest y, then x).
PixelCoord most_salient_pixel(const SaliencyMap& map);

}  // namespace g2s
