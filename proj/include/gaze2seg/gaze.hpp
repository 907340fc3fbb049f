#pragma once

#include <cstdint>
#include <vector>

#include "gaze2seg/types.hpp"

namespace g2s {

constexpr double kNominalFramePeriodMs = 1000.0 / 60.0;

struct GazeParams {
    double epsilon_mm = 7.5;      // same-attention-region neighborhood radius
    double t_hat_ms = 500.0;      // dwell threshold below which glances are dropped
    double pixel_pitch_mm = 1.0;  // in-plane stimulus mm per pixel
};

struct StabilizedPoint {
    Point2 stim_xy;
    int slice = 0;
    double dwell_ms = 0.0;
    std::int64_t t_first_ms = 0;
    int merged_samples = 0;
};

struct AttentionRegion {
    Point2 center;
    int slice = 0;
    double radius_mm = 0.0;
    double attention = 0.0;
    std::int64_t t_first_ms = 0;
};

struct AttentionMap {
    int slice = 0;
    Grid2 values;  // per-pixel a(u), max over covering region disks
    std::vector<AttentionRegion> regions;
};

// Jitter removal: reverse pass collapsing each within-epsilon run onto its
// final fixation point; runs merge into dwell-weighted points. Per-slice
// subtraces are handled independently; cross-slice samples never merge.
std::vector<StabilizedPoint> stabilize_trace(const GazeTrace& trace, const GazeParams& params);

// Piece-wise linear attention value: (t - t_hat)/(t_max - t_hat) for t > t_hat,
// 0 otherwise.
double attention_value(double t_ms, double t_hat_ms, double t_max_ms);

// t_max is taken over all slices of `points` so attention is comparable
// between slices. Points with zero attention produce no region.
AttentionMap build_attention_map(const std::vector<StabilizedPoint>& points, int slice,
                                 const GazeParams& params, int width, int height);

// All regions sorted by attention desc; ties by t_first_ms, slice, row-major center.
std::vector<AttentionRegion> rank_regions(const std::vector<AttentionMap>& maps);

}  // namespace g2s
