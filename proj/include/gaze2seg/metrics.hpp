#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gaze2seg/types.hpp"

namespace g2s {

struct RegionScore {
    int region_rank = 0;
    int slice = 0;
    double dsc = 0.0;
    std::optional<double> hd_mm;  // absent when either mask side is empty
};

struct EvalReport {
    double dsc = 0.0;
    std::optional<double> hd_mm;
    std::vector<RegionScore> per_region;
    std::size_t pred_count = 0;
    std::size_t ref_count = 0;
    std::size_t intersection_count = 0;
    bool slices_restricted = false;  // 3D reference compared on predicted slices only
    std::vector<std::string> notes;
};

// 2|A∩B| / (|A|+|B|); both empty -> 1.
double dice(const LabelMask& a, const LabelMask& b);

// Exact symmetric Hausdorff distance between boundary voxel centers, Euclidean
// with anisotropic spacing. Boundary = positive voxel with a negative or
// out-of-bounds in-plane 4-neighbor. Errors on empty masks.
double hausdorff_mm(const LabelMask& a, const LabelMask& b);

// Restrict a mask to the given slices (all other slices zeroed).
LabelMask restrict_to_slices(const LabelMask& mask, const std::vector<int>& slices);

}  // namespace g2s
