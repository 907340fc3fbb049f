#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "gaze2seg/types.hpp"

namespace g2s {

struct Lesion {
    std::array<int, 3> center_voxel{};   // (x, y, z)
    std::array<double, 3> radii_mm{};    // per axis
    double contrast = 0.0;               // added to background inside the lesion
};

struct PhantomSpec {
    int nx = 64, ny = 64, nz = 8;
    double sx = 1.0, sy = 1.0, sz = 1.0;
    std::vector<Lesion> lesions;
    double background = 0.0;
    double noise_sigma = 0.0;
    std::uint64_t rng_seed = 0;
};

enum class GazePattern { Driller, Scanner };

struct FixationTarget {
    int slice = 0;
    Point2 xy;          // stimulus pixels
    double dwell_ms = 0.0;
};

struct GazeSimSpec {
    GazePattern pattern = GazePattern::Scanner;
    std::vector<FixationTarget> fixation_targets;
    double jitter_sigma_mm = 1.5;
    double sample_rate_hz = 60.0;
    std::uint64_t rng_seed = 0;
};

struct Phantom {
    Volume volume;
    LabelMask mask;  // exact ellipsoid indicator
};

struct SimulatedGaze {
    std::string gaze_csv;    // ingest gaze-log format
    std::string viewer_csv;  // ingest viewer-log format
};

// Ellipsoidal lesions on a constant background with seeded Gaussian noise.
// Overlapping lesions are rejected.
Phantom make_phantom(const PhantomSpec& spec);

// 60 Hz samples with Gaussian jitter around each fixation target, plus
// slice_change viewer events. The driller pattern inserts brief visits to
// adjacent slices between targets; the scanner stays within a slice.
SimulatedGaze make_gaze(const GazeSimSpec& spec, const PhantomSpec& phantom);

}  // namespace g2s
