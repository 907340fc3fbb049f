#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace g2s {

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

inline bool operator==(const Point2& a, const Point2& b) { return a.x == b.x && a.y == b.y; }

struct PixelCoord {
    int x = 0;
    int y = 0;
};

inline bool operator==(const PixelCoord& a, const PixelCoord& b) { return a.x == b.x && a.y == b.y; }

// One eye-tracker measurement. scene_xy is in scene-video pixels, stim_xy in
// stimulus (image) pixels after calibration mapping.
struct GazeSample {
    std::int64_t t_ms = 0;
    Point2 scene_xy;
    Point2 stim_xy;
    std::optional<double> pupil_mm;
    std::optional<int> slice;
    bool off_screen = false;
};

struct GazeTrace {
    std::vector<GazeSample> samples;
    std::size_t flagged_off_screen = 0;
};

enum class ViewerEventKind { SliceChange, WindowLevel, Click };

struct ViewerEvent {
    std::int64_t t_ms = 0;
    ViewerEventKind kind = ViewerEventKind::SliceChange;
    std::optional<int> slice;
    std::string payload;
};

enum class ScalarType { U8, I16, F32 };

struct Volume {
    int nx = 0, ny = 0, nz = 0;
    double sx = 1.0, sy = 1.0, sz = 1.0;  // mm per voxel
    ScalarType dtype = ScalarType::F32;
    std::vector<float> intensities;  // index = (z*ny + y)*nx + x

    float at(int x, int y, int z) const {
        return intensities[(static_cast<std::size_t>(z) * ny + y) * nx + x];
    }
    float& at(int x, int y, int z) {
        return intensities[(static_cast<std::size_t>(z) * ny + y) * nx + x];
    }
    std::size_t voxel_count() const {
        return static_cast<std::size_t>(nx) * ny * nz;
    }
};

struct LabelMask {
    int nx = 0, ny = 0, nz = 0;
    double sx = 1.0, sy = 1.0, sz = 1.0;
    std::vector<std::uint8_t> values;

    std::uint8_t at(int x, int y, int z) const {
        return values[(static_cast<std::size_t>(z) * ny + y) * nx + x];
    }
    std::uint8_t& at(int x, int y, int z) {
        return values[(static_cast<std::size_t>(z) * ny + y) * nx + x];
    }
    std::size_t voxel_count() const {
        return static_cast<std::size_t>(nx) * ny * nz;
    }
    bool dims_match(const LabelMask& o) const {
        return nx == o.nx && ny == o.ny && nz == o.nz;
    }
};

// Plane-projective scene -> stimulus map, row-major 3x3.
struct SceneToStimulusTransform {
    std::array<double, 9> h = {1, 0, 0, 0, 1, 0, 0, 0, 1};

    Point2 apply(const Point2& p) const {
        const double w = h[6] * p.x + h[7] * p.y + h[8];
        return {(h[0] * p.x + h[1] * p.y + h[2]) / w,
                (h[3] * p.x + h[4] * p.y + h[5]) / w};
    }
    double det() const {
        return h[0] * (h[4] * h[8] - h[5] * h[7]) - h[1] * (h[3] * h[8] - h[5] * h[6]) +
               h[2] * (h[3] * h[7] - h[4] * h[6]);
    }
    SceneToStimulusTransform inverse() const;
};

// Single-slice scalar field, index = y*width + x.
struct Grid2 {
    int width = 0;
    int height = 0;
    std::vector<float> values;

    Grid2() = default;
    Grid2(int w, int h, float fill = 0.f)
        : width(w), height(h), values(static_cast<std::size_t>(w) * h, fill) {}

    float at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
    float& at(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }
    std::size_t size() const { return values.size(); }
};

// Axis-aligned window in slice pixel coordinates, [x0, x0+width) x [y0, y0+height).
struct WindowRect {
    int x0 = 0;
    int y0 = 0;
    int width = 0;
    int height = 0;
};

Grid2 extract_slice(const Volume& vol, int z);

}  // namespace g2s
