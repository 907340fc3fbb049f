#include "gaze2seg/seeding.hpp"

#include <algorithm>
#include <cmath>

#include "gaze2seg/errors.hpp"

namespace g2s {

Grid2 gradient_magnitude(const Grid2& img, double sx_mm, double sy_mm) {
    const int w = img.width, h = img.height;
    Grid2 out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double gx, gy;
            if (w == 1)
                gx = 0.0;
            else if (x == 0)
                gx = (img.at(1, y) - img.at(0, y)) / sx_mm;
            else if (x == w - 1)
                gx = (img.at(w - 1, y) - img.at(w - 2, y)) / sx_mm;
            else
                gx = (img.at(x + 1, y) - img.at(x - 1, y)) / (2.0 * sx_mm);
            if (h == 1)
                gy = 0.0;
            else if (y == 0)
                gy = (img.at(x, 1) - img.at(x, 0)) / sy_mm;
            else if (y == h - 1)
                gy = (img.at(x, h - 1) - img.at(x, h - 2)) / sy_mm;
            else
                gy = (img.at(x, y + 1) - img.at(x, y - 1)) / (2.0 * sy_mm);
            out.at(x, y) = static_cast<float>(std::hypot(gx, gy));
        }
    }
    return out;
}

PixelCoord select_fg_seed(const AttentionRegion& region, const SaliencyMap& smap,
                          double pixel_pitch_mm) {
    const double radius_px = region.radius_mm / pixel_pitch_mm;
    const WindowRect& win = smap.window;
    bool found = false;
    float best = 0.f;
    PixelCoord best_px{};
    for (int y = 0; y < win.height; ++y) {
        for (int x = 0; x < win.width; ++x) {
            const double dx = (win.x0 + x) - region.center.x;
            const double dy = (win.y0 + y) - region.center.y;
            if (dx * dx + dy * dy > radius_px * radius_px) continue;
            const float s = smap.values.at(x, y);
            if (!found || s > best) {
                found = true;
                best = s;
                best_px = {win.x0 + x, win.y0 + y};
            }
        }
    }
    if (!found) throw ValidationError("attention disk does not intersect the saliency window");
    return best_px;
}

double gradient_threshold(const Grid2& grad, const WindowRect& window, double quantile) {
    std::vector<float> vals;
    vals.reserve(static_cast<std::size_t>(window.width) * window.height);
    for (int y = window.y0; y < window.y0 + window.height; ++y)
        for (int x = window.x0; x < window.x0 + window.width; ++x)
            vals.push_back(grad.at(x, y));
    if (vals.empty()) throw ValidationError("gradient_threshold: empty window");
    std::sort(vals.begin(), vals.end());
    const std::size_t idx =
        static_cast<std::size_t>(std::floor(quantile * (vals.size() - 1)));
    // Strong edges occupy well under 1 - quantile of a typical window, so the
    // quantile alone sits inside the noise distribution; the half-max floor
    // keeps isolated noise peaks from counting as boundaries.
    return std::max<double>(vals[idx], 0.5 * vals.back());
}

std::vector<PixelCoord> select_bg_seeds(const PixelCoord& fg, const Grid2& grad, double t_g,
                                        double sx_mm, double sy_mm, const SeedingParams& params) {
    const int w = grad.width, h = grad.height;
    struct Dir {
        int dx, dy;
        double step_mm;
    };
    const Dir dirs[4] = {{+1, 0, sx_mm}, {-1, 0, sx_mm}, {0, +1, sy_mm}, {0, -1, sy_mm}};

    std::vector<PixelCoord> seeds;
    for (const Dir& d : dirs) {
        const int max_steps = static_cast<int>(std::floor(params.max_radius_mm / d.step_mm));
        double peak = 0.0;
        for (int step = 1; step <= max_steps; ++step) {
            const int x = fg.x + d.dx * step;
            const int y = fg.y + d.dy * step;
            if (x < 0 || x >= w || y < 0 || y >= h) break;
            const double g = grad.at(x, y);
            peak = std::max(peak, g);
            if (peak > t_g && g < params.drop_fraction * peak) {
                const int bx = std::clamp(x + d.dx * params.bg_margin_px, 0, w - 1);
                const int by = std::clamp(y + d.dy * params.bg_margin_px, 0, h - 1);
                seeds.push_back({bx, by});
                break;
            }
        }
    }
    if (seeds.empty())
        throw NoBoundaryFound("no gradient boundary on any of the four rays from (" +
                              std::to_string(fg.x) + "," + std::to_string(fg.y) + ")");
    return seeds;
}

}  // namespace g2s
