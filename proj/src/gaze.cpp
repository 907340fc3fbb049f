#include "gaze2seg/gaze.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace g2s {

namespace {

std::vector<StabilizedPoint> stabilize_subtrace(const std::vector<const GazeSample*>& samples,
                                                int slice, const GazeParams& params) {
    const std::size_t n = samples.size();
    std::vector<Point2> pos(n);
    for (std::size_t i = 0; i < n; ++i) pos[i] = samples[i]->stim_xy;

    const double eps_px = params.epsilon_mm / params.pixel_pitch_mm;
    // Reverse pass: g(i) := g(i+1) whenever the pair is within epsilon, so each
    // cluster collapses onto its final fixation point.
    for (std::size_t i = n; i-- > 1;) {
        const double dx = pos[i - 1].x - pos[i].x;
        const double dy = pos[i - 1].y - pos[i].y;
        if (std::hypot(dx, dy) <= eps_px) pos[i - 1] = pos[i];
    }

    std::vector<StabilizedPoint> out;
    std::size_t run_start = 0;
    while (run_start < n) {
        std::size_t run_end = run_start + 1;
        while (run_end < n && pos[run_end] == pos[run_start]) ++run_end;
        StabilizedPoint p;
        p.stim_xy = pos[run_start];
        p.slice = slice;
        p.t_first_ms = samples[run_start]->t_ms;
        p.merged_samples = static_cast<int>(run_end - run_start);
        if (run_end < n) {
            p.dwell_ms = static_cast<double>(samples[run_end]->t_ms - samples[run_start]->t_ms);
        } else {
            p.dwell_ms = static_cast<double>(samples[n - 1]->t_ms - samples[run_start]->t_ms) +
                         kNominalFramePeriodMs;
        }
        out.push_back(p);
        run_start = run_end;
    }
    return out;
}

}  // namespace

std::vector<StabilizedPoint> stabilize_trace(const GazeTrace& trace, const GazeParams& params) {
    std::map<int, std::vector<const GazeSample*>> by_slice;
    for (const auto& s : trace.samples) {
        if (s.off_screen) continue;
        by_slice[s.slice.value_or(0)].push_back(&s);
    }
    std::vector<StabilizedPoint> out;
    for (const auto& [slice, samples] : by_slice) {
        auto pts = stabilize_subtrace(samples, slice, params);
        out.insert(out.end(), pts.begin(), pts.end());
    }
    return out;
}

double attention_value(double t_ms, double t_hat_ms, double t_max_ms) {
    if (!(t_ms > t_hat_ms)) return 0.0;
    if (t_max_ms <= t_hat_ms) return 0.0;
    const double a = (t_ms - t_hat_ms) / (t_max_ms - t_hat_ms);
    return std::min(a, 1.0);
}

AttentionMap build_attention_map(const std::vector<StabilizedPoint>& points, int slice,
                                 const GazeParams& params, int width, int height) {
    AttentionMap map;
    map.slice = slice;
    map.values = Grid2(width, height, 0.f);

    double t_max = 0.0;
    for (const auto& p : points) t_max = std::max(t_max, p.dwell_ms);
    if (t_max <= params.t_hat_ms) return map;  // all-zero map, no regions

    for (const auto& p : points) {
        if (p.slice != slice) continue;
        const double a = attention_value(p.dwell_ms, params.t_hat_ms, t_max);
        if (a <= 0.0) continue;
        AttentionRegion r;
        r.center = p.stim_xy;
        r.slice = slice;
        r.radius_mm = params.epsilon_mm;
        r.attention = a;
        r.t_first_ms = p.t_first_ms;
        map.regions.push_back(r);
    }

    const double radius_px = params.epsilon_mm / params.pixel_pitch_mm;
    for (const auto& r : map.regions) {
        const int x0 = std::max(0, static_cast<int>(std::floor(r.center.x - radius_px)));
        const int x1 = std::min(width - 1, static_cast<int>(std::ceil(r.center.x + radius_px)));
        const int y0 = std::max(0, static_cast<int>(std::floor(r.center.y - radius_px)));
        const int y1 = std::min(height - 1, static_cast<int>(std::ceil(r.center.y + radius_px)));
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                const double dx = x - r.center.x;
                const double dy = y - r.center.y;
                if (dx * dx + dy * dy <= radius_px * radius_px)
                    map.values.at(x, y) = std::max(map.values.at(x, y),
                                                   static_cast<float>(r.attention));
            }
        }
    }
    return map;
}

std::vector<AttentionRegion> rank_regions(const std::vector<AttentionMap>& maps) {
    std::vector<AttentionRegion> all;
    for (const auto& m : maps) all.insert(all.end(), m.regions.begin(), m.regions.end());
    std::stable_sort(all.begin(), all.end(), [](const AttentionRegion& a, const AttentionRegion& b) {
        if (a.attention != b.attention) return a.attention > b.attention;
        if (a.t_first_ms != b.t_first_ms) return a.t_first_ms < b.t_first_ms;
        if (a.slice != b.slice) return a.slice < b.slice;
        if (a.center.y != b.center.y) return a.center.y < b.center.y;
        return a.center.x < b.center.x;
    });
    return all;
}

}  // namespace g2s
