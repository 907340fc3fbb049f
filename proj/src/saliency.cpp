#include "gaze2seg/saliency.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <thread>

#include "gaze2seg/errors.hpp"

namespace g2s {

double patch_distance(std::span<const float> patch_u, std::span<const float> patch_v,
                      const Point2& pos_u, const Point2& pos_v, double lambda) {
    if (patch_u.size() != patch_v.size())
        throw ValidationError("patch_distance: size mismatch");
    double ssd = 0.0;
    for (std::size_t i = 0; i < patch_u.size(); ++i) {
        const double d = static_cast<double>(patch_u[i]) - patch_v[i];
        ssd += d * d;
    }
    const double d_intensity = std::sqrt(ssd) / std::sqrt(static_cast<double>(patch_u.size()));
    const double d_position = std::hypot(pos_u.x - pos_v.x, pos_u.y - pos_v.y);
    return d_intensity / (1.0 + lambda * d_position);
}

Grid2 normalize_window(const Grid2& window) {
    Grid2 out(window.width, window.height);
    if (window.values.empty()) return out;
    auto [mn, mx] = std::minmax_element(window.values.begin(), window.values.end());
    const float lo = *mn, hi = *mx;
    if (hi > lo) {
        const float inv = 1.f / (hi - lo);
        for (std::size_t i = 0; i < out.size(); ++i) out.values[i] = (window.values[i] - lo) * inv;
    }
    return out;
}

Grid2 resample_area(const Grid2& image, double scale) {
    if (scale >= 1.0) return image;
    const int w2 = std::max(1, static_cast<int>(std::lround(image.width * scale)));
    const int h2 = std::max(1, static_cast<int>(std::lround(image.height * scale)));
    Grid2 out(w2, h2);
    const double fx = static_cast<double>(image.width) / w2;
    const double fy = static_cast<double>(image.height) / h2;
    for (int y = 0; y < h2; ++y) {
        const double sy0 = y * fy, sy1 = (y + 1) * fy;
        const int iy0 = static_cast<int>(std::floor(sy0));
        const int iy1 = std::min(image.height, static_cast<int>(std::ceil(sy1)));
        for (int x = 0; x < w2; ++x) {
            const double sx0 = x * fx, sx1 = (x + 1) * fx;
            const int ix0 = static_cast<int>(std::floor(sx0));
            const int ix1 = std::min(image.width, static_cast<int>(std::ceil(sx1)));
            double sum = 0.0, area = 0.0;
            for (int iy = iy0; iy < iy1; ++iy) {
                const double hy = std::min<double>(iy + 1, sy1) - std::max<double>(iy, sy0);
                for (int ix = ix0; ix < ix1; ++ix) {
                    const double hx = std::min<double>(ix + 1, sx1) - std::max<double>(ix, sx0);
                    sum += image.at(ix, iy) * hx * hy;
                    area += hx * hy;
                }
            }
            out.at(x, y) = static_cast<float>(sum / area);
        }
    }
    return out;
}

namespace {

Grid2 upsample_bilinear(const Grid2& src, int width, int height) {
    if (src.width == width && src.height == height) return src;
    Grid2 out(width, height);
    const double rx = width > 1 ? static_cast<double>(src.width - 1) / (width - 1) : 0.0;
    const double ry = height > 1 ? static_cast<double>(src.height - 1) / (height - 1) : 0.0;
    for (int y = 0; y < height; ++y) {
        const double sy = y * ry;
        const int y0 = std::min(static_cast<int>(sy), src.height - 1);
        const int y1 = std::min(y0 + 1, src.height - 1);
        const double wy = sy - y0;
        for (int x = 0; x < width; ++x) {
            const double sx = x * rx;
            const int x0 = std::min(static_cast<int>(sx), src.width - 1);
            const int x1 = std::min(x0 + 1, src.width - 1);
            const double wx = sx - x0;
            const double v = (1 - wy) * ((1 - wx) * src.at(x0, y0) + wx * src.at(x1, y0)) +
                             wy * ((1 - wx) * src.at(x0, y1) + wx * src.at(x1, y1));
            out.at(x, y) = static_cast<float>(v);
        }
    }
    return out;
}

void parallel_for(int n, int num_threads, const std::function<void(int)>& body) {
    if (num_threads <= 1 || n < 64) {
        for (int i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<int> next{0};
    auto worker = [&] {
        for (;;) {
            const int i = next.fetch_add(8);
            if (i >= n) return;
            const int end = std::min(i + 8, n);
            for (int j = i; j < end; ++j) body(j);
        }
    };
    std::vector<std::thread> pool;
    for (int t = 1; t < num_threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
}

}  // namespace

Grid2 single_scale_saliency(const Grid2& normalized_window, double scale,
                            const SaliencyParams& params) {
    const int W0 = normalized_window.width, H0 = normalized_window.height;
    const Grid2 scaled = resample_area(normalized_window, scale);
    const int w = scaled.width, h = scaled.height;
    const int ps = params.patch_size;
    if (w < ps || h < ps)
        throw ValidationError("window too small for patch size " + std::to_string(ps) +
                              " at scale " + std::to_string(scale));

    const int n = w * h;
    const int m = ps * ps;
    const int half = ps / 2;

    // Patches clamp at borders so every pixel has a full-size patch.
    std::vector<float> patches(static_cast<std::size_t>(n) * m);
    std::vector<Point2> positions(n);
    const double diag = std::sqrt(static_cast<double>(W0 - 1) * (W0 - 1) +
                                  static_cast<double>(H0 - 1) * (H0 - 1));
    const double inv_diag = diag > 0 ? 1.0 / diag : 0.0;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const int idx = y * w + x;
            float* p = &patches[static_cast<std::size_t>(idx) * m];
            for (int dy = -half; dy <= half; ++dy) {
                const int sy = std::clamp(y + dy, 0, h - 1);
                for (int dx = -half; dx <= half; ++dx) {
                    const int sx = std::clamp(x + dx, 0, w - 1);
                    *p++ = scaled.at(sx, sy);
                }
            }
            // Position in original-window units, diagonal normalized to 1.
            const double ox = w > 1 ? static_cast<double>(x) / (w - 1) * (W0 - 1) : 0.0;
            const double oy = h > 1 ? static_cast<double>(y) / (h - 1) * (H0 - 1) : 0.0;
            positions[idx] = {ox * inv_diag, oy * inv_diag};
        }
    }

    const int k = std::min(params.k_patches, n - 1);
    Grid2 field(w, h);
    const double inv_sqrt_m = 1.0 / std::sqrt(static_cast<double>(m));
    const double lambda = params.lambda;

    parallel_for(n, params.num_threads, [&](int u) {
        if (k <= 0) {
            field.values[u] = 0.f;
            return;
        }
        const float* pu = &patches[static_cast<std::size_t>(u) * m];
        std::vector<double> dists;
        dists.reserve(n - 1);
        for (int v = 0; v < n; ++v) {
            if (v == u) continue;
            const float* pv = &patches[static_cast<std::size_t>(v) * m];
            double ssd = 0.0;
            for (int i = 0; i < m; ++i) {
                const double d = static_cast<double>(pu[i]) - pv[i];
                ssd += d * d;
            }
            const double d_int = std::sqrt(ssd) * inv_sqrt_m;
            const double d_pos = std::hypot(positions[u].x - positions[v].x,
                                            positions[u].y - positions[v].y);
            dists.push_back(d_int / (1.0 + lambda * d_pos));
        }
        std::nth_element(dists.begin(), dists.begin() + (k - 1), dists.end());
        std::sort(dists.begin(), dists.begin() + k);
        const double avg = std::accumulate(dists.begin(), dists.begin() + k, 0.0) / k;
        field.values[u] = static_cast<float>(1.0 - std::exp(-avg));
    });

    return upsample_bilinear(field, W0, H0);
}

SaliencyMap multi_scale_saliency(const Grid2& window, const SaliencyParams& params) {
    SaliencyMap map;
    map.window = {0, 0, window.width, window.height};
    const Grid2 norm = normalize_window(window);
    for (double r : params.scales) {
        try {
            map.per_scale.push_back(single_scale_saliency(norm, r, params));
            map.scales_used.push_back(r);
        } catch (const ValidationError&) {
            map.scales_skipped.push_back(r);
        }
    }
    if (map.per_scale.empty())
        throw ValidationError("no usable saliency scale; enlarge the window");
    map.sbar = Grid2(window.width, window.height);
    const float inv_m = 1.f / static_cast<float>(map.per_scale.size());
    for (const auto& field : map.per_scale)
        for (std::size_t i = 0; i < map.sbar.size(); ++i) map.sbar.values[i] += field.values[i];
    for (auto& v : map.sbar.values) v *= inv_m;
    return map;
}

void refine_with_foci(SaliencyMap& map, const SaliencyParams& params) {
    const Grid2& sbar = map.sbar;
    const int w = sbar.width, h = sbar.height;
    std::vector<float> sorted(sbar.values);
    std::sort(sorted.begin(), sorted.end());
    const std::size_t idx = static_cast<std::size_t>(
        std::ceil(params.foci_threshold * (sorted.size() - 1)));
    const float thresh = sorted[idx];

    std::vector<PixelCoord> foci;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (sbar.at(x, y) >= thresh) foci.push_back({x, y});

    const double diag = std::sqrt(static_cast<double>(w - 1) * (w - 1) +
                                  static_cast<double>(h - 1) * (h - 1));
    const double inv_diag = diag > 0 ? 1.0 / diag : 0.0;
    map.values = Grid2(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double best = std::numeric_limits<double>::max();
            for (const auto& f : foci) {
                const double dx = x - f.x, dy = y - f.y;
                best = std::min(best, dx * dx + dy * dy);
            }
            const double d_foci = std::sqrt(best) * inv_diag;
            map.values.at(x, y) = static_cast<float>(sbar.at(x, y) * (1.0 - d_foci));
        }
    }
}

PixelCoord most_salient_pixel(const SaliencyMap& map) {
    if (map.values.values.empty()) throw ValidationError("most_salient_pixel: empty map");
    std::size_t best = 0;
    for (std::size_t i = 1; i < map.values.size(); ++i)
        if (map.values.values[i] > map.values.values[best]) best = i;
    const int x = static_cast<int>(best % map.values.width);
    const int y = static_cast<int>(best / map.values.width);
    return {map.window.x0 + x, map.window.y0 + y};
}

}  // namespace g2s
