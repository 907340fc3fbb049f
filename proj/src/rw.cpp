#include "gaze2seg/rw.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "gaze2seg/errors.hpp"

namespace g2s {

LatticeGraph build_lattice(const Grid2& window_image, const RwParams& params) {
    const int w = window_image.width, h = window_image.height;
    Grid2 norm = normalize_window(window_image);
    LatticeGraph g;
    g.width = w;
    g.height = h;
    g.wx.resize(static_cast<std::size_t>(std::max(0, w - 1)) * h);
    g.wy.resize(static_cast<std::size_t>(w) * std::max(0, h - 1));
    for (int y = 0; y < h; ++y)
        for (int x = 0; x + 1 < w; ++x) {
            const double d = norm.at(x, y) - norm.at(x + 1, y);
            g.wx[static_cast<std::size_t>(y) * (w - 1) + x] = std::exp(-params.beta * d * d);
        }
    for (int y = 0; y + 1 < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double d = norm.at(x, y) - norm.at(x, y + 1);
            g.wy[static_cast<std::size_t>(y) * w + x] = std::exp(-params.beta * d * d);
        }
    return g;
}

namespace {

enum Label : int { Unseeded = -1, Background = 0, Foreground = 1 };

struct System {
    int w, h;
    const LatticeGraph* g;
    std::vector<int> label;     // per pixel
    std::vector<int> unk_index; // pixel -> unknown index, -1 for seeds
    std::vector<int> unk_pixel; // unknown index -> pixel
};

// y = L_UU * x over the 4-neighbor lattice, matrix-free.
void apply_laplacian(const System& s, const std::vector<double>& x, std::vector<double>& y) {
    const int w = s.w, h = s.h;
    for (std::size_t u = 0; u < x.size(); ++u) {
        const int p = s.unk_pixel[u];
        const int px = p % w, py = p / w;
        double diag = 0.0, off = 0.0;
        auto edge = [&](int qx, int qy, double wt) {
            diag += wt;
            const int q = qy * w + qx;
            if (s.label[q] == Unseeded) off += wt * x[s.unk_index[q]];
        };
        if (px > 0) edge(px - 1, py, s.g->horiz(px - 1, py));
        if (px + 1 < w) edge(px + 1, py, s.g->horiz(px, py));
        if (py > 0) edge(px, py - 1, s.g->vert(px, py - 1));
        if (py + 1 < h) edge(px, py + 1, s.g->vert(px, py));
        y[u] = diag * x[u] - off;
    }
}

}  // namespace

RwResult solve_dirichlet(const LatticeGraph& graph, const SeedSet& seeds, const RwParams& params) {
    const int w = graph.width, h = graph.height;
    if (seeds.fg.empty() || seeds.bg.empty())
        throw ValidationError("solve_dirichlet requires at least one FG and one BG seed");

    System s;
    s.w = w;
    s.h = h;
    s.g = &graph;
    s.label.assign(static_cast<std::size_t>(w) * h, Unseeded);
    auto mark = [&](const PixelCoord& p, int lab) {
        if (p.x < 0 || p.x >= w || p.y < 0 || p.y >= h)
            throw ValidationError("seed outside solver window");
        s.label[static_cast<std::size_t>(p.y) * w + p.x] = lab;
    };
    for (const auto& p : seeds.fg) mark(p, Foreground);
    for (const auto& p : seeds.bg) mark(p, Background);

    s.unk_index.assign(s.label.size(), -1);
    for (std::size_t p = 0; p < s.label.size(); ++p)
        if (s.label[p] == Unseeded) {
            s.unk_index[p] = static_cast<int>(s.unk_pixel.size());
            s.unk_pixel.push_back(static_cast<int>(p));
        }
    const std::size_t n = s.unk_pixel.size();

    // Right-hand side: weights to FOREGROUND-seeded neighbors. Jacobi diagonal
    // alongside.
    std::vector<double> b(n, 0.0), diag(n, 0.0);
    for (std::size_t u = 0; u < n; ++u) {
        const int p = s.unk_pixel[u];
        const int px = p % w, py = p / w;
        auto edge = [&](int qx, int qy, double wt) {
            diag[u] += wt;
            const int q = qy * w + qx;
            if (s.label[q] == Foreground) b[u] += wt;
        };
        if (px > 0) edge(px - 1, py, graph.horiz(px - 1, py));
        if (px + 1 < w) edge(px + 1, py, graph.horiz(px, py));
        if (py > 0) edge(px, py - 1, graph.vert(px, py - 1));
        if (py + 1 < h) edge(px, py + 1, graph.vert(px, py));
    }

    std::vector<double> x(n, 0.0);
    SolveStats stats;
    double bnorm = 0.0;
    for (double v : b) bnorm += v * v;
    bnorm = std::sqrt(bnorm);

    if (n > 0 && bnorm > 0.0) {
        const int max_iters = params.max_iters > 0 ? params.max_iters
                                                   : 10 * static_cast<int>(n);
        std::vector<double> r(b), z(n), p(n), ap(n);
        for (std::size_t i = 0; i < n; ++i) z[i] = r[i] / diag[i];
        p = z;
        double rz = 0.0;
        for (std::size_t i = 0; i < n; ++i) rz += r[i] * z[i];
        double rnorm = bnorm;
        int it = 0;
        while (rnorm / bnorm > params.cg_tolerance) {
            if (it >= max_iters)
                throw ConvergenceError("CG failed to converge: relative residual " +
                                       std::to_string(rnorm / bnorm) + " after " +
                                       std::to_string(it) + " iterations");
            apply_laplacian(s, p, ap);
            double pap = 0.0;
            for (std::size_t i = 0; i < n; ++i) pap += p[i] * ap[i];
            const double alpha = rz / pap;
            for (std::size_t i = 0; i < n; ++i) {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            rnorm = 0.0;
            for (double v : r) rnorm += v * v;
            rnorm = std::sqrt(rnorm);
            for (std::size_t i = 0; i < n; ++i) z[i] = r[i] / diag[i];
            double rz_new = 0.0;
            for (std::size_t i = 0; i < n; ++i) rz_new += r[i] * z[i];
            const double beta = rz_new / rz;
            rz = rz_new;
            for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
            ++it;
        }
        stats.iterations = it;
        stats.residual = rnorm / bnorm;
    }

    RwResult res;
    res.probabilities = ProbField(w, h);
    res.mask.assign(static_cast<std::size_t>(w) * h, 0);
    for (std::size_t p = 0; p < s.label.size(); ++p) {
        double v;
        if (s.label[p] == Foreground)
            v = 1.0;
        else if (s.label[p] == Background)
            v = 0.0;
        else
            v = std::clamp(x[s.unk_index[p]], 0.0, 1.0);
        res.probabilities.values[p] = v;
        res.mask[p] = v >= 0.5 ? 1 : 0;
    }
    res.stats = stats;
    return res;
}

Grid2 segment_region(const Grid2& slice_image, const SeedSet& seeds, double sx_mm, double sy_mm,
                     const RwParams& params, SolveStats* stats) {
    const int w = slice_image.width, h = slice_image.height;
    int x0 = w, x1 = -1, y0 = h, y1 = -1;
    auto grow = [&](const PixelCoord& p) {
        x0 = std::min(x0, p.x);
        x1 = std::max(x1, p.x);
        y0 = std::min(y0, p.y);
        y1 = std::max(y1, p.y);
    };
    for (const auto& p : seeds.fg) grow(p);
    for (const auto& p : seeds.bg) grow(p);
    if (x1 < 0) throw ValidationError("segment_region: empty seed set");
    const int mx = static_cast<int>(std::ceil(params.crop_margin_mm / sx_mm));
    const int my = static_cast<int>(std::ceil(params.crop_margin_mm / sy_mm));
    x0 = std::max(0, x0 - mx);
    y0 = std::max(0, y0 - my);
    x1 = std::min(w - 1, x1 + mx);
    y1 = std::min(h - 1, y1 + my);
    const int cw = x1 - x0 + 1, ch = y1 - y0 + 1;

    Grid2 window(cw, ch);
    for (int y = 0; y < ch; ++y)
        for (int x = 0; x < cw; ++x) window.at(x, y) = slice_image.at(x0 + x, y0 + y);

    SeedSet local;
    local.slice = seeds.slice;
    for (const auto& p : seeds.fg) local.fg.push_back({p.x - x0, p.y - y0});
    for (const auto& p : seeds.bg) local.bg.push_back({p.x - x0, p.y - y0});

    const LatticeGraph graph = build_lattice(window, params);
    RwResult res = solve_dirichlet(graph, local, params);
    if (stats) *stats = res.stats;

    // Keep only the 4-connected component containing the first FG seed.
    std::vector<std::uint8_t> keep(res.mask.size(), 0);
    std::deque<int> queue;
    const int start = local.fg[0].y * cw + local.fg[0].x;
    if (res.mask[start]) {
        keep[start] = 1;
        queue.push_back(start);
    }
    while (!queue.empty()) {
        const int p = queue.front();
        queue.pop_front();
        const int px = p % cw, py = p / cw;
        const int nbrs[4][2] = {{px + 1, py}, {px - 1, py}, {px, py + 1}, {px, py - 1}};
        for (const auto& nb : nbrs) {
            if (nb[0] < 0 || nb[0] >= cw || nb[1] < 0 || nb[1] >= ch) continue;
            const int q = nb[1] * cw + nb[0];
            if (res.mask[q] && !keep[q]) {
                keep[q] = 1;
                queue.push_back(q);
            }
        }
    }

    Grid2 full(w, h, 0.f);
    for (int y = 0; y < ch; ++y)
        for (int x = 0; x < cw; ++x)
            if (keep[static_cast<std::size_t>(y) * cw + x]) full.at(x0 + x, y0 + y) = 1.f;
    return full;
}

}  // namespace g2s
