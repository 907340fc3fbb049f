#include "gaze2seg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gaze2seg/errors.hpp"

namespace g2s {

double dice(const LabelMask& a, const LabelMask& b) {
    if (!a.dims_match(b)) throw ValidationError("dice: mask dimension mismatch");
    std::size_t na = 0, nb = 0, ni = 0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        na += a.values[i] != 0;
        nb += b.values[i] != 0;
        ni += (a.values[i] != 0) && (b.values[i] != 0);
    }
    if (na + nb == 0) return 1.0;
    return 2.0 * static_cast<double>(ni) / static_cast<double>(na + nb);
}

namespace {

struct Pt {
    double x, y, z;
};

std::vector<Pt> boundary_points(const LabelMask& m) {
    std::vector<Pt> pts;
    for (int z = 0; z < m.nz; ++z)
        for (int y = 0; y < m.ny; ++y)
            for (int x = 0; x < m.nx; ++x) {
                if (!m.at(x, y, z)) continue;
                const bool boundary = x == 0 || !m.at(x - 1, y, z) || x == m.nx - 1 ||
                                      !m.at(x + 1, y, z) || y == 0 || !m.at(x, y - 1, z) ||
                                      y == m.ny - 1 || !m.at(x, y + 1, z);
                if (boundary) pts.push_back({x * m.sx, y * m.sy, z * m.sz});
            }
    return pts;
}

double directed_hd(const std::vector<Pt>& from, const std::vector<Pt>& to) {
    double worst = 0.0;
    for (const auto& p : from) {
        double best = std::numeric_limits<double>::max();
        for (const auto& q : to) {
            const double dx = p.x - q.x, dy = p.y - q.y, dz = p.z - q.z;
            best = std::min(best, dx * dx + dy * dy + dz * dz);
        }
        worst = std::max(worst, best);
    }
    return std::sqrt(worst);
}

}  // namespace

double hausdorff_mm(const LabelMask& a, const LabelMask& b) {
    if (!a.dims_match(b)) throw ValidationError("hausdorff_mm: mask dimension mismatch");
    if (a.sx != b.sx || a.sy != b.sy || a.sz != b.sz)
        throw ValidationError("hausdorff_mm: spacing mismatch");
    const auto pa = boundary_points(a);
    const auto pb = boundary_points(b);
    if (pa.empty() || pb.empty())
        throw ValidationError("hausdorff_mm is undefined for an empty mask");
    return std::max(directed_hd(pa, pb), directed_hd(pb, pa));
}

LabelMask restrict_to_slices(const LabelMask& mask, const std::vector<int>& slices) {
    LabelMask out = mask;
    std::fill(out.values.begin(), out.values.end(), 0);
    for (int z : slices) {
        if (z < 0 || z >= mask.nz) continue;
        const std::size_t base = static_cast<std::size_t>(z) * mask.nx * mask.ny;
        std::copy_n(mask.values.begin() + base,
                    static_cast<std::size_t>(mask.nx) * mask.ny, out.values.begin() + base);
    }
    return out;
}

}  // namespace g2s
