#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "gaze2seg/errors.hpp"
#include "gaze2seg/metrics.hpp"

using namespace g2s;

namespace {

LabelMask blank(int nx, int ny, int nz, double sx = 1, double sy = 1, double sz = 1) {
    LabelMask m;
    m.nx = nx;
    m.ny = ny;
    m.nz = nz;
    m.sx = sx;
    m.sy = sy;
    m.sz = sz;
    m.values.assign(m.voxel_count(), 0);
    return m;
}

// Brute-force oracles straight from the definitions.
double oracle_dice(const LabelMask& a, const LabelMask& b) {
    std::size_t na = 0, nb = 0, ni = 0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        if (a.values[i]) ++na;
        if (b.values[i]) ++nb;
        if (a.values[i] && b.values[i]) ++ni;
    }
    return na + nb == 0 ? 1.0 : 2.0 * ni / static_cast<double>(na + nb);
}

std::vector<std::array<double, 3>> oracle_boundary(const LabelMask& m) {
    std::vector<std::array<double, 3>> pts;
    auto inside = [&](int x, int y, int z) {
        return x >= 0 && x < m.nx && y >= 0 && y < m.ny && m.at(x, y, z) != 0;
    };
    for (int z = 0; z < m.nz; ++z)
        for (int y = 0; y < m.ny; ++y)
            for (int x = 0; x < m.nx; ++x) {
                if (!m.at(x, y, z)) continue;
                if (!inside(x - 1, y, z) || !inside(x + 1, y, z) || !inside(x, y - 1, z) ||
                    !inside(x, y + 1, z))
                    pts.push_back({x * m.sx, y * m.sy, z * m.sz});
            }
    return pts;
}

double oracle_hd(const LabelMask& a, const LabelMask& b) {
    const auto pa = oracle_boundary(a);
    const auto pb = oracle_boundary(b);
    auto directed = [](const auto& from, const auto& to) {
        double worst = 0;
        for (const auto& p : from) {
            double best = std::numeric_limits<double>::max();
            for (const auto& q : to)
                best = std::min(best, std::hypot(p[0] - q[0], std::hypot(p[1] - q[1], p[2] - q[2])));
            worst = std::max(worst, best);
        }
        return worst;
    };
    return std::max(directed(pa, pb), directed(pb, pa));
}

LabelMask random_blob_mask(std::mt19937& rng, int nx, int ny, int nz, double sx, double sy,
                           double sz) {
    LabelMask m = blank(nx, ny, nz, sx, sy, sz);
    std::uniform_int_distribution<int> cx(0, nx - 1), cy(0, ny - 1), cz(0, nz - 1);
    std::uniform_real_distribution<double> radius(1.0, 5.0);
    const int blobs = 1 + static_cast<int>(rng() % 3);
    for (int b = 0; b < blobs; ++b) {
        const int ox = cx(rng), oy = cy(rng), oz = cz(rng);
        const double r = radius(rng);
        for (int z = 0; z < nz; ++z)
            for (int y = 0; y < ny; ++y)
                for (int x = 0; x < nx; ++x) {
                    const double d = std::sqrt(double(x - ox) * (x - ox) + double(y - oy) * (y - oy) +
                                               double(z - oz) * (z - oz));
                    if (d <= r) m.at(x, y, z) = 1;
                }
    }
    return m;
}

}  // namespace

TEST_CASE("dice basics") {
    auto a = blank(4, 4, 1);
    auto b = blank(4, 4, 1);
    SUBCASE("identical non-empty masks give 1") {
        a.at(1, 1, 0) = b.at(1, 1, 0) = 1;
        CHECK(dice(a, b) == 1.0);
    }
    SUBCASE("disjoint masks give 0") {
        a.at(0, 0, 0) = 1;
        b.at(3, 3, 0) = 1;
        CHECK(dice(a, b) == 0.0);
    }
    SUBCASE("|A|=4, |B|=6, |A∩B|=3 gives 0.6") {
        for (int i = 0; i < 4; ++i) a.at(i, 0, 0) = 1;
        for (int i = 1; i < 4; ++i) b.at(i, 0, 0) = 1;
        for (int i = 0; i < 3; ++i) b.at(i, 1, 0) = 1;
        CHECK(dice(a, b) == 0.6);
    }
    SUBCASE("both empty is defined as 1") { CHECK(dice(a, b) == 1.0); }
    SUBCASE("dimension mismatch rejected") {
        const auto c = blank(5, 4, 1);
        CHECK_THROWS_AS(dice(a, c), ValidationError);
    }
    SUBCASE("symmetry") {
        a.at(1, 2, 0) = 1;
        b.at(1, 2, 0) = b.at(2, 2, 0) = 1;
        CHECK(dice(a, b) == dice(b, a));
    }
}

TEST_CASE("hausdorff basics") {
    SUBCASE("identical masks give 0") {
        auto a = blank(8, 8, 1);
        a.at(2, 2, 0) = a.at(3, 2, 0) = 1;
        CHECK(hausdorff_mm(a, a) == 0.0);
    }
    SUBCASE("two voxels 5 apart in-plane at 0.58 mm spacing give 2.9 mm") {
        auto a = blank(16, 16, 1, 0.58, 0.58, 1.5);
        auto b = blank(16, 16, 1, 0.58, 0.58, 1.5);
        a.at(2, 3, 0) = 1;
        b.at(7, 3, 0) = 1;
        CHECK(hausdorff_mm(a, b) == doctest::Approx(2.9).epsilon(1e-12));
    }
    SUBCASE("square vs cross-dilated square gives 1 mm") {
        auto a = blank(16, 16, 1);
        auto b = blank(16, 16, 1);
        for (int y = 3; y < 13; ++y)
            for (int x = 3; x < 13; ++x) a.at(x, y, 0) = 1;
        // dilate by one pixel with the 4-neighbor cross
        for (int y = 0; y < 16; ++y)
            for (int x = 0; x < 16; ++x) {
                if (a.at(x, y, 0)) b.at(x, y, 0) = 1;
                if (x > 0 && a.at(x - 1, y, 0)) b.at(x, y, 0) = 1;
                if (x < 15 && a.at(x + 1, y, 0)) b.at(x, y, 0) = 1;
                if (y > 0 && a.at(x, y - 1, 0)) b.at(x, y, 0) = 1;
                if (y < 15 && a.at(x, y + 1, 0)) b.at(x, y, 0) = 1;
            }
        CHECK(hausdorff_mm(a, b) == doctest::Approx(oracle_hd(a, b)).epsilon(1e-12));
        CHECK(hausdorff_mm(a, b) == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("empty mask is an error, not infinity") {
        auto a = blank(4, 4, 1);
        auto b = blank(4, 4, 1);
        b.at(0, 0, 0) = 1;
        CHECK_THROWS_AS(hausdorff_mm(a, b), ValidationError);
    }
}

TEST_CASE("random masks match the brute-force oracles") {
    std::mt19937 rng(31);
    for (int rep = 0; rep < 30; ++rep) {
        const int nx = 4 + static_cast<int>(rng() % 12);
        const int ny = 4 + static_cast<int>(rng() % 12);
        const int nz = 1 + static_cast<int>(rng() % 4);
        const double sx = 0.58, sy = 0.58, sz = 1.5;
        const LabelMask a = random_blob_mask(rng, nx, ny, nz, sx, sy, sz);
        const LabelMask b = random_blob_mask(rng, nx, ny, nz, sx, sy, sz);
        CHECK(dice(a, b) == oracle_dice(a, b));
        const bool a_empty = oracle_boundary(a).empty();
        const bool b_empty = oracle_boundary(b).empty();
        if (!a_empty && !b_empty) {
            CHECK(hausdorff_mm(a, b) == doctest::Approx(oracle_hd(a, b)).epsilon(1e-9));
            CHECK(hausdorff_mm(a, b) == hausdorff_mm(b, a));
        }
    }
}

TEST_CASE("restrict_to_slices keeps only the named slices") {
    auto m = blank(4, 4, 3);
    m.at(1, 1, 0) = m.at(2, 2, 1) = m.at(3, 3, 2) = 1;
    const LabelMask r = restrict_to_slices(m, {1});
    CHECK(r.at(1, 1, 0) == 0);
    CHECK(r.at(2, 2, 1) == 1);
    CHECK(r.at(3, 3, 2) == 0);
}
