#include "gaze2seg/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "gaze2seg/errors.hpp"

namespace g2s {

namespace {

// Box-Muller on raw 53-bit uniforms so output does not depend on the standard
// library's distribution implementation.
class GaussianGen {
  public:
    explicit GaussianGen(std::uint64_t seed) : rng_(seed) {}

    double operator()() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * 3.141592653589793238462643383279502884 * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

  private:
    double uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }
    std::mt19937_64 rng_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace

Phantom make_phantom(const PhantomSpec& spec) {
    if (spec.nx < 1 || spec.ny < 1 || spec.nz < 1) throw ValidationError("phantom dims must be >= 1");
    if (spec.sx <= 0 || spec.sy <= 0 || spec.sz <= 0)
        throw ValidationError("phantom spacing must be positive");
    for (const auto& l : spec.lesions) {
        if (l.contrast == 0.0) throw ValidationError("lesion contrast must be nonzero");
        if (l.center_voxel[0] < 0 || l.center_voxel[0] >= spec.nx || l.center_voxel[1] < 0 ||
            l.center_voxel[1] >= spec.ny || l.center_voxel[2] < 0 || l.center_voxel[2] >= spec.nz)
            throw ValidationError("lesion center outside phantom bounds");
    }

    Phantom out;
    Volume& vol = out.volume;
    vol.nx = spec.nx;
    vol.ny = spec.ny;
    vol.nz = spec.nz;
    vol.sx = spec.sx;
    vol.sy = spec.sy;
    vol.sz = spec.sz;
    vol.dtype = ScalarType::F32;
    vol.intensities.assign(vol.voxel_count(), static_cast<float>(spec.background));

    LabelMask& mask = out.mask;
    mask.nx = spec.nx;
    mask.ny = spec.ny;
    mask.nz = spec.nz;
    mask.sx = spec.sx;
    mask.sy = spec.sy;
    mask.sz = spec.sz;
    mask.values.assign(vol.voxel_count(), 0);

    for (const auto& l : spec.lesions) {
        for (int z = 0; z < spec.nz; ++z)
            for (int y = 0; y < spec.ny; ++y)
                for (int x = 0; x < spec.nx; ++x) {
                    const double ex = (x - l.center_voxel[0]) * spec.sx / l.radii_mm[0];
                    const double ey = (y - l.center_voxel[1]) * spec.sy / l.radii_mm[1];
                    const double ez = (z - l.center_voxel[2]) * spec.sz / l.radii_mm[2];
                    if (ex * ex + ey * ey + ez * ez <= 1.0) {
                        if (mask.at(x, y, z))
                            throw ValidationError("overlapping lesions are not allowed");
                        mask.at(x, y, z) = 1;
                        vol.at(x, y, z) += static_cast<float>(l.contrast);
                    }
                }
    }

    if (spec.noise_sigma > 0.0) {
        GaussianGen noise(spec.rng_seed);
        for (auto& v : vol.intensities) v += static_cast<float>(noise() * spec.noise_sigma);
    }
    return out;
}

SimulatedGaze make_gaze(const GazeSimSpec& spec, const PhantomSpec& phantom) {
    if (spec.sample_rate_hz <= 0) throw ValidationError("sample rate must be positive");
    for (const auto& t : spec.fixation_targets) {
        if (t.dwell_ms <= 0) throw ValidationError("fixation dwell must be positive");
        if (t.slice < 0 || t.slice >= phantom.nz) throw ValidationError("fixation slice out of bounds");
        if (t.xy.x < 0 || t.xy.x >= phantom.nx || t.xy.y < 0 || t.xy.y >= phantom.ny)
            throw ValidationError("fixation target outside raster");
    }

    GaussianGen jitter(spec.rng_seed);
    const double sigma_px_x = spec.jitter_sigma_mm / phantom.sx;
    const double sigma_px_y = spec.jitter_sigma_mm / phantom.sy;

    std::ostringstream gaze, viewer;
    gaze << "t_ms,scene_x,scene_y,pupil_mm\n";
    viewer << "t_ms,kind,slice,payload\n";

    long long sample_index = 0;
    int current_slice = -1;
    auto sample_time = [&](long long n) {
        return static_cast<long long>(std::llround(n * 1000.0 / spec.sample_rate_hz));
    };
    auto emit_fixation = [&](int slice, const Point2& xy, double dwell_ms) {
        const long long count =
            std::max<long long>(1, std::llround(dwell_ms * spec.sample_rate_hz / 1000.0));
        if (slice != current_slice) {
            viewer << sample_time(sample_index) << ",slice_change," << slice << ",\n";
            current_slice = slice;
        }
        for (long long i = 0; i < count; ++i) {
            double x = xy.x, y = xy.y;
            if (spec.jitter_sigma_mm > 0) {
                x += jitter() * sigma_px_x;
                y += jitter() * sigma_px_y;
            }
            x = std::clamp(x, 0.0, phantom.nx - 1.0);
            y = std::clamp(y, 0.0, phantom.ny - 1.0);
            gaze << sample_time(sample_index) << "," << x << "," << y << ",3.5\n";
            ++sample_index;
        }
    };

    for (std::size_t i = 0; i < spec.fixation_targets.size(); ++i) {
        const auto& t = spec.fixation_targets[i];
        emit_fixation(t.slice, t.xy, t.dwell_ms);
        if (spec.pattern == GazePattern::Driller && i + 1 < spec.fixation_targets.size()) {
            // Rapid flick through a neighboring slice between dwells.
            const int neighbor = t.slice + 1 < phantom.nz ? t.slice + 1 : t.slice - 1;
            if (neighbor >= 0) emit_fixation(neighbor, t.xy, 100.0);
        }
    }
    return {gaze.str(), viewer.str()};
}

}  // namespace g2s
