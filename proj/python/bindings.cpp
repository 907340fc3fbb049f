#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>

#include "gaze2seg/metrics.hpp"
#include "gaze2seg/pipeline.hpp"
#include "gaze2seg/rw.hpp"
#include "gaze2seg/saliency.hpp"
#include "gaze2seg/synth.hpp"

namespace py = pybind11;
using namespace g2s;

namespace {

Grid2 grid_from_array(const py::array_t<float, py::array::c_style | py::array::forcecast>& arr) {
    if (arr.ndim() != 2) throw py::value_error("expected a 2D array");
    Grid2 g(static_cast<int>(arr.shape(1)), static_cast<int>(arr.shape(0)));
    std::copy_n(arr.data(), g.size(), g.values.begin());
    return g;
}

py::array_t<float> array_from_grid(const Grid2& g) {
    py::array_t<float> arr({g.height, g.width});
    std::copy_n(g.values.data(), g.size(), arr.mutable_data());
    return arr;
}

LabelMask mask_from_array(const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& arr,
                          double sx, double sy, double sz) {
    if (arr.ndim() != 3) throw py::value_error("expected a 3D array (z, y, x)");
    LabelMask m;
    m.nz = static_cast<int>(arr.shape(0));
    m.ny = static_cast<int>(arr.shape(1));
    m.nx = static_cast<int>(arr.shape(2));
    m.sx = sx;
    m.sy = sy;
    m.sz = sz;
    m.values.assign(arr.data(), arr.data() + arr.size());
    for (auto& v : m.values) v = v ? 1 : 0;
    return m;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "gaze-guided lesion segmentation core";

    m.def(
        "make_phantom",
        [](std::tuple<int, int, int> dims, std::tuple<double, double, double> spacing,
           std::vector<std::tuple<std::tuple<int, int, int>, std::tuple<double, double, double>,
                                  double>>
               lesions,
           double background, double noise_sigma, std::uint64_t seed) {
            PhantomSpec spec;
            std::tie(spec.nx, spec.ny, spec.nz) = dims;
            std::tie(spec.sx, spec.sy, spec.sz) = spacing;
            spec.background = background;
            spec.noise_sigma = noise_sigma;
            spec.rng_seed = seed;
            for (const auto& [c, r, contrast] : lesions) {
                Lesion l;
                std::tie(l.center_voxel[0], l.center_voxel[1], l.center_voxel[2]) = c;
                std::tie(l.radii_mm[0], l.radii_mm[1], l.radii_mm[2]) = r;
                l.contrast = contrast;
                spec.lesions.push_back(l);
            }
            const Phantom p = make_phantom(spec);
            py::array_t<float> vol({p.volume.nz, p.volume.ny, p.volume.nx});
            std::copy_n(p.volume.intensities.data(), p.volume.voxel_count(), vol.mutable_data());
            py::array_t<std::uint8_t> mask({p.mask.nz, p.mask.ny, p.mask.nx});
            std::copy_n(p.mask.values.data(), p.mask.voxel_count(), mask.mutable_data());
            return py::make_tuple(vol, mask);
        },
        py::arg("dims"), py::arg("spacing"), py::arg("lesions"), py::arg("background") = 0.0,
        py::arg("noise_sigma") = 0.0, py::arg("seed") = 0);

    m.def(
        "dice",
        [](py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast> a,
           py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast> b,
           std::tuple<double, double, double> spacing) {
            const auto [sx, sy, sz] = spacing;
            return dice(mask_from_array(a, sx, sy, sz), mask_from_array(b, sx, sy, sz));
        },
        py::arg("a"), py::arg("b"), py::arg("spacing") = std::make_tuple(1.0, 1.0, 1.0));

    m.def(
        "hausdorff_mm",
        [](py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast> a,
           py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast> b,
           std::tuple<double, double, double> spacing) {
            const auto [sx, sy, sz] = spacing;
            return hausdorff_mm(mask_from_array(a, sx, sy, sz), mask_from_array(b, sx, sy, sz));
        },
        py::arg("a"), py::arg("b"), py::arg("spacing") = std::make_tuple(1.0, 1.0, 1.0));

    m.def(
        "saliency_map",
        [](py::array_t<float, py::array::c_style | py::array::forcecast> window, int patch_size,
           int k_patches, double lambda, std::vector<double> scales, double foci_threshold) {
            SaliencyParams p;
            p.patch_size = patch_size;
            p.k_patches = k_patches;
            p.lambda = lambda;
            p.scales = std::move(scales);
            p.foci_threshold = foci_threshold;
            SaliencyMap map = multi_scale_saliency(grid_from_array(window), p);
            refine_with_foci(map, p);
            return py::make_tuple(array_from_grid(map.values), array_from_grid(map.sbar));
        },
        py::arg("window"), py::arg("patch_size") = 7, py::arg("k_patches") = 64,
        py::arg("lam") = 3.0, py::arg("scales") = std::vector<double>{1.0, 0.8, 0.5, 0.3},
        py::arg("foci_threshold") = 0.8);

    m.def(
        "random_walker",
        [](py::array_t<float, py::array::c_style | py::array::forcecast> slice_image,
           std::vector<std::pair<int, int>> fg, std::vector<std::pair<int, int>> bg,
           double beta, double sx, double sy) {
            SeedSet seeds;
            for (auto [x, y] : fg) seeds.fg.push_back({x, y});
            for (auto [x, y] : bg) seeds.bg.push_back({x, y});
            RwParams p;
            p.beta = beta;
            const Grid2 mask = segment_region(grid_from_array(slice_image), seeds, sx, sy, p);
            return array_from_grid(mask);
        },
        py::arg("slice_image"), py::arg("fg"), py::arg("bg"), py::arg("beta") = 90.0,
        py::arg("sx") = 1.0, py::arg("sy") = 1.0);

    m.def(
        "run_pipeline",
        [](const std::string& volume, const std::string& gaze, const std::string& viewer,
           std::optional<std::string> calibration, std::optional<std::string> ref_mask,
           const std::string& out_dir, int jobs, int top_k) {
            PipelineConfig cfg;
            cfg.out_dir = out_dir;
            cfg.jobs = jobs;
            cfg.top_k = top_k;
            const PipelineResult res =
                run_pipeline(volume, gaze, viewer, calibration, ref_mask, cfg);
            py::dict out;
            out["num_regions"] = res.outcomes.size();
            py::list statuses;
            for (const auto& o : res.outcomes) statuses.append(o.status);
            out["statuses"] = statuses;
            if (res.report) {
                out["dsc"] = res.report->dsc;
                if (res.report->hd_mm) out["hd_mm"] = *res.report->hd_mm;
            }
            return out;
        },
        py::arg("volume"), py::arg("gaze"), py::arg("viewer"),
        py::arg("calibration") = std::nullopt, py::arg("ref_mask") = std::nullopt,
        py::arg("out_dir") = "out", py::arg("jobs") = 1, py::arg("top_k") = 0);
}
