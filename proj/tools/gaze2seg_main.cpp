#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gaze2seg/errors.hpp"
#include "gaze2seg/ingest.hpp"
#include "gaze2seg/pipeline.hpp"
#include "gaze2seg/synth.hpp"

namespace fs = std::filesystem;
using namespace g2s;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitParse = 2;
constexpr int kExitConvergence = 3;
constexpr int kExitNoBoundary = 4;

// Shared pipeline-parameter flags; applied with flag > config-file > default
// precedence.
struct ParamFlags {
    std::vector<std::pair<std::string, std::string>> provided;  // (config key, raw value)
    std::string config_path;

    void attach(CLI::App* app) {
        auto add = [this, app](const std::string& flag, const std::string& key,
                               const std::string& desc) {
            app->add_option_function<std::string>(
                   flag, [this, key](const std::string& v) { provided.emplace_back(key, v); },
                   desc)
                ->expected(1);
        };
        add("--epsilon-mm", "epsilon_mm", "attention neighborhood radius (mm)");
        add("--t-hat-ms", "t_hat_ms", "dwell threshold (ms)");
        add("--patch-size", "patch_size", "saliency patch side (odd)");
        add("--k-patches", "k_patches", "K most similar patches");
        add("--lambda", "lambda", "position weight in patch distance");
        add("--scales", "scales", "comma-separated saliency scales in (0,1]");
        add("--foci-threshold", "foci_threshold", "focus-of-attention quantile");
        add("--window-margin-mm", "window_margin_mm", "saliency window margin (mm)");
        add("--max-radius-mm", "max_radius_mm", "background ray search cap (mm)");
        add("--gradient-quantile", "gradient_quantile", "gradient threshold quantile");
        add("--drop-fraction", "drop_fraction", "boundary pass drop fraction");
        add("--bg-margin-px", "bg_margin_px", "background seed margin (px)");
        add("--beta", "beta", "random-walker contrast parameter");
        add("--cg-tolerance", "cg_tolerance", "CG relative residual");
        add("--max-iters", "max_iters", "CG iteration cap (0 = 10x unknowns)");
        add("--crop-margin-mm", "crop_margin_mm", "solver crop margin (mm)");
        add("--top-k", "top_k", "number of regions to segment (0 = attention >= 0.5)");
        add("--jobs", "jobs", "concurrent regions");
        add("--default-slice", "default_slice", "slice before any viewer event");
        app->add_option("--config", config_path, "key=value config file");
    }

    PipelineConfig resolve(const std::string& out_dir) const {
        PipelineConfig cfg;
        if (!config_path.empty()) cfg = load_config(config_path, cfg);
        for (const auto& [key, value] : provided) apply_config_entry(cfg, key, value);
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        return cfg;
    }
};

std::optional<std::string> calibration_arg(const std::string& path, bool identity) {
    if (identity) return std::nullopt;
    if (path.empty()) throw ConfigError("supply --calibration FILE or --identity-calibration");
    return path;
}

std::vector<double> parse_tuple(const std::string& s, std::size_t n, const std::string& what) {
    std::vector<double> vals;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) vals.push_back(std::stod(item));
    if (vals.size() != n)
        throw ConfigError(what + " needs " + std::to_string(n) + " comma-separated values");
    return vals;
}

int cmd_synth(const std::string& out_dir, const std::string& preset, const std::string& dims_s,
              const std::string& spacing_s, double background, double noise_sigma,
              std::uint64_t seed, const std::vector<std::string>& lesion_s,
              const std::vector<std::string>& fixation_s, const std::string& pattern_s,
              double jitter_sigma, std::uint64_t gaze_seed) {
    PhantomSpec ps;
    GazeSimSpec gs;
    if (preset == "demo") {
        ps.nx = 64;
        ps.ny = 64;
        ps.nz = 8;
        ps.sx = 0.58;
        ps.sy = 0.58;
        ps.sz = 1.5;
        ps.background = 0.0;
        ps.noise_sigma = 20.0;
        ps.rng_seed = 7;
        ps.lesions.push_back({{32, 32, 4}, {5.0, 5.0, 5.0}, 300.0});
        gs.pattern = GazePattern::Scanner;
        gs.fixation_targets.push_back({4, {32.0, 32.0}, 1500.0});
        gs.jitter_sigma_mm = 1.0;
        gs.rng_seed = 11;
    } else if (!preset.empty()) {
        throw ConfigError("unknown preset '" + preset + "'");
    } else {
        const auto dims = parse_tuple(dims_s, 3, "--dims");
        const auto spacing = parse_tuple(spacing_s, 3, "--spacing");
        ps.nx = static_cast<int>(dims[0]);
        ps.ny = static_cast<int>(dims[1]);
        ps.nz = static_cast<int>(dims[2]);
        ps.sx = spacing[0];
        ps.sy = spacing[1];
        ps.sz = spacing[2];
        ps.background = background;
        ps.noise_sigma = noise_sigma;
        ps.rng_seed = seed;
        for (const auto& l : lesion_s) {
            const auto v = parse_tuple(l, 7, "--lesion");
            ps.lesions.push_back({{static_cast<int>(v[0]), static_cast<int>(v[1]),
                                   static_cast<int>(v[2])},
                                  {v[3], v[4], v[5]},
                                  v[6]});
        }
        for (const auto& f : fixation_s) {
            const auto v = parse_tuple(f, 4, "--fixation");
            gs.fixation_targets.push_back({static_cast<int>(v[0]), {v[1], v[2]}, v[3]});
        }
        if (pattern_s == "driller")
            gs.pattern = GazePattern::Driller;
        else if (pattern_s == "scanner")
            gs.pattern = GazePattern::Scanner;
        else
            throw ConfigError("--pattern must be driller or scanner");
        gs.jitter_sigma_mm = jitter_sigma;
        gs.rng_seed = gaze_seed;
    }

    fs::create_directories(out_dir);
    const Phantom phantom = make_phantom(ps);
    write_volume(phantom.volume, (fs::path(out_dir) / "volume.hdr").string());
    write_mask(phantom.mask, (fs::path(out_dir) / "mask.hdr").string());
    if (!gs.fixation_targets.empty()) {
        const SimulatedGaze sim = make_gaze(gs, ps);
        std::ofstream((fs::path(out_dir) / "gaze.csv")) << sim.gaze_csv;
        std::ofstream((fs::path(out_dir) / "viewer.csv")) << sim.viewer_csv;
    }
    std::cout << "wrote phantom (" << ps.nx << "x" << ps.ny << "x" << ps.nz << ") to " << out_dir
              << "\n";
    return 0;
}

int cmd_attention(const std::string& volume_path, const std::string& gaze_path,
                  const std::string& viewer_path, const std::string& calib_path,
                  bool identity_calib, const ParamFlags& flags, const std::string& out_dir) {
    const PipelineConfig cfg = flags.resolve(out_dir);
    const Volume vol = read_volume(volume_path);
    const auto calib = calibration_arg(calib_path, identity_calib);
    const SceneToStimulusTransform transform =
        calib ? read_calibration(*calib) : SceneToStimulusTransform{};
    GazeTrace trace = parse_gaze_log(gaze_path, transform, vol.nx, vol.ny);
    const auto events = parse_viewer_log(viewer_path);
    trace = assign_slices(std::move(trace), events, cfg.default_slice);

    GazeParams gp = cfg.gaze;
    gp.pixel_pitch_mm = vol.sx;
    const auto points = stabilize_trace(trace, gp);
    std::set<int> slices;
    for (const auto& p : points) slices.insert(p.slice);
    fs::create_directories(cfg.out_dir);
    std::vector<AttentionMap> maps;
    for (int z : slices) {
        maps.push_back(build_attention_map(points, z, gp, vol.nx, vol.ny));
        const std::string base =
            (fs::path(cfg.out_dir) / ("attention_slice_" + std::to_string(z))).string();
        write_scalar_map(maps.back().values, base + ".raw");
        write_pgm_preview(maps.back().values, base + ".pgm");
    }
    const auto ranked = rank_regions(maps);
    write_regions_csv(ranked, (fs::path(cfg.out_dir) / "regions.csv").string());
    std::cout << ranked.size() << " attention regions\n";
    return 0;
}

int cmd_saliency(const std::string& volume_path, const std::string& regions_path,
                 const ParamFlags& flags, const std::string& out_dir) {
    const PipelineConfig cfg = flags.resolve(out_dir);
    const Volume vol = read_volume(volume_path);
    auto regions = read_regions_csv(regions_path);
    std::vector<AttentionRegion> selected;
    if (cfg.top_k > 0) {
        for (const auto& r : regions) {
            if (static_cast<int>(selected.size()) >= cfg.top_k) break;
            selected.push_back(r);
        }
    } else {
        for (const auto& r : regions)
            if (r.attention >= 0.5) selected.push_back(r);
    }
    fs::create_directories(cfg.out_dir);
    for (std::size_t i = 0; i < selected.size(); ++i) {
        const fs::path dir = fs::path(cfg.out_dir) / ("region_" + std::to_string(i));
        fs::create_directories(dir);
        const Grid2 slice_img = extract_slice(vol, selected[i].slice);
        try {
            const RegionSeeding rs =
                seed_region(slice_img, selected[i], vol.sx, vol.sy, cfg.saliency, cfg.seeding);
            write_scalar_map(rs.smap.values, (dir / "saliency.raw").string());
            write_pgm_preview(rs.smap.values, (dir / "saliency.pgm").string());
            write_seed_csv(rs.seeds, (dir / "seeds.csv").string());
            std::cout << "region " << i << ": fg (" << rs.seeds.fg[0].x << ","
                      << rs.seeds.fg[0].y << "), " << rs.seeds.bg.size() << " bg seeds\n";
        } catch (const NoBoundaryFound& e) {
            std::cout << "region " << i << ": no boundary (" << e.what() << ")\n";
        }
    }
    return 0;
}

int cmd_rw(const std::string& volume_path, const std::string& seeds_path,
           const ParamFlags& flags, const std::string& out_path) {
    const PipelineConfig cfg = flags.resolve("");
    const Volume vol = read_volume(volume_path);
    const SeedSet seeds = read_seed_csv(seeds_path);
    if (seeds.slice < 0 || seeds.slice >= vol.nz)
        throw ValidationError("seed slice out of volume bounds");
    const Grid2 slice_img = extract_slice(vol, seeds.slice);
    SolveStats stats;
    const Grid2 mask = segment_region(slice_img, seeds, vol.sx, vol.sy, cfg.rw, &stats);
    LabelMask out;
    out.nx = vol.nx;
    out.ny = vol.ny;
    out.nz = 1;
    out.sx = vol.sx;
    out.sy = vol.sy;
    out.sz = vol.sz;
    out.values.resize(mask.size());
    for (std::size_t i = 0; i < mask.size(); ++i) out.values[i] = mask.values[i] != 0.f ? 1 : 0;
    write_mask(out, out_path);
    std::cout << "solved in " << stats.iterations << " iterations, residual " << stats.residual
              << "\n";
    return 0;
}

int cmd_eval(const std::string& pred_path, const std::string& ref_path,
             const std::string& out_path) {
    const LabelMask pred = read_mask(pred_path);
    const LabelMask ref = read_mask(ref_path);
    EvalReport rep;
    for (std::size_t i = 0; i < pred.values.size(); ++i) {
        rep.pred_count += pred.values[i] != 0;
        rep.ref_count += ref.values[i] != 0;
        rep.intersection_count += pred.values[i] && ref.values[i];
    }
    rep.dsc = dice(pred, ref);
    if (rep.pred_count > 0 && rep.ref_count > 0)
        rep.hd_mm = hausdorff_mm(pred, ref);
    else
        rep.notes.push_back("Hausdorff undefined: empty mask");
    const std::string j = report_to_json(rep);
    if (!out_path.empty()) std::ofstream(out_path) << j << "\n";
    std::cout << j << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"gaze-guided lesion segmentation pipeline"};
    app.require_subcommand(1);

    // run
    auto* run = app.add_subcommand("run", "full pipeline: gaze -> attention -> seeds -> mask");
    std::string volume, gaze, viewer, calib, ref_mask, out_dir = "out";
    bool identity_calib = false;
    ParamFlags run_flags;
    run->add_option("--volume", volume)->required();
    run->add_option("--gaze", gaze)->required();
    run->add_option("--viewer", viewer)->required();
    run->add_option("--calibration", calib, "scene->stimulus homography file");
    run->add_flag("--identity-calibration", identity_calib, "use the identity transform");
    run->add_option("--ref-mask", ref_mask, "reference mask for metrics");
    run->add_option("--out", out_dir, "output directory");
    run_flags.attach(run);

    // synth
    auto* synth = app.add_subcommand("synth", "generate a phantom volume and gaze logs");
    std::string synth_out = "synth_out", preset, dims_s = "64,64,8", spacing_s = "1,1,1";
    double background = 0.0, noise_sigma = 0.0, jitter_sigma = 1.5;
    std::uint64_t synth_seed = 0, gaze_seed = 0;
    std::vector<std::string> lesions_s, fixations_s;
    std::string pattern_s = "scanner";
    synth->add_option("--out", synth_out);
    synth->add_option("--preset", preset, "named preset (demo)");
    synth->add_option("--dims", dims_s, "nx,ny,nz");
    synth->add_option("--spacing", spacing_s, "sx,sy,sz in mm");
    synth->add_option("--background", background);
    synth->add_option("--noise-sigma", noise_sigma);
    synth->add_option("--seed", synth_seed);
    synth->add_option("--lesion", lesions_s, "cx,cy,cz,rx_mm,ry_mm,rz_mm,contrast");
    synth->add_option("--fixation", fixations_s, "slice,x,y,dwell_ms");
    synth->add_option("--pattern", pattern_s, "driller|scanner");
    synth->add_option("--jitter-sigma-mm", jitter_sigma);
    synth->add_option("--gaze-seed", gaze_seed);

    // attention
    auto* attention = app.add_subcommand("attention", "gaze logs -> attention maps and regions");
    std::string a_volume, a_gaze, a_viewer, a_calib, a_out = "out";
    bool a_identity = false;
    ParamFlags attention_flags;
    attention->add_option("--volume", a_volume)->required();
    attention->add_option("--gaze", a_gaze)->required();
    attention->add_option("--viewer", a_viewer)->required();
    attention->add_option("--calibration", a_calib);
    attention->add_flag("--identity-calibration", a_identity);
    attention->add_option("--out", a_out);
    attention_flags.attach(attention);

    // saliency
    auto* saliency = app.add_subcommand("saliency", "regions -> saliency maps and seeds");
    std::string s_volume, s_regions, s_out = "out";
    ParamFlags saliency_flags;
    saliency->add_option("--volume", s_volume)->required();
    saliency->add_option("--regions", s_regions)->required();
    saliency->add_option("--out", s_out);
    saliency_flags.attach(saliency);

    // rw
    auto* rw = app.add_subcommand("rw", "random-walker segmentation from a seed csv");
    std::string r_volume, r_seeds, r_out = "mask.hdr";
    ParamFlags rw_flags;
    rw->add_option("--volume", r_volume)->required();
    rw->add_option("--seeds", r_seeds)->required();
    rw->add_option("--out", r_out);
    rw_flags.attach(rw);

    // eval
    auto* eval = app.add_subcommand("eval", "dice and Hausdorff between two masks");
    std::string e_pred, e_ref, e_out;
    eval->add_option("--pred", e_pred)->required();
    eval->add_option("--ref", e_ref)->required();
    eval->add_option("--out", e_out, "report json path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            const PipelineConfig cfg = run_flags.resolve(out_dir);
            const auto calib_opt = calibration_arg(calib, identity_calib);
            std::optional<std::string> ref_opt;
            if (!ref_mask.empty()) ref_opt = ref_mask;
            const PipelineResult res =
                run_pipeline(volume, gaze, viewer, calib_opt, ref_opt, cfg);
            for (const auto& n : res.notes) std::cout << "note: " << n << "\n";
            for (const auto& o : res.outcomes)
                std::cout << "region " << o.rank << " (slice " << o.region.slice
                          << "): " << o.status << "\n";
            if (res.report) {
                std::cout << "dsc " << res.report->dsc;
                if (res.report->hd_mm) std::cout << ", hd " << *res.report->hd_mm << " mm";
                std::cout << "\n";
            }
            const bool all_no_boundary =
                !res.outcomes.empty() &&
                std::all_of(res.outcomes.begin(), res.outcomes.end(),
                            [](const RegionOutcome& o) { return !o.has_mask; });
            return all_no_boundary ? kExitNoBoundary : 0;
        }
        if (synth->parsed())
            return cmd_synth(synth_out, preset, dims_s, spacing_s, background, noise_sigma,
                             synth_seed, lesions_s, fixations_s, pattern_s, jitter_sigma,
                             gaze_seed);
        if (attention->parsed())
            return cmd_attention(a_volume, a_gaze, a_viewer, a_calib, a_identity,
                                 attention_flags, a_out);
        if (saliency->parsed()) return cmd_saliency(s_volume, s_regions, saliency_flags, s_out);
        if (rw->parsed()) return cmd_rw(r_volume, r_seeds, rw_flags, r_out);
        if (eval->parsed()) return cmd_eval(e_pred, e_ref, e_out);
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return kExitParse;
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kExitParse;
    } catch (const FormatError& e) {
        std::cerr << "format error: " << e.what() << "\n";
        return kExitParse;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitParse;
    } catch (const ConvergenceError& e) {
        std::cerr << "convergence error: " << e.what() << "\n";
        return kExitConvergence;
    } catch (const NoBoundaryFound& e) {
        std::cerr << "no boundary: " << e.what() << "\n";
        return kExitNoBoundary;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    return 0;
}
