#include "gaze2seg/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "gaze2seg/errors.hpp"
#include "gaze2seg/ingest.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace g2s {

namespace {

double to_real(const std::string& v, const std::string& key) {
    try {
        std::size_t pos = 0;
        double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("bad value for " + key + ": '" + v + "'");
    }
}

int to_int(const std::string& v, const std::string& key) {
    const double d = to_real(v, key);
    if (d != std::floor(d)) throw ConfigError(key + " must be an integer");
    return static_cast<int>(d);
}

std::vector<double> to_scales(const std::string& v, const std::string& key) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(to_real(item, key));
    if (out.empty()) throw ConfigError(key + " needs at least one scale");
    for (double s : out)
        if (!(s > 0.0 && s <= 1.0)) throw ConfigError(key + " entries must be in (0,1]");
    return out;
}

}  // namespace

void apply_config_entry(PipelineConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "epsilon_mm") cfg.gaze.epsilon_mm = to_real(value, key);
    else if (key == "t_hat_ms") cfg.gaze.t_hat_ms = to_real(value, key);
    else if (key == "patch_size") cfg.saliency.patch_size = to_int(value, key);
    else if (key == "k_patches") cfg.saliency.k_patches = to_int(value, key);
    else if (key == "lambda") cfg.saliency.lambda = to_real(value, key);
    else if (key == "scales") cfg.saliency.scales = to_scales(value, key);
    else if (key == "foci_threshold") cfg.saliency.foci_threshold = to_real(value, key);
    else if (key == "window_margin_mm") cfg.saliency.window_margin_mm = to_real(value, key);
    else if (key == "max_radius_mm") cfg.seeding.max_radius_mm = to_real(value, key);
    else if (key == "gradient_quantile") cfg.seeding.gradient_quantile = to_real(value, key);
    else if (key == "drop_fraction") cfg.seeding.drop_fraction = to_real(value, key);
    else if (key == "bg_margin_px") cfg.seeding.bg_margin_px = to_int(value, key);
    else if (key == "beta") cfg.rw.beta = to_real(value, key);
    else if (key == "cg_tolerance") cfg.rw.cg_tolerance = to_real(value, key);
    else if (key == "max_iters") cfg.rw.max_iters = to_int(value, key);
    else if (key == "crop_margin_mm") cfg.rw.crop_margin_mm = to_real(value, key);
    else if (key == "top_k") cfg.top_k = to_int(value, key);
    else if (key == "jobs") cfg.jobs = to_int(value, key);
    else if (key == "default_slice") cfg.default_slice = to_int(value, key);
    else if (key == "out_dir") cfg.out_dir = value;
    else throw ConfigError("unknown config key '" + key + "'");

    if (cfg.gaze.epsilon_mm <= 0) throw ConfigError("epsilon_mm must be positive");
    if (cfg.gaze.t_hat_ms < 0) throw ConfigError("t_hat_ms must be non-negative");
    if (cfg.saliency.patch_size < 3 || cfg.saliency.patch_size % 2 == 0)
        throw ConfigError("patch_size must be odd and >= 3");
    if (cfg.saliency.k_patches < 1) throw ConfigError("k_patches must be >= 1");
    if (cfg.saliency.lambda < 0) throw ConfigError("lambda must be non-negative");
    if (!(cfg.saliency.foci_threshold > 0 && cfg.saliency.foci_threshold < 1))
        throw ConfigError("foci_threshold must be in (0,1)");
    if (cfg.rw.beta < 0) throw ConfigError("beta must be non-negative");
    if (!(cfg.rw.cg_tolerance > 0 && cfg.rw.cg_tolerance < 1))
        throw ConfigError("cg_tolerance must be in (0,1)");
    if (cfg.jobs < 1) throw ConfigError("jobs must be >= 1");
}

PipelineConfig load_config(const std::string& path, PipelineConfig base) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key=value");
        auto strip = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            if (b == std::string::npos) return std::string();
            const auto e = s.find_last_not_of(" \t\r");
            return s.substr(b, e - b + 1);
        };
        apply_config_entry(base, strip(line.substr(0, eq)), strip(line.substr(eq + 1)));
    }
    return base;
}

RegionSeeding seed_region(const Grid2& slice_image, const AttentionRegion& region,
                          double sx_mm, double sy_mm, const SaliencyParams& sal_params,
                          const SeedingParams& seed_params) {
    const double rx = region.radius_mm / sx_mm + sal_params.window_margin_mm / sx_mm;
    const double ry = region.radius_mm / sy_mm + sal_params.window_margin_mm / sy_mm;
    WindowRect win;
    win.x0 = std::max(0, static_cast<int>(std::floor(region.center.x - rx)));
    win.y0 = std::max(0, static_cast<int>(std::floor(region.center.y - ry)));
    const int x1 = std::min(slice_image.width - 1, static_cast<int>(std::ceil(region.center.x + rx)));
    const int y1 = std::min(slice_image.height - 1, static_cast<int>(std::ceil(region.center.y + ry)));
    win.width = x1 - win.x0 + 1;
    win.height = y1 - win.y0 + 1;
    if (win.width < 1 || win.height < 1)
        throw ValidationError("attention region lies outside the slice");

    Grid2 window(win.width, win.height);
    for (int y = 0; y < win.height; ++y)
        for (int x = 0; x < win.width; ++x)
            window.at(x, y) = slice_image.at(win.x0 + x, win.y0 + y);

    RegionSeeding out;
    out.window = win;
    out.smap = multi_scale_saliency(window, sal_params);
    out.smap.window = win;
    refine_with_foci(out.smap, sal_params);

    const PixelCoord fg = select_fg_seed(region, out.smap, sx_mm);
    const Grid2 grad = gradient_magnitude(slice_image, sx_mm, sy_mm);
    const double t_g = gradient_threshold(grad, win, seed_params.gradient_quantile);
    out.seeds.slice = region.slice;
    out.seeds.fg = {fg};
    out.seeds.bg = select_bg_seeds(fg, grad, t_g, sx_mm, sy_mm, seed_params);
    return out;
}

void write_seed_csv(const SeedSet& seeds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot write seed csv: " + path);
    out << "label,slice,x,y\n";
    for (const auto& p : seeds.fg) out << "fg," << seeds.slice << "," << p.x << "," << p.y << "\n";
    for (const auto& p : seeds.bg) out << "bg," << seeds.slice << "," << p.x << "," << p.y << "\n";
}

SeedSet read_seed_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open seed csv: " + path);
    std::string line;
    int lineno = 0;
    SeedSet seeds;
    bool have_slice = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        if (lineno == 1) {
            if (line.rfind("label,slice,x,y", 0) != 0)
                throw ParseError(path + ":1: expected header label,slice,x,y");
            continue;
        }
        std::stringstream ss(line);
        std::string label, slice_s, x_s, y_s;
        if (!std::getline(ss, label, ',') || !std::getline(ss, slice_s, ',') ||
            !std::getline(ss, x_s, ',') || !std::getline(ss, y_s))
            throw ParseError(path + ":" + std::to_string(lineno) + ": expected 4 fields");
        const int slice = to_int(slice_s, "slice");
        const PixelCoord p{to_int(x_s, "x"), to_int(y_s, "y")};
        if (have_slice && slice != seeds.slice)
            throw ValidationError(path + ": seeds span multiple slices");
        seeds.slice = slice;
        have_slice = true;
        if (label == "fg")
            seeds.fg.push_back(p);
        else if (label == "bg")
            seeds.bg.push_back(p);
        else
            throw ParseError(path + ":" + std::to_string(lineno) + ": unknown label '" + label + "'");
    }
    return seeds;
}

void write_regions_csv(const std::vector<AttentionRegion>& regions, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot write regions csv: " + path);
    out << "rank,slice,center_x,center_y,radius_mm,attention,t_first_ms\n";
    out.precision(17);
    for (std::size_t i = 0; i < regions.size(); ++i) {
        const auto& r = regions[i];
        out << i << "," << r.slice << "," << r.center.x << "," << r.center.y << ","
            << r.radius_mm << "," << r.attention << "," << r.t_first_ms << "\n";
    }
}

std::vector<AttentionRegion> read_regions_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open regions csv: " + path);
    std::string line;
    int lineno = 0;
    std::vector<AttentionRegion> regions;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        if (lineno == 1) continue;  // header
        std::stringstream ss(line);
        std::string f[7];
        for (int i = 0; i < 6; ++i)
            if (!std::getline(ss, f[i], ','))
                throw ParseError(path + ":" + std::to_string(lineno) + ": expected 7 fields");
        if (!std::getline(ss, f[6]))
            throw ParseError(path + ":" + std::to_string(lineno) + ": expected 7 fields");
        AttentionRegion r;
        r.slice = to_int(f[1], "slice");
        r.center = {to_real(f[2], "center_x"), to_real(f[3], "center_y")};
        r.radius_mm = to_real(f[4], "radius_mm");
        r.attention = to_real(f[5], "attention");
        r.t_first_ms = static_cast<std::int64_t>(to_real(f[6], "t_first_ms"));
        regions.push_back(r);
    }
    return regions;
}

namespace {

json region_score_json(const RegionScore& s) {
    json j{{"region_rank", s.region_rank}, {"slice", s.slice}, {"dsc", s.dsc}};
    if (s.hd_mm) j["hd_mm"] = *s.hd_mm;
    return j;
}

LabelMask mask_from_outcomes(const Volume& vol, const std::vector<RegionOutcome>& outcomes) {
    LabelMask m;
    m.nx = vol.nx;
    m.ny = vol.ny;
    m.nz = vol.nz;
    m.sx = vol.sx;
    m.sy = vol.sy;
    m.sz = vol.sz;
    m.values.assign(vol.voxel_count(), 0);
    for (const auto& o : outcomes) {
        if (!o.has_mask) continue;
        const int z = o.region.slice;
        for (int y = 0; y < m.ny; ++y)
            for (int x = 0; x < m.nx; ++x)
                if (o.mask.at(x, y) != 0.f) m.at(x, y, z) = 1;
    }
    return m;
}

}  // namespace

std::string report_to_json(const EvalReport& report) {
    json j;
    j["dsc"] = report.dsc;
    if (report.hd_mm) j["hd_mm"] = *report.hd_mm;
    j["counts"] = {{"prediction", report.pred_count},
                   {"reference", report.ref_count},
                   {"intersection", report.intersection_count}};
    j["slices_restricted"] = report.slices_restricted;
    j["per_region"] = json::array();
    for (const auto& s : report.per_region) j["per_region"].push_back(region_score_json(s));
    j["notes"] = report.notes;
    return j.dump(2);
}

PipelineResult run_pipeline(const std::string& volume_path, const std::string& gaze_path,
                            const std::string& viewer_path,
                            const std::optional<std::string>& calibration_path,
                            const std::optional<std::string>& reference_mask_path,
                            const PipelineConfig& config) {
    const Volume vol = read_volume(volume_path);
    const SceneToStimulusTransform transform =
        calibration_path ? read_calibration(*calibration_path) : SceneToStimulusTransform{};

    GazeTrace trace = parse_gaze_log(gaze_path, transform, vol.nx, vol.ny);
    const auto events = parse_viewer_log(viewer_path);
    trace = assign_slices(std::move(trace), events, config.default_slice);

    PipelineResult result;
    if (events.empty())
        result.notes.push_back("viewer log is empty; all gaze mapped to slice " +
                               std::to_string(config.default_slice));
    if (trace.flagged_off_screen > 0)
        result.notes.push_back(std::to_string(trace.flagged_off_screen) +
                               " off-screen gaze samples excluded");

    GazeParams gp = config.gaze;
    gp.pixel_pitch_mm = vol.sx;
    result.points = stabilize_trace(trace, gp);

    std::set<int> slices;
    for (const auto& p : result.points) slices.insert(p.slice);
    for (int z : slices)
        result.attention_maps.push_back(
            build_attention_map(result.points, z, gp, vol.nx, vol.ny));
    result.ranked_regions = rank_regions(result.attention_maps);

    std::vector<AttentionRegion> selected;
    if (config.top_k > 0) {
        for (const auto& r : result.ranked_regions) {
            if (static_cast<int>(selected.size()) >= config.top_k) break;
            selected.push_back(r);
        }
    } else {
        for (const auto& r : result.ranked_regions)
            if (r.attention >= 0.5) selected.push_back(r);
    }
    if (selected.empty()) result.notes.push_back("no attention regions");

    fs::create_directories(config.out_dir);

    // Per-region work; regions are independent so they can run concurrently.
    result.outcomes.resize(selected.size());
    SaliencyParams sal = config.saliency;
    sal.num_threads = selected.size() <= 1 ? config.jobs : 1;
    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr first_error;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= selected.size()) return;
            RegionOutcome& o = result.outcomes[i];
            o.rank = static_cast<int>(i);
            o.region = selected[i];
            try {
                const Grid2 slice_img = extract_slice(vol, o.region.slice);
                const RegionSeeding rs =
                    seed_region(slice_img, o.region, vol.sx, vol.sy, sal, config.seeding);
                o.seeds = rs.seeds;
                o.mask = segment_region(slice_img, rs.seeds, vol.sx, vol.sy, config.rw);
                o.has_mask = true;
                o.status = "ok";
                const fs::path dir = fs::path(config.out_dir) / ("region_" + std::to_string(i));
                fs::create_directories(dir);
                write_scalar_map(rs.smap.values, (dir / "saliency.raw").string());
                write_pgm_preview(rs.smap.values, (dir / "saliency.pgm").string());
                write_seed_csv(rs.seeds, (dir / "seeds.csv").string());
            } catch (const NoBoundaryFound& e) {
                o.status = std::string("no_boundary: ") + e.what();
            } catch (...) {
                const std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        }
    };
    const int n_workers = std::min<int>(config.jobs, std::max<std::size_t>(1, selected.size()));
    std::vector<std::thread> pool;
    for (int t = 1; t < n_workers; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);

    // Deterministic artifact aggregation in rank order.
    for (const auto& o : result.outcomes) {
        if (!o.has_mask) continue;
        const fs::path dir = fs::path(config.out_dir) / ("region_" + std::to_string(o.rank));
        LabelMask rm;
        rm.nx = vol.nx;
        rm.ny = vol.ny;
        rm.nz = 1;
        rm.sx = vol.sx;
        rm.sy = vol.sy;
        rm.sz = vol.sz;
        rm.values.resize(static_cast<std::size_t>(vol.nx) * vol.ny);
        for (std::size_t k = 0; k < rm.values.size(); ++k)
            rm.values[k] = o.mask.values[k] != 0.f ? 1 : 0;
        write_mask(rm, (dir / "mask.hdr").string());
    }

    for (const auto& m : result.attention_maps) {
        const std::string base =
            (fs::path(config.out_dir) / ("attention_slice_" + std::to_string(m.slice))).string();
        write_scalar_map(m.values, base + ".raw");
        write_pgm_preview(m.values, base + ".pgm");
    }
    write_regions_csv(result.ranked_regions,
                      (fs::path(config.out_dir) / "regions.csv").string());

    result.composite = mask_from_outcomes(vol, result.outcomes);
    write_mask(result.composite, (fs::path(config.out_dir) / "composite_mask.hdr").string());

    if (reference_mask_path) {
        const LabelMask ref = read_mask(*reference_mask_path);
        if (!ref.dims_match(result.composite))
            throw ValidationError("reference mask dims do not match the volume");
        EvalReport rep;
        std::vector<int> pred_slices;
        for (const auto& o : result.outcomes)
            if (o.has_mask) pred_slices.push_back(o.region.slice);
        LabelMask ref_cmp = ref;
        LabelMask pred_cmp = result.composite;
        if (ref.nz > 1) {
            ref_cmp = restrict_to_slices(ref, pred_slices);
            rep.slices_restricted = true;
            rep.notes.push_back(
                "3D reference compared against the prediction on predicted slices only");
        }
        for (std::size_t i = 0; i < pred_cmp.values.size(); ++i) {
            rep.pred_count += pred_cmp.values[i] != 0;
            rep.ref_count += ref_cmp.values[i] != 0;
            rep.intersection_count += pred_cmp.values[i] && ref_cmp.values[i];
        }
        rep.dsc = dice(pred_cmp, ref_cmp);
        if (rep.pred_count > 0 && rep.ref_count > 0)
            rep.hd_mm = hausdorff_mm(pred_cmp, ref_cmp);
        else
            rep.notes.push_back("pooled Hausdorff undefined: empty prediction or reference");
        for (const auto& o : result.outcomes) {
            if (!o.has_mask) continue;
            LabelMask pm = result.composite;
            std::fill(pm.values.begin(), pm.values.end(), 0);
            const int z = o.region.slice;
            for (int y = 0; y < pm.ny; ++y)
                for (int x = 0; x < pm.nx; ++x)
                    if (o.mask.at(x, y) != 0.f) pm.at(x, y, z) = 1;
            const LabelMask rz = restrict_to_slices(ref, {z});
            RegionScore sc;
            sc.region_rank = o.rank;
            sc.slice = z;
            sc.dsc = dice(pm, rz);
            const bool pm_nonempty =
                std::any_of(pm.values.begin(), pm.values.end(), [](auto v) { return v != 0; });
            const bool rz_nonempty =
                std::any_of(rz.values.begin(), rz.values.end(), [](auto v) { return v != 0; });
            if (pm_nonempty && rz_nonempty) sc.hd_mm = hausdorff_mm(pm, rz);
            rep.per_region.push_back(sc);
        }
        result.report = rep;
    }

    json j;
    j["notes"] = result.notes;
    j["regions"] = json::array();
    for (const auto& o : result.outcomes) {
        json r{{"rank", o.rank},
               {"slice", o.region.slice},
               {"attention", o.region.attention},
               {"status", o.status}};
        if (o.has_mask) {
            r["fg_seed"] = {o.seeds.fg[0].x, o.seeds.fg[0].y};
            json bg = json::array();
            for (const auto& p : o.seeds.bg) bg.push_back({p.x, p.y});
            r["bg_seeds"] = bg;
        }
        j["regions"].push_back(r);
    }
    if (result.report) j["eval"] = json::parse(report_to_json(*result.report));
    std::ofstream rep_out(fs::path(config.out_dir) / "report.json");
    rep_out << j.dump(2) << "\n";

    return result;
}

}  // namespace g2s
