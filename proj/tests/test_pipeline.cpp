#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include "gaze2seg/errors.hpp"
#include "gaze2seg/ingest.hpp"
#include "gaze2seg/pipeline.hpp"
#include "gaze2seg/synth.hpp"

using namespace g2s;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

fs::path write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
    return path;
}

}  // namespace

TEST_CASE("apply_config_entry") {
    PipelineConfig cfg;
    SUBCASE("each key lands on its field") {
        apply_config_entry(cfg, "epsilon_mm", "5.5");
        apply_config_entry(cfg, "t_hat_ms", "250");
        apply_config_entry(cfg, "patch_size", "5");
        apply_config_entry(cfg, "k_patches", "32");
        apply_config_entry(cfg, "lambda", "2");
        apply_config_entry(cfg, "scales", "1.0,0.5");
        apply_config_entry(cfg, "foci_threshold", "0.8");
        apply_config_entry(cfg, "beta", "45");
        apply_config_entry(cfg, "top_k", "2");
        apply_config_entry(cfg, "jobs", "3");
        apply_config_entry(cfg, "out_dir", "somewhere");
        CHECK(cfg.gaze.epsilon_mm == 5.5);
        CHECK(cfg.gaze.t_hat_ms == 250);
        CHECK(cfg.saliency.patch_size == 5);
        CHECK(cfg.saliency.k_patches == 32);
        CHECK(cfg.saliency.lambda == 2);
        CHECK(cfg.saliency.scales == std::vector<double>{1.0, 0.5});
        CHECK(cfg.saliency.foci_threshold == 0.8);
        CHECK(cfg.rw.beta == 45);
        CHECK(cfg.top_k == 2);
        CHECK(cfg.jobs == 3);
        CHECK(cfg.out_dir == "somewhere");
    }
    SUBCASE("unknown key") {
        CHECK_THROWS_AS(apply_config_entry(cfg, "episilon_mm", "5"), ConfigError);
    }
    SUBCASE("non-numeric value") {
        CHECK_THROWS_AS(apply_config_entry(cfg, "beta", "fast"), ConfigError);
    }
    SUBCASE("integer key rejects fractions") {
        CHECK_THROWS_AS(apply_config_entry(cfg, "jobs", "1.5"), ConfigError);
    }
    SUBCASE("range checks") {
        CHECK_THROWS_AS(apply_config_entry(cfg, "epsilon_mm", "0"), ConfigError);
        CHECK_THROWS_AS(apply_config_entry(cfg, "patch_size", "4"), ConfigError);
        CHECK_THROWS_AS(apply_config_entry(cfg, "foci_threshold", "1.0"), ConfigError);
        CHECK_THROWS_AS(apply_config_entry(cfg, "cg_tolerance", "2"), ConfigError);
        CHECK_THROWS_AS(apply_config_entry(cfg, "scales", "1.0,1.5"), ConfigError);
        CHECK_THROWS_AS(apply_config_entry(cfg, "jobs", "0"), ConfigError);
    }
}

TEST_CASE("load_config") {
    const fs::path dir = temp_dir("g2s_cfg");
    SUBCASE("comments, blank lines, and padding are tolerated") {
        const auto path = write_file(dir / "a.cfg",
                                     "# pipeline settings\n"
                                     "\n"
                                     "  epsilon_mm = 6.0  # tighter merge\n"
                                     "top_k=1\n");
        const PipelineConfig cfg = load_config(path.string());
        CHECK(cfg.gaze.epsilon_mm == 6.0);
        CHECK(cfg.top_k == 1);
        CHECK(cfg.gaze.t_hat_ms == 500);  // untouched default
    }
    SUBCASE("file values land on top of the base") {
        PipelineConfig base;
        base.jobs = 7;
        base.top_k = 3;
        const auto path = write_file(dir / "b.cfg", "top_k=5\n");
        const PipelineConfig cfg = load_config(path.string(), base);
        CHECK(cfg.top_k == 5);
        CHECK(cfg.jobs == 7);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(load_config((dir / "nope.cfg").string()), ConfigError);
    }
    SUBCASE("line without equals sign") {
        const auto path = write_file(dir / "c.cfg", "beta 90\n");
        CHECK_THROWS_AS(load_config(path.string()), ConfigError);
    }
}

TEST_CASE("seed csv round-trip") {
    const fs::path dir = temp_dir("g2s_seedcsv");
    SeedSet seeds;
    seeds.slice = 4;
    seeds.fg = {{31, 33}};
    seeds.bg = {{40, 33}, {22, 33}, {31, 42}, {31, 24}};
    const auto path = (dir / "seeds.csv").string();
    write_seed_csv(seeds, path);
    const SeedSet back = read_seed_csv(path);
    CHECK(back.slice == 4);
    REQUIRE(back.fg.size() == 1);
    CHECK(back.fg[0] == PixelCoord{31, 33});
    REQUIRE(back.bg.size() == 4);
    CHECK(back.bg[0] == PixelCoord{40, 33});
    CHECK(back.bg[3] == PixelCoord{31, 24});

    SUBCASE("mixed slices rejected") {
        write_file(dir / "bad.csv", "label,slice,x,y\nfg,1,2,3\nbg,2,4,5\n");
        CHECK_THROWS_AS(read_seed_csv((dir / "bad.csv").string()), ValidationError);
    }
    SUBCASE("unknown label rejected") {
        write_file(dir / "bad2.csv", "label,slice,x,y\nmg,1,2,3\n");
        CHECK_THROWS_AS(read_seed_csv((dir / "bad2.csv").string()), ParseError);
    }
    SUBCASE("wrong header rejected") {
        write_file(dir / "bad3.csv", "slice,label,x,y\nfg,1,2,3\n");
        CHECK_THROWS_AS(read_seed_csv((dir / "bad3.csv").string()), ParseError);
    }
}

TEST_CASE("regions csv round-trip preserves doubles exactly") {
    const fs::path dir = temp_dir("g2s_regcsv");
    AttentionRegion r;
    r.slice = 3;
    r.center = {31.25, 40.0 / 3.0};
    r.radius_mm = 7.5;
    r.attention = 2.0 / 3.0;
    r.t_first_ms = 1234;
    const auto path = (dir / "regions.csv").string();
    write_regions_csv({r}, path);
    const auto back = read_regions_csv(path);
    REQUIRE(back.size() == 1);
    CHECK(back[0].slice == 3);
    CHECK(back[0].center.x == r.center.x);
    CHECK(back[0].center.y == r.center.y);
    CHECK(back[0].radius_mm == r.radius_mm);
    CHECK(back[0].attention == r.attention);
    CHECK(back[0].t_first_ms == 1234);
}

TEST_CASE("seed_region on a lesion slice") {
    PhantomSpec spec;
    spec.nx = spec.ny = 64;
    spec.nz = 1;
    spec.background = 100;
    spec.noise_sigma = 5;
    spec.rng_seed = 3;
    spec.lesions = {{{30, 34, 0}, {5, 5, 1}, 300}};
    const Phantom p = make_phantom(spec);
    const Grid2 slice = extract_slice(p.volume, 0);

    AttentionRegion region;
    region.slice = 0;
    region.center = {30, 34};
    region.radius_mm = 7.5;
    region.attention = 1.0;

    SaliencyParams sal;
    SeedingParams seeding;
    const RegionSeeding rs = seed_region(slice, region, 1.0, 1.0, sal, seeding);

    // window covers the region disk plus margin, clamped to the slice
    CHECK(rs.window.x0 <= 30 - 7);
    CHECK(rs.window.x0 + rs.window.width > 30 + 7);
    CHECK(rs.smap.values.width == rs.window.width);

    // FG inside the lesion, all BG outside it
    CHECK(p.mask.at(rs.seeds.fg[0].x, rs.seeds.fg[0].y, 0) == 1);
    REQUIRE(rs.seeds.bg.size() == 4);
    for (const auto& b : rs.seeds.bg) CHECK(p.mask.at(b.x, b.y, 0) == 0);

    // repeatable bit for bit
    const RegionSeeding rs2 = seed_region(slice, region, 1.0, 1.0, sal, seeding);
    CHECK(rs2.smap.values.values == rs.smap.values.values);
    CHECK(rs2.seeds.fg[0] == rs.seeds.fg[0]);
}

TEST_CASE("run_pipeline end to end on a synthetic study") {
    const fs::path dir = temp_dir("g2s_pipe");

    PhantomSpec spec;
    spec.nx = spec.ny = 64;
    spec.nz = 8;
    spec.sx = spec.sy = 0.58;
    spec.sz = 1.5;
    spec.background = 100;
    spec.noise_sigma = 10;
    spec.rng_seed = 7;
    spec.lesions = {{{32, 32, 4}, {5, 5, 5}, 300}};
    const Phantom p = make_phantom(spec);
    write_volume(p.volume, (dir / "vol.hdr").string());
    write_mask(p.mask, (dir / "ref.hdr").string());

    GazeSimSpec gaze;
    gaze.fixation_targets = {{4, {32, 32}, 1500}};
    gaze.jitter_sigma_mm = 1.0;
    gaze.rng_seed = 11;
    const SimulatedGaze sim = make_gaze(gaze, spec);
    write_file(dir / "gaze.csv", sim.gaze_csv);
    write_file(dir / "viewer.csv", sim.viewer_csv);

    PipelineConfig cfg;
    cfg.out_dir = (dir / "out").string();
    cfg.jobs = 2;
    const PipelineResult res =
        run_pipeline((dir / "vol.hdr").string(), (dir / "gaze.csv").string(),
                     (dir / "viewer.csv").string(), std::nullopt, (dir / "ref.hdr").string(), cfg);

    REQUIRE(!res.outcomes.empty());
    CHECK(res.outcomes[0].status == "ok");
    CHECK(res.outcomes[0].region.slice == 4);
    REQUIRE(res.report.has_value());
    CHECK(res.report->slices_restricted);
    CHECK(res.report->dsc >= 0.85);
    REQUIRE(res.report->hd_mm.has_value());
    CHECK(*res.report->hd_mm <= 3.0);

    // the composite matches what was written to disk
    const LabelMask disk_mask = read_mask((dir / "out/composite_mask.hdr").string());
    CHECK(disk_mask.values == res.composite.values);

    for (const char* artifact :
         {"regions.csv", "report.json", "attention_slice_4.raw", "attention_slice_4.pgm",
          "region_0/saliency.raw", "region_0/saliency.pgm", "region_0/seeds.csv",
          "region_0/mask.hdr"})
        CHECK(fs::exists(dir / "out" / artifact));

    // dumped seeds reload to the seeds the pipeline used
    const SeedSet seeds = read_seed_csv((dir / "out/region_0/seeds.csv").string());
    CHECK(seeds.fg[0] == res.outcomes[0].seeds.fg[0]);
    CHECK(seeds.bg.size() == res.outcomes[0].seeds.bg.size());
}

TEST_CASE("run_pipeline with no qualifying attention regions") {
    const fs::path dir = temp_dir("g2s_pipe_empty");
    PhantomSpec spec;
    spec.nx = spec.ny = 32;
    spec.nz = 2;
    spec.background = 50;
    const Phantom p = make_phantom(spec);
    write_volume(p.volume, (dir / "vol.hdr").string());

    // a single 100 ms glance never crosses the dwell threshold
    GazeSimSpec gaze;
    gaze.fixation_targets = {{0, {16, 16}, 100}};
    gaze.jitter_sigma_mm = 0.5;
    write_file(dir / "gaze.csv", make_gaze(gaze, spec).gaze_csv);
    write_file(dir / "viewer.csv", make_gaze(gaze, spec).viewer_csv);

    PipelineConfig cfg;
    cfg.out_dir = (dir / "out").string();
    const PipelineResult res =
        run_pipeline((dir / "vol.hdr").string(), (dir / "gaze.csv").string(),
                     (dir / "viewer.csv").string(), std::nullopt, std::nullopt, cfg);
    CHECK(res.outcomes.empty());
    bool noted = false;
    for (const auto& n : res.notes) noted = noted || n == "no attention regions";
    CHECK(noted);
    for (std::uint8_t v : res.composite.values) CHECK(v == 0);
    CHECK(fs::exists(dir / "out/report.json"));
}
