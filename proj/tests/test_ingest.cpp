#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "gaze2seg/errors.hpp"
#include "gaze2seg/ingest.hpp"

using namespace g2s;
namespace fs = std::filesystem;

namespace {

fs::path tmp_dir() {
    const fs::path dir = fs::temp_directory_path() / "g2s_test_ingest";
    fs::create_directories(dir);
    return dir;
}

std::string write_file(const std::string& name, const std::string& content) {
    const fs::path p = tmp_dir() / name;
    std::ofstream(p) << content;
    return p.string();
}

}  // namespace

TEST_CASE("gaze log: identity transform maps straight through") {
    const auto path = write_file("g1.csv", "t_ms,scene_x,scene_y,pupil_mm\n0,100,100,3.2\n");
    const auto trace = parse_gaze_log(path, {}, 512, 512);
    REQUIRE(trace.samples.size() == 1);
    CHECK(trace.samples[0].stim_xy.x == doctest::Approx(100));
    CHECK(trace.samples[0].stim_xy.y == doctest::Approx(100));
    CHECK(*trace.samples[0].pupil_mm == doctest::Approx(3.2));
    CHECK(trace.flagged_off_screen == 0);
}

TEST_CASE("gaze log: scene 640x480 scaled to 512x512 maps center to center") {
    SceneToStimulusTransform t;
    t.h = {512.0 / 640, 0, 0, 0, 512.0 / 480, 0, 0, 0, 1};
    const auto path = write_file("g2.csv", "t_ms,scene_x,scene_y,pupil_mm\n0,320,240,\n");
    const auto trace = parse_gaze_log(path, t, 512, 512);
    CHECK(trace.samples[0].stim_xy.x == doctest::Approx(256));
    CHECK(trace.samples[0].stim_xy.y == doctest::Approx(256));
    CHECK_FALSE(trace.samples[0].pupil_mm.has_value());
}

TEST_CASE("gaze log: 60 Hz cadence preserved in order") {
    const auto path = write_file(
        "g3.csv", "t_ms,scene_x,scene_y,pupil_mm\n0,1,1,\n16,2,2,\n33,3,3,\n");
    const auto trace = parse_gaze_log(path, {}, 512, 512);
    REQUIRE(trace.samples.size() == 3);
    CHECK(trace.samples[0].t_ms == 0);
    CHECK(trace.samples[1].t_ms == 16);
    CHECK(trace.samples[2].t_ms == 33);
}

TEST_CASE("gaze log errors") {
    SUBCASE("malformed row names the line") {
        const auto path = write_file("g4.csv", "t_ms,scene_x,scene_y,pupil_mm\n0,a,b,\n");
        try {
            parse_gaze_log(path, {}, 512, 512);
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(std::string(e.what()).find(":2:") != std::string::npos);
        }
    }
    SUBCASE("non-monotone timestamps") {
        const auto path = write_file("g5.csv", "t_ms,scene_x,scene_y,pupil_mm\n10,1,1,\n5,1,1,\n");
        CHECK_THROWS_AS(parse_gaze_log(path, {}, 512, 512), ValidationError);
    }
    SUBCASE("singular transform") {
        SceneToStimulusTransform t;
        t.h = {1, 0, 0, 1, 0, 0, 0, 0, 1};
        const auto path = write_file("g6.csv", "t_ms,scene_x,scene_y,pupil_mm\n0,1,1,\n");
        CHECK_THROWS_AS(parse_gaze_log(path, t, 512, 512), ConfigError);
    }
}

TEST_CASE("gaze log: off-raster samples flagged, not clamped; parsing lossless") {
    const auto path = write_file(
        "g7.csv", "t_ms,scene_x,scene_y,pupil_mm\n0,10,10,\n16,-5,10,\n33,600,10,\n");
    const auto trace = parse_gaze_log(path, {}, 512, 512);
    CHECK(trace.samples.size() == 3);  // accepted + flagged == data rows
    CHECK(trace.flagged_off_screen == 2);
    CHECK_FALSE(trace.samples[0].off_screen);
    CHECK(trace.samples[1].off_screen);
    CHECK(trace.samples[2].off_screen);
}

TEST_CASE("viewer log parse") {
    SUBCASE("direct parse") {
        const auto path = write_file("v1.csv", "t_ms,kind,slice,payload\n0,slice_change,12,\n");
        const auto events = parse_viewer_log(path);
        REQUIRE(events.size() == 1);
        CHECK(events[0].kind == ViewerEventKind::SliceChange);
        CHECK(*events[0].slice == 12);
    }
    SUBCASE("empty file gives empty list") {
        const auto path = write_file("v2.csv", "t_ms,kind,slice,payload\n");
        CHECK(parse_viewer_log(path).empty());
    }
    SUBCASE("out-of-order timestamps rejected") {
        const auto path = write_file(
            "v3.csv", "t_ms,kind,slice,payload\n10,click,,x\n5,click,,y\n");
        CHECK_THROWS_AS(parse_viewer_log(path), ValidationError);
    }
    SUBCASE("slice_change without slice rejected") {
        const auto path = write_file("v4.csv", "t_ms,kind,slice,payload\n0,slice_change,,\n");
        CHECK_THROWS_AS(parse_viewer_log(path), ValidationError);
    }
    SUBCASE("unknown kinds rejected") {
        const auto path = write_file("v5.csv", "t_ms,kind,slice,payload\n0,zoom,,\n");
        CHECK_THROWS_AS(parse_viewer_log(path), ParseError);
    }
}

namespace {

GazeTrace trace_at(std::vector<std::int64_t> times) {
    GazeTrace t;
    for (auto ms : times) {
        GazeSample s;
        s.t_ms = ms;
        t.samples.push_back(s);
    }
    return t;
}

ViewerEvent slice_change(std::int64_t t, int slice) {
    ViewerEvent e;
    e.t_ms = t;
    e.kind = ViewerEventKind::SliceChange;
    e.slice = slice;
    return e;
}

}  // namespace

TEST_CASE("assign_slices step-function semantics") {
    SUBCASE("latest event at or before the sample wins") {
        auto t = assign_slices(trace_at({20}), {slice_change(10, 5)}, 0);
        CHECK(*t.samples[0].slice == 5);
    }
    SUBCASE("default before any event") {
        auto t = assign_slices(trace_at({5}), {slice_change(10, 5)}, 0);
        CHECK(*t.samples[0].slice == 0);
    }
    SUBCASE("boundary inclusive at event time") {
        auto t = assign_slices(trace_at({10, 29, 30}),
                               {slice_change(10, 5), slice_change(30, 7)}, 0);
        CHECK(*t.samples[0].slice == 5);
        CHECK(*t.samples[1].slice == 5);
        CHECK(*t.samples[2].slice == 7);
    }
}

TEST_CASE("volume io") {
    SUBCASE("smallest volume") {
        const auto hdr = write_file("v_small.hdr",
                                    "dims 2 2 1\nspacing_mm 1 1 1\ndtype f32\ndata v_small.raw\n");
        const float body[4] = {1, 2, 3, 4};
        std::ofstream((tmp_dir() / "v_small.raw"), std::ios::binary)
            .write(reinterpret_cast<const char*>(body), sizeof(body));
        const Volume v = read_volume(hdr);
        CHECK(v.nx == 2);
        CHECK(v.intensities == std::vector<float>{1, 2, 3, 4});
    }
    SUBCASE("round-trip of a 16^3 random volume is bit-exact") {
        Volume v;
        v.nx = v.ny = v.nz = 16;
        v.sx = 0.58;
        v.sy = 0.58;
        v.sz = 1.5;
        v.intensities.resize(v.voxel_count());
        std::mt19937 rng(42);
        std::uniform_real_distribution<float> dist(-1000.f, 1000.f);
        for (auto& x : v.intensities) x = dist(rng);
        const auto hdr = (tmp_dir() / "v_rt.hdr").string();
        write_volume(v, hdr);
        const Volume v2 = read_volume(hdr);
        CHECK(v2.intensities == v.intensities);
        CHECK(v2.sx == v.sx);
        CHECK(v2.nz == v.nz);
        // bytes too
        write_volume(v2, (tmp_dir() / "v_rt2.hdr").string());
        std::ifstream a(tmp_dir() / "v_rt.raw", std::ios::binary);
        std::ifstream b(tmp_dir() / "v_rt2.raw", std::ios::binary);
        const std::string ba((std::istreambuf_iterator<char>(a)), {});
        const std::string bb((std::istreambuf_iterator<char>(b)), {});
        CHECK(ba == bb);
    }
    SUBCASE("short body rejected") {
        const auto hdr = write_file("v_bad.hdr",
                                    "dims 2 2 1\nspacing_mm 1 1 1\ndtype f32\ndata v_bad.raw\n");
        const float body[2] = {1, 2};
        std::ofstream((tmp_dir() / "v_bad.raw"), std::ios::binary)
            .write(reinterpret_cast<const char*>(body), sizeof(body));
        CHECK_THROWS_AS(read_volume(hdr), FormatError);
    }
    SUBCASE("mask round trip") {
        LabelMask m;
        m.nx = 3;
        m.ny = 2;
        m.nz = 2;
        m.values = {1, 0, 1, 0, 0, 1, 1, 1, 0, 0, 1, 0};
        const auto hdr = (tmp_dir() / "m.hdr").string();
        write_mask(m, hdr);
        CHECK(read_mask(hdr).values == m.values);
    }
}

TEST_CASE("homography inverse round-trips scene coordinates") {
    SceneToStimulusTransform t;
    t.h = {0.8, 0.05, 12.0, -0.02, 0.76, -3.5, 1e-4, -2e-4, 1.0};
    const auto inv = t.inverse();
    std::mt19937 rng(1);
    std::uniform_real_distribution<double> dist(0, 640);
    for (int i = 0; i < 200; ++i) {
        const Point2 p{dist(rng), dist(rng)};
        const Point2 back = inv.apply(t.apply(p));
        CHECK(std::abs(back.x - p.x) <= 1e-9 * std::max(1.0, std::abs(p.x)));
        CHECK(std::abs(back.y - p.y) <= 1e-9 * std::max(1.0, std::abs(p.y)));
    }
}

TEST_CASE("calibration file reading") {
    const auto path = write_file("cal.txt", "2 0 0\n0 2 0\n0 0 1\n");
    const auto t = read_calibration(path);
    const Point2 q = t.apply({10, 20});
    CHECK(q.x == doctest::Approx(20));
    CHECK(q.y == doctest::Approx(40));
    const auto bad = write_file("cal_bad.txt", "0 0 0 0 0 0 0 0 0\n");
    CHECK_THROWS_AS(read_calibration(bad), ConfigError);
}

TEST_CASE("scalar map round trip") {
    Grid2 g(5, 4);
    for (std::size_t i = 0; i < g.size(); ++i) g.values[i] = static_cast<float>(i) * 0.25f;
    const auto path = (tmp_dir() / "map.raw").string();
    write_scalar_map(g, path);
    const Grid2 g2 = read_scalar_map(path, 5, 4);
    CHECK(g2.values == g.values);
    write_pgm_preview(g, (tmp_dir() / "map.pgm").string());
    CHECK(fs::file_size(tmp_dir() / "map.pgm") > 0);
}
