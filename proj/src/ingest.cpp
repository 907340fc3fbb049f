#include "gaze2seg/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gaze2seg/errors.hpp"

namespace fs = std::filesystem;

namespace g2s {

SceneToStimulusTransform SceneToStimulusTransform::inverse() const {
    const double d = det();
    if (std::abs(d) <= 1e-12) throw ConfigError("calibration homography is singular");
    const auto& m = h;
    SceneToStimulusTransform inv;
    inv.h = {(m[4] * m[8] - m[5] * m[7]) / d, (m[2] * m[7] - m[1] * m[8]) / d,
             (m[1] * m[5] - m[2] * m[4]) / d, (m[5] * m[6] - m[3] * m[8]) / d,
             (m[0] * m[8] - m[2] * m[6]) / d, (m[2] * m[3] - m[0] * m[5]) / d,
             (m[3] * m[7] - m[4] * m[6]) / d, (m[1] * m[6] - m[0] * m[7]) / d,
             (m[0] * m[4] - m[1] * m[3]) / d};
    return inv;
}

Grid2 extract_slice(const Volume& vol, int z) {
    Grid2 g(vol.nx, vol.ny);
    const std::size_t base = static_cast<std::size_t>(z) * vol.nx * vol.ny;
    std::copy_n(vol.intensities.begin() + base, g.size(), g.values.begin());
    return g;
}

SceneToStimulusTransform read_calibration(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open calibration file: " + path);
    SceneToStimulusTransform t;
    for (double& v : t.h) {
        if (!(in >> v)) throw ConfigError("calibration file needs 9 reals: " + path);
    }
    if (std::abs(t.det()) <= 1e-12) throw ConfigError("calibration homography is singular");
    return t;
}

namespace {

std::vector<std::string> split_csv_row(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

std::string trimmed(const std::string& s) {
    auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

double parse_real(const std::string& s, const std::string& path, int lineno) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ParseError(path + ":" + std::to_string(lineno) + ": bad numeric field '" + s + "'");
    }
}

std::int64_t parse_time(const std::string& s, const std::string& path, int lineno) {
    try {
        std::size_t pos = 0;
        long long v = std::stoll(s, &pos);
        if (pos != s.size() || v < 0) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ParseError(path + ":" + std::to_string(lineno) + ": bad timestamp '" + s + "'");
    }
}

}  // namespace

GazeTrace parse_gaze_log(const std::string& path, const SceneToStimulusTransform& transform,
                         int raster_w, int raster_h) {
    if (std::abs(transform.det()) <= 1e-12) throw ConfigError("calibration homography is singular");
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open gaze log: " + path);
    std::string line;
    int lineno = 0;
    GazeTrace trace;
    std::int64_t prev_t = -1;
    while (std::getline(in, line)) {
        ++lineno;
        if (trimmed(line).empty()) continue;
        if (lineno == 1) {
            if (trimmed(line) != "t_ms,scene_x,scene_y,pupil_mm")
                throw ParseError(path + ":1: expected header t_ms,scene_x,scene_y,pupil_mm");
            continue;
        }
        auto f = split_csv_row(line);
        if (f.size() != 4)
            throw ParseError(path + ":" + std::to_string(lineno) + ": expected 4 fields, got " +
                             std::to_string(f.size()));
        GazeSample s;
        s.t_ms = parse_time(trimmed(f[0]), path, lineno);
        if (s.t_ms < prev_t)
            throw ValidationError(path + ":" + std::to_string(lineno) +
                                  ": non-monotone timestamp " + std::to_string(s.t_ms));
        prev_t = s.t_ms;
        s.scene_xy = {parse_real(trimmed(f[1]), path, lineno), parse_real(trimmed(f[2]), path, lineno)};
        if (!trimmed(f[3]).empty()) s.pupil_mm = parse_real(trimmed(f[3]), path, lineno);
        s.stim_xy = transform.apply(s.scene_xy);
        s.off_screen = !(s.stim_xy.x >= 0 && s.stim_xy.x < raster_w && s.stim_xy.y >= 0 &&
                         s.stim_xy.y < raster_h);
        if (s.off_screen) ++trace.flagged_off_screen;
        trace.samples.push_back(s);
    }
    return trace;
}

std::vector<ViewerEvent> parse_viewer_log(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open viewer log: " + path);
    std::string line;
    int lineno = 0;
    std::vector<ViewerEvent> events;
    std::int64_t prev_t = -1;
    bool saw_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (trimmed(line).empty()) continue;
        if (!saw_header) {
            if (trimmed(line) != "t_ms,kind,slice,payload")
                throw ParseError(path + ":1: expected header t_ms,kind,slice,payload");
            saw_header = true;
            continue;
        }
        auto f = split_csv_row(line);
        if (f.size() != 4)
            throw ParseError(path + ":" + std::to_string(lineno) + ": expected 4 fields");
        ViewerEvent e;
        e.t_ms = parse_time(trimmed(f[0]), path, lineno);
        if (e.t_ms < prev_t)
            throw ValidationError(path + ":" + std::to_string(lineno) +
                                  ": viewer events out of order");
        prev_t = e.t_ms;
        const std::string kind = trimmed(f[1]);
        if (kind == "slice_change")
            e.kind = ViewerEventKind::SliceChange;
        else if (kind == "window_level")
            e.kind = ViewerEventKind::WindowLevel;
        else if (kind == "click")
            e.kind = ViewerEventKind::Click;
        else
            throw ParseError(path + ":" + std::to_string(lineno) + ": unknown event kind '" +
                             kind + "'");
        const std::string slice = trimmed(f[2]);
        if (!slice.empty())
            e.slice = static_cast<int>(parse_time(slice, path, lineno));
        else if (e.kind == ViewerEventKind::SliceChange)
            throw ValidationError(path + ":" + std::to_string(lineno) +
                                  ": slice_change without slice index");
        e.payload = f[3];
        events.push_back(e);
    }
    return events;
}

GazeTrace assign_slices(GazeTrace trace, const std::vector<ViewerEvent>& events,
                        int default_slice) {
    // events are time-sorted; walk them in lockstep with the samples.
    std::size_t ei = 0;
    int current = default_slice;
    for (auto& s : trace.samples) {
        while (ei < events.size() && events[ei].t_ms <= s.t_ms) {
            if (events[ei].kind == ViewerEventKind::SliceChange) current = *events[ei].slice;
            ++ei;
        }
        s.slice = current;
    }
    return trace;
}

namespace {

const char* dtype_name(ScalarType t) {
    switch (t) {
        case ScalarType::U8: return "u8";
        case ScalarType::I16: return "i16";
        default: return "f32";
    }
}

ScalarType dtype_from_name(const std::string& s, const std::string& path) {
    if (s == "u8") return ScalarType::U8;
    if (s == "i16") return ScalarType::I16;
    if (s == "f32") return ScalarType::F32;
    throw FormatError(path + ": unknown dtype '" + s + "'");
}

std::size_t dtype_size(ScalarType t) {
    switch (t) {
        case ScalarType::U8: return 1;
        case ScalarType::I16: return 2;
        default: return 4;
    }
}

struct VolumeHeader {
    int nx, ny, nz;
    double sx, sy, sz;
    ScalarType dtype;
    std::string data_file;
};

VolumeHeader read_header(const std::string& header_path) {
    std::ifstream in(header_path);
    if (!in) throw FormatError("cannot open volume header: " + header_path);
    VolumeHeader h{};
    bool have_dims = false, have_spacing = false, have_dtype = false;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string key;
        if (!(ls >> key)) continue;
        if (key == "dims") {
            if (!(ls >> h.nx >> h.ny >> h.nz) || h.nx < 1 || h.ny < 1 || h.nz < 1)
                throw FormatError(header_path + ": bad dims");
            have_dims = true;
        } else if (key == "spacing_mm") {
            if (!(ls >> h.sx >> h.sy >> h.sz) || h.sx <= 0 || h.sy <= 0 || h.sz <= 0)
                throw FormatError(header_path + ": bad spacing_mm");
            have_spacing = true;
        } else if (key == "dtype") {
            std::string name;
            ls >> name;
            h.dtype = dtype_from_name(name, header_path);
            have_dtype = true;
        } else if (key == "data") {
            ls >> h.data_file;
        } else {
            throw FormatError(header_path + ": unknown header key '" + key + "'");
        }
    }
    if (!have_dims || !have_spacing || !have_dtype)
        throw FormatError(header_path + ": header requires dims, spacing_mm, dtype");
    if (h.data_file.empty())
        h.data_file = fs::path(header_path).stem().string() + ".raw";
    return h;
}

std::vector<char> read_body(const std::string& header_path, const VolumeHeader& h) {
    const fs::path body_path = fs::path(header_path).parent_path() / h.data_file;
    std::ifstream body(body_path, std::ios::binary);
    if (!body) throw FormatError("cannot open volume body: " + body_path.string());
    const std::size_t expect =
        static_cast<std::size_t>(h.nx) * h.ny * h.nz * dtype_size(h.dtype);
    std::vector<char> bytes((std::istreambuf_iterator<char>(body)),
                            std::istreambuf_iterator<char>());
    if (bytes.size() != expect)
        throw FormatError(body_path.string() + ": body size " + std::to_string(bytes.size()) +
                          " does not match header (" + std::to_string(expect) + " bytes)");
    return bytes;
}

void write_body(const std::string& header_path, const std::string& data_file,
                const void* data, std::size_t nbytes) {
    const fs::path body_path = fs::path(header_path).parent_path() / data_file;
    std::ofstream body(body_path, std::ios::binary);
    if (!body) throw FormatError("cannot write volume body: " + body_path.string());
    body.write(static_cast<const char*>(data), static_cast<std::streamsize>(nbytes));
}

void write_header(const std::string& header_path, int nx, int ny, int nz, double sx, double sy,
                  double sz, ScalarType dtype, const std::string& data_file) {
    std::ofstream out(header_path);
    if (!out) throw FormatError("cannot write volume header: " + header_path);
    out << "dims " << nx << " " << ny << " " << nz << "\n";
    out << "spacing_mm " << sx << " " << sy << " " << sz << "\n";
    out << "dtype " << dtype_name(dtype) << "\n";
    out << "data " << data_file << "\n";
}

}  // namespace

Volume read_volume(const std::string& header_path) {
    const VolumeHeader h = read_header(header_path);
    const auto bytes = read_body(header_path, h);
    Volume vol;
    vol.nx = h.nx;
    vol.ny = h.ny;
    vol.nz = h.nz;
    vol.sx = h.sx;
    vol.sy = h.sy;
    vol.sz = h.sz;
    vol.dtype = h.dtype;
    const std::size_t n = vol.voxel_count();
    vol.intensities.resize(n);
    switch (h.dtype) {
        case ScalarType::U8: {
            const auto* p = reinterpret_cast<const std::uint8_t*>(bytes.data());
            for (std::size_t i = 0; i < n; ++i) vol.intensities[i] = static_cast<float>(p[i]);
            break;
        }
        case ScalarType::I16: {
            const auto* p = reinterpret_cast<const std::int16_t*>(bytes.data());
            for (std::size_t i = 0; i < n; ++i) vol.intensities[i] = static_cast<float>(p[i]);
            break;
        }
        case ScalarType::F32:
            std::memcpy(vol.intensities.data(), bytes.data(), n * sizeof(float));
            break;
    }
    return vol;
}

void write_volume(const Volume& vol, const std::string& header_path) {
    if (vol.intensities.size() != vol.voxel_count())
        throw FormatError("volume intensity count does not match dims");
    const std::string data_file = fs::path(header_path).stem().string() + ".raw";
    write_header(header_path, vol.nx, vol.ny, vol.nz, vol.sx, vol.sy, vol.sz, vol.dtype,
                 data_file);
    const std::size_t n = vol.voxel_count();
    switch (vol.dtype) {
        case ScalarType::U8: {
            std::vector<std::uint8_t> buf(n);
            for (std::size_t i = 0; i < n; ++i) buf[i] = static_cast<std::uint8_t>(vol.intensities[i]);
            write_body(header_path, data_file, buf.data(), buf.size());
            break;
        }
        case ScalarType::I16: {
            std::vector<std::int16_t> buf(n);
            for (std::size_t i = 0; i < n; ++i) buf[i] = static_cast<std::int16_t>(vol.intensities[i]);
            write_body(header_path, data_file, buf.data(), buf.size() * 2);
            break;
        }
        case ScalarType::F32:
            write_body(header_path, data_file, vol.intensities.data(), n * sizeof(float));
            break;
    }
}

LabelMask read_mask(const std::string& header_path) {
    const Volume v = read_volume(header_path);
    LabelMask m;
    m.nx = v.nx;
    m.ny = v.ny;
    m.nz = v.nz;
    m.sx = v.sx;
    m.sy = v.sy;
    m.sz = v.sz;
    m.values.resize(v.voxel_count());
    for (std::size_t i = 0; i < m.values.size(); ++i) m.values[i] = v.intensities[i] != 0.f ? 1 : 0;
    return m;
}

void write_mask(const LabelMask& mask, const std::string& header_path) {
    Volume v;
    v.nx = mask.nx;
    v.ny = mask.ny;
    v.nz = mask.nz;
    v.sx = mask.sx;
    v.sy = mask.sy;
    v.sz = mask.sz;
    v.dtype = ScalarType::U8;
    v.intensities.assign(mask.values.begin(), mask.values.end());
    write_volume(v, header_path);
}

void write_scalar_map(const Grid2& map, const std::string& raw_path) {
    std::ofstream out(raw_path, std::ios::binary);
    if (!out) throw FormatError("cannot write scalar map: " + raw_path);
    out.write(reinterpret_cast<const char*>(map.values.data()),
              static_cast<std::streamsize>(map.values.size() * sizeof(float)));
}

Grid2 read_scalar_map(const std::string& raw_path, int width, int height) {
    std::ifstream in(raw_path, std::ios::binary);
    if (!in) throw FormatError("cannot open scalar map: " + raw_path);
    Grid2 g(width, height);
    in.read(reinterpret_cast<char*>(g.values.data()),
            static_cast<std::streamsize>(g.size() * sizeof(float)));
    if (static_cast<std::size_t>(in.gcount()) != g.size() * sizeof(float))
        throw FormatError(raw_path + ": scalar map size mismatch");
    return g;
}

void write_pgm_preview(const Grid2& map, const std::string& pgm_path) {
    float lo = 0.f, hi = 0.f;
    if (!map.values.empty()) {
        auto [mn, mx] = std::minmax_element(map.values.begin(), map.values.end());
        lo = *mn;
        hi = *mx;
    }
    const float range = hi > lo ? hi - lo : 1.f;
    std::ofstream out(pgm_path, std::ios::binary);
    if (!out) throw FormatError("cannot write preview: " + pgm_path);
    out << "P5\n" << map.width << " " << map.height << "\n255\n";
    for (float v : map.values) {
        const float s = (v - lo) / range * 255.f;
        out.put(static_cast<char>(static_cast<int>(std::lround(s))));
    }
}

}  // namespace g2s
