#pragma once

#include <string>
#include <vector>

#include "gaze2seg/types.hpp"

namespace g2s {

// Calibration file: 9 whitespace-separated reals, row-major homography.
SceneToStimulusTransform read_calibration(const std::string& path);

// CSV header `t_ms,scene_x,scene_y,pupil_mm`; pupil_mm may be empty. Samples
// mapping outside [0,raster_w) x [0,raster_h) are flagged off-screen, not clamped.
GazeTrace parse_gaze_log(const std::string& path, const SceneToStimulusTransform& transform,
                         int raster_w, int raster_h);

// CSV header `t_ms,kind,slice,payload`; kind in {slice_change, window_level, click}.
std::vector<ViewerEvent> parse_viewer_log(const std::string& path);

// Each sample takes the slice of the latest slice_change with t <= sample t,
// default_slice before any event.
GazeTrace assign_slices(GazeTrace trace, const std::vector<ViewerEvent>& events,
                        int default_slice);

// Volume format: text header (keys dims, spacing_mm, dtype) + raw little-endian
// body in a sibling file named in the header.
Volume read_volume(const std::string& header_path);
void write_volume(const Volume& vol, const std::string& header_path);

LabelMask read_mask(const std::string& header_path);
void write_mask(const LabelMask& mask, const std::string& header_path);

// Scalar map writers: raw f32 plus an 8-bit PGM preview (values min-max scaled).
void write_scalar_map(const Grid2& map, const std::string& raw_path);
Grid2 read_scalar_map(const std::string& raw_path, int width, int height);
void write_pgm_preview(const Grid2& map, const std::string& pgm_path);

}  // namespace g2s
