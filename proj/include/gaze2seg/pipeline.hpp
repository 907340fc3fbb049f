#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gaze2seg/gaze.hpp"
#include "gaze2seg/metrics.hpp"
#include "gaze2seg/rw.hpp"
#include "gaze2seg/saliency.hpp"
#include "gaze2seg/seeding.hpp"
#include "gaze2seg/types.hpp"

namespace g2s {

struct PipelineConfig {
    GazeParams gaze;          // pixel_pitch_mm is taken from the volume at run time
    SaliencyParams saliency;
    SeedingParams seeding;
    RwParams rw;
    int top_k = 0;            // 0: all regions with attention >= 0.5
    int jobs = 1;
    int default_slice = 0;
    std::string out_dir = "out";
};

// Flat key=value file; unknown keys rejected. CLI flags override file values.
PipelineConfig load_config(const std::string& path, PipelineConfig base = {});
void apply_config_entry(PipelineConfig& cfg, const std::string& key, const std::string& value);

struct RegionOutcome {
    int rank = 0;
    AttentionRegion region;
    std::string status;  // "ok", "no_boundary", or an error note
    SeedSet seeds;
    bool has_mask = false;
    Grid2 mask;  // full-slice binary mask for this region
};

struct PipelineResult {
    std::vector<StabilizedPoint> points;
    std::vector<AttentionMap> attention_maps;
    std::vector<AttentionRegion> ranked_regions;
    std::vector<RegionOutcome> outcomes;
    LabelMask composite;  // volume-shaped OR of region masks
    std::optional<EvalReport> report;
    std::vector<std::string> notes;
};

// Full offline pipeline: ingest -> stabilize -> attention -> per-region
// saliency/seeding/random-walker -> compose -> metrics. Writes all artifacts
// under config.out_dir.
PipelineResult run_pipeline(const std::string& volume_path, const std::string& gaze_path,
                            const std::string& viewer_path,
                            const std::optional<std::string>& calibration_path,
                            const std::optional<std::string>& reference_mask_path,
                            const PipelineConfig& config);

// Core of the per-region stage, shared by run_pipeline and the standalone CLI
// stages: saliency window around the region, FG/BG seed selection.
struct RegionSeeding {
    WindowRect window;
    SaliencyMap smap;
    SeedSet seeds;
};
RegionSeeding seed_region(const Grid2& slice_image, const AttentionRegion& region,
                          double sx_mm, double sy_mm, const SaliencyParams& sal_params,
                          const SeedingParams& seed_params);

void write_seed_csv(const SeedSet& seeds, const std::string& path);
SeedSet read_seed_csv(const std::string& path);

void write_regions_csv(const std::vector<AttentionRegion>& regions, const std::string& path);
std::vector<AttentionRegion> read_regions_csv(const std::string& path);

std::string report_to_json(const EvalReport& report);

}  // namespace g2s
