#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "json.hpp"

#include "egocurate/contrastive.hpp"
#include "egocurate/ingest.hpp"
#include "egocurate/types.hpp"

namespace egocurate::pipeline {

/// Everything one end-to-end run depends on. The config hash covers every
/// field, so equal hashes mean equal behavior.
struct PipelineConfig {
    std::filesystem::path narrations_path;
    std::filesystem::path meta_path;
    std::filesystem::path taxonomy_path;
    std::filesystem::path out_dir;

    PairingStrategy strategy = PairingStrategy::F;
    double alpha = 4.9;
    std::string annotators = "all";  // "all" | "one" (seeded pick per video)

    taxonomy::PositiveMode positive_mode = taxonomy::PositiveMode::noun_and_verb;
    contrastive::NegativeVariant negative_variant = contrastive::NegativeVariant::within_window;
    double window_sec = 60.0;
    double tau = 0.05;

    int mcq_count = 50;
    int mcq_max_resample = 50;
    int batch_size = 32;
    int embed_dim = 16;
    uint64_t seed = 7;
};

/// "key = value" lines, '#' comments, unknown keys rejected. Values use the
/// same spellings as the CLI flags (strategy a..f, positives a|b|c,
/// negatives d|e|f).
PipelineConfig parse_config_text(const std::string& text);
PipelineConfig load_config(const std::filesystem::path& file);

/// One key per line in fixed order; parse_config_text inverts it.
std::string serialize_config(const PipelineConfig& config);

/// FNV-1a of the serialized config, hex.
std::string config_hash(const PipelineConfig& config);

taxonomy::PositiveMode parse_positive_mode(const std::string& s);
const char* positive_mode_name(taxonomy::PositiveMode m);

struct PipelineResult {
    bool skipped = false;  // manifest with this hash already present
    std::filesystem::path manifest_path;
    nlohmann::ordered_json manifest;
};

/// filter -> pair -> tag -> mcq build -> sample-batch -> loss check.
/// Writes all artifacts plus manifest.json into out_dir. A rerun that finds
/// a manifest with the same config hash is a no-op unless force. On a stage
/// failure, writes a manifest naming the failed stage, then rethrows.
PipelineResult run_pipeline(const PipelineConfig& config, bool force = false);

}  // namespace egocurate::pipeline
