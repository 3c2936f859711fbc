#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "egocurate/mcq.hpp"
#include "egocurate/rng.hpp"
#include "egocurate/taxonomy.hpp"
#include "egocurate/types.hpp"

namespace egocurate::synth {

/// Synthetic scene/action world. Each scene owns a disjoint slice of the
/// verb/noun action pool; each video belongs to one scene and narrates only
/// that scene's actions, so scene identity is a lazy shortcut for matching
/// across scenes but useless inside a video.
struct WorldConfig {
    int num_videos = 12;
    int narrations_per_video = 24;
    int num_scenes = 4;
    int actions_per_scene = 4;
    double mean_gap_sec = 4.9;   // narration spacing
    double gap_jitter_sec = 1.5; // uniform jitter around the mean, >= 0.5s floor
    uint64_t seed = 7;
};

struct World {
    taxonomy::Taxonomy taxonomy;
    std::vector<VideoMeta> videos;
    std::vector<NarrationRecord> narrations;  // grouped by video, ascending time
    std::vector<int> video_scene;             // scene id per videos[] index
    int num_scenes = 0;
};

/// Built-in surface vocabulary with synonyms, sized for desk-scale worlds.
taxonomy::Taxonomy builtin_taxonomy();

World make_world(const WorldConfig& config);

int scene_of(const World& world, const std::string& video_uid);

/// Raw (pre-projection) feature rows for each clip-text pair. Video rows are
/// scene-block dominated with a weaker verb/noun block; text rows carry only
/// the verb/noun block. Matching across scenes is therefore easy from scene
/// identity alone, matching within a scene requires the action block.
struct FeatureConfig {
    double scene_strength = 2.0;
    double action_strength = 0.6;
    double video_noise = 0.2;
    double text_noise = 0.2;
};

struct RawFeatures {
    Eigen::MatrixXd video;  // N x (num_scenes + verbs + nouns)
    Eigen::MatrixXd text;   // N x (verbs + nouns)
};

RawFeatures make_features(const World& world, std::span<const mcq::TaggedPair> pairs,
                          const FeatureConfig& config, Rng& rng);

/// Unit-norm embedding rows derived from tags through one seeded random
/// projection; stands in for an encoder wherever the tooling needs embedding
/// files without a training run.
struct SynthEmbedConfig {
    int dim = 16;
    uint64_t seed = 7;
    double noise = 0.05;
};

void synth_embeddings(std::span<const mcq::TaggedPair> pairs, const SynthEmbedConfig& config,
                      Eigen::MatrixXd& video_out, Eigen::MatrixXd& text_out);

/// Writes narrations.jsonl, meta.jsonl, taxonomy.json into dir. With noise,
/// adds records each filter rule must catch plus one unparseable line.
struct FixtureConfig {
    WorldConfig world;
    bool with_noise = true;
};

void write_fixture(const std::filesystem::path& dir, const FixtureConfig& config);

}  // namespace egocurate::synth
