#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "egocurate/contrastive.hpp"
#include "egocurate/synth.hpp"

namespace egocurate::toy {

enum class Objective { infonce, egonce };

Objective parse_objective(const std::string& s);
const char* objective_name(Objective o);

/// Big enough that every-3rd-video holdout leaves >= 5 videos for inter
/// questions, with enough actions per scene that 5 contiguous narrations can
/// carry pairwise-distinct tags.
inline synth::WorldConfig default_toy_world() {
    synth::WorldConfig w;
    w.num_videos = 18;
    w.narrations_per_video = 24;
    w.num_scenes = 4;
    w.actions_per_scene = 8;
    return w;
}

struct TrainConfig {
    synth::WorldConfig world = default_toy_world();  // world.seed is replaced by the run seed
    synth::FeatureConfig features;
    int steps = 240;
    double lr = 4.0;
    double tau = 0.05;
    int dim = 16;
    Objective objective = Objective::egonce;
    contrastive::NegativeVariant negatives = contrastive::NegativeVariant::within_window;
    double window_sec = 60.0;
    taxonomy::PositiveMode positives = taxonomy::PositiveMode::noun_and_verb;
    int eval_questions = 200;  // per MCQ setting
    int eval_every_k_videos = 3;  // every k-th video is held out
};

struct SeedResult {
    uint64_t seed = 0;
    double final_loss = 0.0;
    double inter_accuracy = 0.0;
    double intra_accuracy = 0.0;
    int inter_questions = 0;
    int intra_questions = 0;
};

/// Full-batch gradient descent of two linear maps into a shared space on the
/// chosen objective, evaluated via MCQ accuracy on held-out videos.
/// Deterministic per seed. Throws std::runtime_error naming the step if the
/// loss goes non-finite.
SeedResult train_one(const TrainConfig& config, uint64_t seed);

std::vector<SeedResult> train_toy(const TrainConfig& config, std::span<const uint64_t> seeds);

}  // namespace egocurate::toy
