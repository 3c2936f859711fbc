#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "egocurate/rng.hpp"
#include "egocurate/taxonomy.hpp"
#include "egocurate/types.hpp"

namespace egocurate::mcq {

struct TaggedPair {
    ClipTextPair pair;
    taxonomy::TagVector tags;
};

/// inter: the four distractors come from four other videos.
/// intra: all five options are consecutive clips of one video.
enum class McqSetting { inter, intra };

McqSetting parse_mcq_setting(const std::string& s);
const char* mcq_setting_name(McqSetting s);

struct McqQuestion {
    std::string query;  // narration text of the correct option
    std::array<ClipTextPair, 5> options;
    int answer = -1;  // index into options
    McqSetting setting = McqSetting::inter;
};

struct BuildConfig {
    McqSetting setting = McqSetting::inter;
    int count = 0;
    uint64_t seed = 0;
    int max_resample = 50;  // per-question retry budget before giving up on it
};

struct BuildReport {
    int requested = 0;
    int built = 0;
    std::vector<std::string> warnings;
};

struct BuildResult {
    std::vector<McqQuestion> questions;
    BuildReport report;
};

/// Two narrations count as the same choice when both their first verb group
/// and first noun group agree; such duplicates never share a question.
std::pair<int32_t, int32_t> dedup_key(const taxonomy::TagVector& tags);

BuildResult build_mcq(std::span<const TaggedPair> corpus, const BuildConfig& config);

/// Checks every structural invariant of the questions against the corpus
/// they were built from; throws std::runtime_error naming the first failure.
void validate_mcq(std::span<const McqQuestion> questions, std::span<const TaggedPair> corpus);

struct McqAccuracy {
    double accuracy = 0.0;
    int correct = 0;
    int total = 0;
};

/// scores[q] holds one score per option; prediction is the argmax with ties
/// resolved to the lowest index.
McqAccuracy score_mcq(std::span<const McqQuestion> questions,
                      const std::vector<std::vector<double>>& scores);

}  // namespace egocurate::mcq
