#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace egocurate::taxonomy {

/// Binary indicator vectors over canonical noun/verb groups for one
/// narration, stored sparsely as sorted unique group ids. k1/k2 record the
/// taxonomy sizes so vectors from different taxonomies cannot be compared.
struct TagVector {
    std::vector<int32_t> noun_ids;
    std::vector<int32_t> verb_ids;
    int32_t first_noun = -1;  // earliest noun match by token position, -1 if none
    int32_t first_verb = -1;
    int32_t k1 = 0;  // number of noun groups in the source taxonomy
    int32_t k2 = 0;  // number of verb groups

    bool has_noun() const { return first_noun >= 0; }
    bool has_verb() const { return first_verb >= 0; }
};

/// Canonical verb/noun groups with synonym lists. Matching is purely
/// dictionary-driven: a token is a noun or verb only because a group lists it.
class Taxonomy {
  public:
    /// Expects {"nouns": {canonical: [synonyms...]}, "verbs": {...}}.
    /// The canonical label always counts as a surface form of its group.
    static Taxonomy from_json(const nlohmann::json& j);
    static Taxonomy load(const std::filesystem::path& file);

    int noun_count() const { return static_cast<int>(noun_labels_.size()); }
    int verb_count() const { return static_cast<int>(verb_labels_.size()); }

    const std::string& noun_label(int32_t id) const { return noun_labels_.at(id); }
    const std::string& verb_label(int32_t id) const { return verb_labels_.at(id); }
    std::optional<int32_t> noun_id(std::string_view canonical) const;
    std::optional<int32_t> verb_id(std::string_view canonical) const;

    /// Lowercases, drops '#'-prefixed tokens and punctuation, then applies a
    /// greedy longest-match left-to-right pass per word class.
    TagVector tag(std::string_view text) const;

    nlohmann::json to_json() const;

  private:
    struct SurfaceForm {
        std::vector<std::string> tokens;
        int32_t group = -1;
    };
    // per class: surface forms grouped by first token, longest first
    struct Matcher {
        std::vector<SurfaceForm> forms;  // sorted by (first token, -length)
        // match at position i in tokens; returns (group, matched length) or nullopt
        std::optional<std::pair<int32_t, size_t>> match(
            const std::vector<std::string>& tokens, size_t i) const;
    };

    static Matcher build_matcher(const std::vector<std::string>& labels,
                                 const std::vector<std::vector<std::string>>& surfaces,
                                 const char* klass);

    std::vector<std::string> noun_labels_;
    std::vector<std::string> verb_labels_;
    std::vector<std::vector<std::string>> noun_surfaces_;  // per group, incl. canonical
    std::vector<std::vector<std::string>> verb_surfaces_;
    Matcher noun_matcher_;
    Matcher verb_matcher_;
};

/// Narration tokens after lowercasing, '#'-tag removal and punctuation
/// stripping; the token stream the matchers run on.
std::vector<std::string> normalize_tokens(std::string_view text);

/// s_ij = (w_i^n . w_j^n) * (w_i^v . w_j^v): positive iff the pair shares at
/// least one noun group and at least one verb group.
int64_t positive_score(const TagVector& a, const TagVector& b);

/// Which tag overlap counts as "positive" (pairing ablation rows a/b/c).
enum class PositiveMode { noun_only, verb_only, noun_and_verb };

bool positives_match(const TagVector& a, const TagVector& b, PositiveMode mode);

}  // namespace egocurate::taxonomy
