#include "egocurate/taxonomy.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace egocurate::taxonomy {

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

bool is_punct(unsigned char c) {
    return std::ispunct(c) != 0;
}

}  // namespace

std::vector<std::string> normalize_tokens(std::string_view text) {
    std::vector<std::string> tokens;
    std::istringstream in{lower(text)};
    std::string raw;
    while (in >> raw) {
        if (raw.front() == '#') continue;  // annotator / marker tags
        std::string cur;
        for (unsigned char c : raw) {
            if (is_punct(c)) {
                if (!cur.empty()) tokens.push_back(std::move(cur));
                cur.clear();
            } else {
                cur.push_back(static_cast<char>(c));
            }
        }
        if (!cur.empty()) tokens.push_back(std::move(cur));
    }
    return tokens;
}

Taxonomy::Matcher Taxonomy::build_matcher(const std::vector<std::string>& labels,
                                          const std::vector<std::vector<std::string>>& surfaces,
                                          const char* klass) {
    Matcher m;
    std::map<std::string, int32_t> seen;  // surface -> group, collision check
    for (int32_t g = 0; g < static_cast<int32_t>(labels.size()); ++g) {
        for (const std::string& s : surfaces[g]) {
            auto tokens = normalize_tokens(s);
            if (tokens.empty()) {
                throw std::invalid_argument(std::string("taxonomy: empty ") + klass +
                                            " surface form in group '" + labels[g] + "'");
            }
            std::string key;
            for (const auto& t : tokens) {
                if (!key.empty()) key.push_back(' ');
                key += t;
            }
            auto [it, inserted] = seen.emplace(key, g);
            if (!inserted) {
                if (it->second != g) {
                    throw std::invalid_argument(std::string("taxonomy: ") + klass +
                                                " surface form '" + key +
                                                "' appears in two groups ('" +
                                                labels[it->second] + "' and '" + labels[g] + "')");
                }
                continue;  // duplicate within one group is harmless
            }
            m.forms.push_back(SurfaceForm{std::move(tokens), g});
        }
    }
    std::sort(m.forms.begin(), m.forms.end(), [](const SurfaceForm& a, const SurfaceForm& b) {
        if (a.tokens.front() != b.tokens.front()) return a.tokens.front() < b.tokens.front();
        return a.tokens.size() > b.tokens.size();
    });
    return m;
}

std::optional<std::pair<int32_t, size_t>> Taxonomy::Matcher::match(
    const std::vector<std::string>& tokens, size_t i) const {
    // forms are sorted by first token then by descending length, so the first
    // full match is the longest one
    auto lo = std::lower_bound(forms.begin(), forms.end(), tokens[i],
                               [](const SurfaceForm& f, const std::string& t) {
                                   return f.tokens.front() < t;
                               });
    for (auto it = lo; it != forms.end() && it->tokens.front() == tokens[i]; ++it) {
        const auto& ft = it->tokens;
        if (i + ft.size() > tokens.size()) continue;
        if (std::equal(ft.begin(), ft.end(), tokens.begin() + static_cast<long>(i))) {
            return std::make_pair(it->group, ft.size());
        }
    }
    return std::nullopt;
}

Taxonomy Taxonomy::from_json(const nlohmann::json& j) {
    Taxonomy tax;
    auto read_class = [](const nlohmann::json& node, std::vector<std::string>& labels,
                         std::vector<std::vector<std::string>>& surfaces, const char* klass) {
        if (!node.is_object()) {
            throw std::invalid_argument(std::string("taxonomy: '") + klass +
                                        "' must be an object of canonical -> synonym list");
        }
        for (const auto& [canonical, syns] : node.items()) {
            std::string canon = lower(canonical);
            if (std::find(labels.begin(), labels.end(), canon) != labels.end()) {
                throw std::invalid_argument(std::string("taxonomy: duplicate canonical ") +
                                            klass + " '" + canon + "'");
            }
            std::vector<std::string> forms{canon};
            for (const auto& s : syns) {
                std::string f = lower(s.get<std::string>());
                if (std::find(forms.begin(), forms.end(), f) == forms.end()) {
                    forms.push_back(std::move(f));
                }
            }
            labels.push_back(std::move(canon));
            surfaces.push_back(std::move(forms));
        }
    };
    read_class(j.at("nouns"), tax.noun_labels_, tax.noun_surfaces_, "noun");
    read_class(j.at("verbs"), tax.verb_labels_, tax.verb_surfaces_, "verb");
    tax.noun_matcher_ = build_matcher(tax.noun_labels_, tax.noun_surfaces_, "noun");
    tax.verb_matcher_ = build_matcher(tax.verb_labels_, tax.verb_surfaces_, "verb");
    return tax;
}

Taxonomy Taxonomy::load(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot open taxonomy file: " + file.string());
    nlohmann::json j;
    in >> j;
    return from_json(j);
}

nlohmann::json Taxonomy::to_json() const {
    nlohmann::ordered_json nouns, verbs;
    for (size_t g = 0; g < noun_labels_.size(); ++g) nouns[noun_labels_[g]] = noun_surfaces_[g];
    for (size_t g = 0; g < verb_labels_.size(); ++g) verbs[verb_labels_[g]] = verb_surfaces_[g];
    return nlohmann::ordered_json{{"nouns", nouns}, {"verbs", verbs}};
}

std::optional<int32_t> Taxonomy::noun_id(std::string_view canonical) const {
    auto it = std::find(noun_labels_.begin(), noun_labels_.end(), lower(canonical));
    if (it == noun_labels_.end()) return std::nullopt;
    return static_cast<int32_t>(it - noun_labels_.begin());
}

std::optional<int32_t> Taxonomy::verb_id(std::string_view canonical) const {
    auto it = std::find(verb_labels_.begin(), verb_labels_.end(), lower(canonical));
    if (it == verb_labels_.end()) return std::nullopt;
    return static_cast<int32_t>(it - verb_labels_.begin());
}

TagVector Taxonomy::tag(std::string_view text) const {
    TagVector tv;
    tv.k1 = noun_count();
    tv.k2 = verb_count();
    const auto tokens = normalize_tokens(text);

    // independent passes so one token can match as both noun and verb
    auto run = [&tokens](const Matcher& m, std::vector<int32_t>& ids, int32_t& first) {
        size_t i = 0;
        while (i < tokens.size()) {
            if (auto hit = m.match(tokens, i)) {
                if (first < 0) first = hit->first;
                ids.push_back(hit->first);
                i += hit->second;
            } else {
                ++i;
            }
        }
        std::sort(ids.begin(), ids.end());
        ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    };
    run(noun_matcher_, tv.noun_ids, tv.first_noun);
    run(verb_matcher_, tv.verb_ids, tv.first_verb);
    return tv;
}

namespace {

int64_t sorted_intersection_size(const std::vector<int32_t>& a, const std::vector<int32_t>& b) {
    int64_t n = 0;
    size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] < b[j]) {
            ++i;
        } else if (b[j] < a[i]) {
            ++j;
        } else {
            ++n;
            ++i;
            ++j;
        }
    }
    return n;
}

}  // namespace

int64_t positive_score(const TagVector& a, const TagVector& b) {
    if (a.k1 != b.k1 || a.k2 != b.k2) {
        throw std::invalid_argument("positive_score: tag vectors come from different taxonomies");
    }
    return sorted_intersection_size(a.noun_ids, b.noun_ids) *
           sorted_intersection_size(a.verb_ids, b.verb_ids);
}

bool positives_match(const TagVector& a, const TagVector& b, PositiveMode mode) {
    if (a.k1 != b.k1 || a.k2 != b.k2) {
        throw std::invalid_argument("positives_match: tag vectors come from different taxonomies");
    }
    const bool nouns = sorted_intersection_size(a.noun_ids, b.noun_ids) > 0;
    const bool verbs = sorted_intersection_size(a.verb_ids, b.verb_ids) > 0;
    switch (mode) {
        case PositiveMode::noun_only: return nouns;
        case PositiveMode::verb_only: return verbs;
        case PositiveMode::noun_and_verb: return nouns && verbs;
    }
    return false;
}

}  // namespace egocurate::taxonomy
