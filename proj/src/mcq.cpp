#include "egocurate/mcq.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>

namespace egocurate::mcq {

namespace {

// corpus indices per video, in temporal narration order
std::map<std::string, std::vector<int>> index_by_video(std::span<const TaggedPair> corpus) {
    std::map<std::string, std::vector<int>> by_video;
    for (size_t i = 0; i < corpus.size(); ++i)
        by_video[corpus[i].pair.video_uid].push_back(static_cast<int>(i));
    for (auto& [uid, idx] : by_video) {
        std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
            return corpus[a].pair.narration_timestamp < corpus[b].pair.narration_timestamp;
        });
    }
    return by_video;
}

bool same_clip(const ClipTextPair& a, const ClipTextPair& b) {
    return a.video_uid == b.video_uid && a.t_start == b.t_start && a.t_end == b.t_end &&
           a.text == b.text;
}

}  // namespace

McqSetting parse_mcq_setting(const std::string& s) {
    if (s == "inter") return McqSetting::inter;
    if (s == "intra") return McqSetting::intra;
    throw std::invalid_argument("unknown mcq setting: " + s + " (expected inter|intra)");
}

const char* mcq_setting_name(McqSetting s) {
    return s == McqSetting::inter ? "inter" : "intra";
}

std::pair<int32_t, int32_t> dedup_key(const taxonomy::TagVector& tags) {
    return {tags.first_verb, tags.first_noun};
}

BuildResult build_mcq(std::span<const TaggedPair> corpus, const BuildConfig& config) {
    if (config.count < 0) throw std::invalid_argument("question count must be non-negative");
    if (config.max_resample < 1) throw std::invalid_argument("max_resample must be positive");

    BuildResult out;
    out.report.requested = config.count;
    Rng rng = Rng(config.seed).substream(config.setting == McqSetting::inter ? "mcq/inter"
                                                                             : "mcq/intra");

    const auto by_video = index_by_video(corpus);

    if (config.setting == McqSetting::inter) {
        if (by_video.size() < 5) {
            out.report.warnings.push_back("inter questions need clips from at least 5 videos");
            return out;
        }
        for (int q = 0; q < config.count; ++q) {
            bool done = false;
            for (int attempt = 0; attempt < config.max_resample && !done; ++attempt) {
                const int anchor = static_cast<int>(rng.uniform_below(corpus.size()));
                std::vector<int> chosen{anchor};
                std::set<std::string> videos{corpus[anchor].pair.video_uid};
                std::set<std::pair<int32_t, int32_t>> keys{dedup_key(corpus[anchor].tags)};
                int budget = config.max_resample;
                while (static_cast<int>(chosen.size()) < 5 && budget > 0) {
                    const int c = static_cast<int>(rng.uniform_below(corpus.size()));
                    --budget;
                    if (videos.count(corpus[c].pair.video_uid)) continue;
                    if (keys.count(dedup_key(corpus[c].tags))) continue;
                    chosen.push_back(c);
                    videos.insert(corpus[c].pair.video_uid);
                    keys.insert(dedup_key(corpus[c].tags));
                }
                if (chosen.size() < 5) continue;
                rng.shuffle(chosen);
                McqQuestion question;
                question.setting = McqSetting::inter;
                for (int i = 0; i < 5; ++i) {
                    question.options[i] = corpus[chosen[i]].pair;
                    if (chosen[i] == anchor) question.answer = i;
                }
                question.query = corpus[anchor].pair.text;
                out.questions.push_back(std::move(question));
                done = true;
            }
            if (!done)
                out.report.warnings.push_back("inter question abandoned after retry budget");
        }
    } else {
        std::vector<const std::vector<int>*> eligible;
        for (const auto& [uid, idx] : by_video)
            if (idx.size() >= 5) eligible.push_back(&idx);
        if (eligible.empty()) {
            out.report.warnings.push_back("intra questions need a video with at least 5 clips");
            return out;
        }
        for (int q = 0; q < config.count; ++q) {
            bool done = false;
            for (int attempt = 0; attempt < config.max_resample && !done; ++attempt) {
                const auto& idx = *eligible[rng.uniform_below(eligible.size())];
                const int start = static_cast<int>(rng.uniform_below(idx.size() - 4));
                std::set<std::pair<int32_t, int32_t>> keys;
                for (int i = 0; i < 5; ++i) keys.insert(dedup_key(corpus[idx[start + i]].tags));
                if (keys.size() < 5) continue;
                McqQuestion question;
                question.setting = McqSetting::intra;
                for (int i = 0; i < 5; ++i) question.options[i] = corpus[idx[start + i]].pair;
                question.answer = static_cast<int>(rng.uniform_below(5));
                question.query = question.options[question.answer].text;
                out.questions.push_back(std::move(question));
                done = true;
            }
            if (!done)
                out.report.warnings.push_back("intra question abandoned after retry budget");
        }
    }
    out.report.built = static_cast<int>(out.questions.size());
    return out;
}

void validate_mcq(std::span<const McqQuestion> questions, std::span<const TaggedPair> corpus) {
    const auto by_video = index_by_video(corpus);
    const auto fail = [](size_t q, const std::string& why) {
        throw std::runtime_error("question " + std::to_string(q) + ": " + why);
    };

    for (size_t q = 0; q < questions.size(); ++q) {
        const McqQuestion& question = questions[q];
        if (question.answer < 0 || question.answer >= 5) fail(q, "answer index out of range");
        if (question.options[question.answer].text != question.query)
            fail(q, "query text does not match the answer option");

        // every option must exist in the corpus; collect tags via that match
        std::vector<int> located(5, -1);
        for (int i = 0; i < 5; ++i) {
            const auto it = by_video.find(question.options[i].video_uid);
            if (it == by_video.end()) fail(q, "option video not in corpus");
            for (int idx : it->second)
                if (same_clip(corpus[idx].pair, question.options[i])) {
                    located[i] = idx;
                    break;
                }
            if (located[i] < 0) fail(q, "option clip not found in corpus");
        }

        std::set<std::pair<int32_t, int32_t>> keys;
        for (int i = 0; i < 5; ++i) keys.insert(dedup_key(corpus[located[i]].tags));
        if (keys.size() < 5) fail(q, "duplicate verb/noun key among options");

        if (question.setting == McqSetting::inter) {
            std::set<std::string> videos;
            for (const auto& opt : question.options) videos.insert(opt.video_uid);
            if (videos.size() < 5) fail(q, "inter options must come from 5 distinct videos");
        } else {
            const std::string& uid = question.options[0].video_uid;
            for (const auto& opt : question.options)
                if (opt.video_uid != uid) fail(q, "intra options must share one video");
            // positions within the video's temporal order must be consecutive
            const std::vector<int>& order = by_video.at(uid);
            std::vector<int> pos(5, -1);
            for (int i = 0; i < 5; ++i) {
                for (size_t p = 0; p < order.size(); ++p)
                    if (order[p] == located[i]) {
                        pos[i] = static_cast<int>(p);
                        break;
                    }
            }
            for (int i = 1; i < 5; ++i)
                if (pos[i] != pos[0] + i) fail(q, "intra options must be consecutive clips");
        }
    }
}

McqAccuracy score_mcq(std::span<const McqQuestion> questions,
                      const std::vector<std::vector<double>>& scores) {
    if (scores.size() != questions.size())
        throw std::invalid_argument("one score row per question required");
    McqAccuracy acc;
    acc.total = static_cast<int>(questions.size());
    for (size_t q = 0; q < questions.size(); ++q) {
        if (scores[q].size() != 5)
            throw std::invalid_argument("score row must have 5 entries");
        int best = 0;
        for (int i = 1; i < 5; ++i)
            if (scores[q][i] > scores[q][best]) best = i;
        if (best == questions[q].answer) ++acc.correct;
    }
    acc.accuracy = acc.total == 0 ? 0.0 : static_cast<double>(acc.correct) / acc.total;
    return acc;
}

}  // namespace egocurate::mcq
