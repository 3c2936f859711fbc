#include "egocurate/synth.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "egocurate/io.hpp"

namespace egocurate::synth {

namespace {

using nlohmann::ordered_json;

std::string video_name(int i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "vid_%02d", i);
    return buf;
}

}  // namespace

taxonomy::Taxonomy builtin_taxonomy() {
    // third-person forms are listed as surfaces so generated narrations read
    // naturally while still matching exactly
    const ordered_json j = {
        {"verbs",
         {{"take", {"takes", "pick", "picks", "grab", "grabs"}},
          {"open", {"opens"}},
          {"close", {"closes", "shut", "shuts"}},
          {"wash", {"washes", "rinse", "rinses"}},
          {"cut", {"cuts", "slice", "slices", "chop", "chops"}},
          {"stir", {"stirs", "mix", "mixes"}},
          {"pour", {"pours"}},
          {"put", {"puts", "place", "places"}},
          {"lift", {"lifts", "raise", "raises"}},
          {"wipe", {"wipes"}},
          {"turn", {"turns", "rotate", "rotates"}},
          {"knead", {"kneads"}}}},
        {"nouns",
         {{"phone", {"cellphone", "mobile phone"}},
          {"fridge", {"refrigerator"}},
          {"door", nlohmann::json::array()},
          {"knife", {"blade"}},
          {"bowl", nlohmann::json::array()},
          {"dough", nlohmann::json::array()},
          {"pan", {"skillet"}},
          {"sink", nlohmann::json::array()},
          {"cloth", {"rag"}},
          {"bottle", nlohmann::json::array()},
          {"board", {"cutting board"}},
          {"wheel", nlohmann::json::array()}}}};
    return taxonomy::Taxonomy::from_json(j);
}

World make_world(const WorldConfig& config) {
    if (config.num_videos < 1 || config.narrations_per_video < 1)
        throw std::invalid_argument("world needs at least one video and one narration");
    if (config.num_scenes < 1 || config.actions_per_scene < 1)
        throw std::invalid_argument("world needs at least one scene and one action");
    if (config.mean_gap_sec <= 0.0) throw std::invalid_argument("mean gap must be positive");

    World world;
    world.taxonomy = builtin_taxonomy();
    world.num_scenes = config.num_scenes;
    const int k_verbs = world.taxonomy.verb_count();
    const int k_nouns = world.taxonomy.noun_count();

    // each scene draws from its own verb/noun slice so no action leaks
    // between scenes; scene identity then predicts the action vocabulary
    const int verbs_per_scene = k_verbs / config.num_scenes;
    const int nouns_per_scene = k_nouns / config.num_scenes;
    if (verbs_per_scene < 1 || nouns_per_scene < 1)
        throw std::invalid_argument("more scenes than vocabulary slices");
    if (config.actions_per_scene > verbs_per_scene * nouns_per_scene)
        throw std::invalid_argument("actions_per_scene exceeds the scene's verb x noun slice");

    Rng rng(config.seed);
    Rng action_rng = rng.substream("world/actions");
    std::vector<std::vector<std::pair<int32_t, int32_t>>> scene_actions(config.num_scenes);
    for (int s = 0; s < config.num_scenes; ++s) {
        std::vector<std::pair<int32_t, int32_t>> slice;
        for (int v = 0; v < verbs_per_scene; ++v)
            for (int n = 0; n < nouns_per_scene; ++n)
                slice.emplace_back(s * verbs_per_scene + v, s * nouns_per_scene + n);
        action_rng.shuffle(slice);
        slice.resize(static_cast<size_t>(config.actions_per_scene));
        scene_actions[s] = std::move(slice);
    }

    const auto surface = [&](const std::vector<std::string>& forms, Rng& r) {
        return forms[r.uniform_below(forms.size())];
    };
    // surface lists per group (canonical first), straight from the taxonomy
    const ordered_json tax_json = world.taxonomy.to_json();
    const auto group_surfaces = [&](bool verb, int32_t id) {
        const auto& canon = verb ? world.taxonomy.verb_label(id) : world.taxonomy.noun_label(id);
        return tax_json.at(verb ? "verbs" : "nouns").at(canon).get<std::vector<std::string>>();
    };
    std::vector<std::vector<std::string>> verb_forms, noun_forms;
    for (int v = 0; v < k_verbs; ++v) verb_forms.push_back(group_surfaces(true, v));
    for (int n = 0; n < k_nouns; ++n) noun_forms.push_back(group_surfaces(false, n));

    for (int i = 0; i < config.num_videos; ++i) {
        const int scene = i % config.num_scenes;
        Rng vid_rng = rng.substream("world/video/" + std::to_string(i));
        VideoMeta meta;
        meta.video_uid = video_name(i);
        meta.width_px = 1920;
        meta.height_px = 1080;
        meta.is_stereo = false;
        meta.duration_sec =
            config.mean_gap_sec * (config.narrations_per_video + 2);
        world.videos.push_back(meta);
        world.video_scene.push_back(scene);

        double t = vid_rng.uniform(2.0, 2.0 + config.mean_gap_sec);
        for (int k = 0; k < config.narrations_per_video; ++k) {
            const auto [verb, noun] =
                scene_actions[scene][vid_rng.uniform_below(scene_actions[scene].size())];
            NarrationRecord rec;
            rec.video_uid = meta.video_uid;
            rec.annotator_id = "ann_1";
            rec.timestamp_sec = t;
            rec.text = "#C C " + surface(verb_forms[verb], vid_rng) + " the " +
                       surface(noun_forms[noun], vid_rng);
            world.narrations.push_back(std::move(rec));
            const double jitter = vid_rng.uniform(-config.gap_jitter_sec, config.gap_jitter_sec);
            t += std::max(0.5, config.mean_gap_sec + jitter);
        }
        world.videos.back().duration_sec = std::max(meta.duration_sec, t + 2.0);
    }
    return world;
}

int scene_of(const World& world, const std::string& video_uid) {
    for (size_t i = 0; i < world.videos.size(); ++i)
        if (world.videos[i].video_uid == video_uid) return world.video_scene[i];
    throw std::invalid_argument("unknown video: " + video_uid);
}

RawFeatures make_features(const World& world, std::span<const mcq::TaggedPair> pairs,
                          const FeatureConfig& config, Rng& rng) {
    const int s = world.num_scenes;
    const int kv = world.taxonomy.verb_count();
    const int kn = world.taxonomy.noun_count();
    const Eigen::Index n = static_cast<Eigen::Index>(pairs.size());

    RawFeatures f;
    f.video = Eigen::MatrixXd::Zero(n, s + kv + kn);
    f.text = Eigen::MatrixXd::Zero(n, kv + kn);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& p = pairs[static_cast<size_t>(i)];
        f.video(i, scene_of(world, p.pair.video_uid)) = config.scene_strength;
        for (int32_t v : p.tags.verb_ids) {
            f.video(i, s + v) = config.action_strength;
            f.text(i, v) = 1.0;
        }
        for (int32_t nn : p.tags.noun_ids) {
            f.video(i, s + kv + nn) = config.action_strength;
            f.text(i, kv + nn) = 1.0;
        }
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index c = 0; c < f.video.cols(); ++c)
            f.video(i, c) += config.video_noise * rng.normal();
        for (Eigen::Index c = 0; c < f.text.cols(); ++c)
            f.text(i, c) += config.text_noise * rng.normal();
    }
    return f;
}

void synth_embeddings(std::span<const mcq::TaggedPair> pairs, const SynthEmbedConfig& config,
                      Eigen::MatrixXd& video_out, Eigen::MatrixXd& text_out) {
    if (config.dim < 2) throw std::invalid_argument("embedding dim must be at least 2");
    if (pairs.empty()) throw std::invalid_argument("no pairs to embed");
    const int kv = pairs[0].tags.k2, kn = pairs[0].tags.k1;
    constexpr int kBuckets = 8;  // coarse same-video signal in the video rows
    const Eigen::Index din = kv + kn + kBuckets;

    Rng rng(config.seed);
    Rng proj_rng = rng.substream("embed/proj");
    Eigen::MatrixXd proj(din, config.dim);
    for (Eigen::Index r = 0; r < din; ++r)
        for (Eigen::Index c = 0; c < config.dim; ++c)
            proj(r, c) = proj_rng.normal() / std::sqrt(static_cast<double>(din));

    Rng noise_rng = rng.substream("embed/noise");
    const Eigen::Index n = static_cast<Eigen::Index>(pairs.size());
    video_out.resize(n, config.dim);
    text_out.resize(n, config.dim);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& p = pairs[static_cast<size_t>(i)];
        if (p.tags.k2 != kv || p.tags.k1 != kn)
            throw std::invalid_argument("tag vectors come from different taxonomies");
        Eigen::VectorXd vfeat = Eigen::VectorXd::Zero(din);
        Eigen::VectorXd tfeat = Eigen::VectorXd::Zero(din);
        for (int32_t v : p.tags.verb_ids) vfeat(v) = tfeat(v) = 1.0;
        for (int32_t nn : p.tags.noun_ids) vfeat(kv + nn) = tfeat(kv + nn) = 1.0;
        vfeat(kv + kn + Rng::fnv1a(p.pair.video_uid) % kBuckets) = 0.5;
        Eigen::VectorXd v = proj.transpose() * vfeat;
        Eigen::VectorXd t = proj.transpose() * tfeat;
        for (Eigen::Index c = 0; c < config.dim; ++c) {
            v(c) += config.noise * noise_rng.normal();
            t(c) += config.noise * noise_rng.normal();
        }
        const double vn = v.norm(), tn = t.norm();
        video_out.row(i) = (vn > 0 ? (v / vn) : v).transpose();
        text_out.row(i) = (tn > 0 ? (t / tn) : t).transpose();
    }
}

void write_fixture(const std::filesystem::path& dir, const FixtureConfig& config) {
    std::filesystem::create_directories(dir);
    const World world = make_world(config.world);

    std::ostringstream narr;
    {
        std::ostringstream clean;
        io::write_narrations_jsonl(clean, world.narrations);
        if (!config.with_noise) {
            narr << clean.str();
        } else {
            // interleave records every filter stage must reject: a malformed
            // line, a too-short narration, an uncertainty-tagged narration
            std::istringstream lines(clean.str());
            std::string line;
            size_t line_no = 0;
            while (std::getline(lines, line)) {
                ++line_no;
                narr << line << '\n';
                if (line_no == 3) narr << "{ this line is not valid json\n";
                if (line_no == 5) {
                    const NarrationRecord bad{world.videos[0].video_uid, "ann_1", 1.0,
                                              "#C C speaks"};
                    io::write_narrations_jsonl(narr, std::span(&bad, 1));
                }
                if (line_no == 7) {
                    const NarrationRecord bad{world.videos[0].video_uid, "ann_1", 1.5,
                                              "#C C washes #unsure in sink"};
                    io::write_narrations_jsonl(narr, std::span(&bad, 1));
                }
            }
        }
    }
    io::spit(dir / "narrations.jsonl", narr.str());

    std::vector<VideoMeta> metas = world.videos;
    if (config.with_noise) {
        VideoMeta wide;  // aspect 3.56, must be dropped
        wide.video_uid = "vid_wide";
        wide.duration_sec = 60.0;
        wide.width_px = 3840;
        wide.height_px = 1080;
        wide.is_stereo = false;
        metas.push_back(wide);
        VideoMeta stereo;  // side-by-side stereo, kept at half width
        stereo.video_uid = "vid_stereo";
        stereo.duration_sec = 60.0;
        stereo.width_px = 3840;
        stereo.height_px = 1080;
        stereo.is_stereo = true;
        metas.push_back(stereo);
    }
    std::ostringstream meta;
    io::write_meta_jsonl(meta, metas);
    io::spit(dir / "meta.jsonl", meta.str());

    io::spit(dir / "taxonomy.json", world.taxonomy.to_json().dump(2) + "\n");
}

}  // namespace egocurate::synth
