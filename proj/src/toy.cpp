#include "egocurate/toy.hpp"

#include <cmath>
#include <map>
#include <stdexcept>
#include <tuple>

#include "egocurate/pairing.hpp"

namespace egocurate::toy {

namespace {

// rows of Z L2-normalized; backward() maps gradients w.r.t. the normalized
// rows through the normalization onto Z
struct NormalizedRows {
    Eigen::MatrixXd normalized;
    Eigen::VectorXd norms;

    static NormalizedRows forward(const Eigen::MatrixXd& z) {
        NormalizedRows out;
        out.norms = z.rowwise().norm();
        out.normalized = z;
        for (Eigen::Index i = 0; i < z.rows(); ++i) {
            if (out.norms(i) <= 0.0) throw std::runtime_error("zero-norm embedding row");
            out.normalized.row(i) /= out.norms(i);
        }
        return out;
    }

    Eigen::MatrixXd backward(const Eigen::MatrixXd& grad_normalized) const {
        Eigen::MatrixXd grad_z = grad_normalized;
        for (Eigen::Index i = 0; i < grad_z.rows(); ++i) {
            const double along = grad_normalized.row(i).dot(normalized.row(i));
            grad_z.row(i) = (grad_normalized.row(i) - along * normalized.row(i)) / norms(i);
        }
        return grad_z;
    }
};

struct Split {
    std::vector<mcq::TaggedPair> train, eval;
    Eigen::MatrixXd train_video, train_text;  // raw feature rows
    Eigen::MatrixXd eval_video, eval_text;
};

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& m, const std::vector<int>& rows) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), m.cols());
    for (size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(rows[i]);
    return out;
}

}  // namespace

Objective parse_objective(const std::string& s) {
    if (s == "infonce") return Objective::infonce;
    if (s == "egonce") return Objective::egonce;
    throw std::invalid_argument("unknown objective: " + s + " (expected infonce|egonce)");
}

const char* objective_name(Objective o) {
    return o == Objective::infonce ? "infonce" : "egonce";
}

SeedResult train_one(const TrainConfig& config, uint64_t seed) {
    if (config.steps < 0) throw std::invalid_argument("steps must be non-negative");
    if (config.lr <= 0.0 || config.tau <= 0.0)
        throw std::invalid_argument("lr and tau must be positive");
    if (config.eval_every_k_videos < 2)
        throw std::invalid_argument("eval_every_k_videos must leave training videos");

    synth::WorldConfig world_cfg = config.world;
    world_cfg.seed = seed;
    const synth::World world = synth::make_world(world_cfg);
    Rng rng(seed);

    // narrations -> clips -> tags, one stream per video
    std::vector<mcq::TaggedPair> corpus;
    pairing::PairingConfig pair_cfg;  // contextual strategy, default alpha
    {
        std::map<std::string, ingest::NarrationStream> streams;
        for (const auto& rec : world.narrations) {
            auto& s = streams[rec.video_uid];
            s.video_uid = rec.video_uid;
            s.annotator_id = rec.annotator_id;
            s.records.push_back(rec);
        }
        for (const auto& meta : world.videos) {
            const auto it = streams.find(meta.video_uid);
            if (it == streams.end()) continue;
            for (auto& pair : pairing::pair_clips(it->second, pair_cfg, meta.duration_sec)) {
                mcq::TaggedPair tp;
                tp.tags = world.taxonomy.tag(pair.text);
                tp.pair = std::move(pair);
                corpus.push_back(std::move(tp));
            }
        }
    }

    Rng feat_rng = rng.substream("toy/features");
    const synth::RawFeatures feats =
        synth::make_features(world, corpus, config.features, feat_rng);

    // hold out every k-th video for MCQ evaluation
    std::map<std::string, int> video_index;
    for (size_t i = 0; i < world.videos.size(); ++i)
        video_index[world.videos[i].video_uid] = static_cast<int>(i);
    Split split;
    std::vector<int> train_rows, eval_rows;
    for (size_t i = 0; i < corpus.size(); ++i) {
        const bool held_out =
            video_index.at(corpus[i].pair.video_uid) % config.eval_every_k_videos ==
            config.eval_every_k_videos - 1;
        (held_out ? eval_rows : train_rows).push_back(static_cast<int>(i));
        (held_out ? split.eval : split.train).push_back(corpus[i]);
    }
    if (split.train.size() < 2 || split.eval.empty())
        throw std::runtime_error("world too small to split into train and eval");
    split.train_video = gather_rows(feats.video, train_rows);
    split.train_text = gather_rows(feats.text, train_rows);
    split.eval_video = gather_rows(feats.video, eval_rows);
    split.eval_text = gather_rows(feats.text, eval_rows);

    // two trainable linear maps into the shared space
    Rng init_rng = rng.substream("toy/init");
    const Eigen::Index dv = feats.video.cols(), dt = feats.text.cols(), dim = config.dim;
    Eigen::MatrixXd w_video(dv, dim), w_text(dt, dim);
    for (Eigen::Index r = 0; r < dv; ++r)
        for (Eigen::Index c = 0; c < dim; ++c)
            w_video(r, c) = init_rng.normal() / std::sqrt(static_cast<double>(dv));
    for (Eigen::Index r = 0; r < dt; ++r)
        for (Eigen::Index c = 0; c < dim; ++c)
            w_text(r, c) = init_rng.normal() / std::sqrt(static_cast<double>(dt));

    // positive sets and anchors are fixed; scene negatives are redrawn per step
    const int n_train = static_cast<int>(split.train.size());
    std::vector<int> anchors(n_train);
    for (int i = 0; i < n_train; ++i) anchors[i] = i;
    std::vector<taxonomy::TagVector> train_tags;
    for (const auto& tp : split.train) train_tags.push_back(tp.tags);

    Rng neg_rng = rng.substream("toy/negatives");
    std::vector<ClipTextPair> train_pairs;
    for (const auto& tp : split.train) train_pairs.push_back(tp.pair);

    double last_loss = 0.0;
    for (int step = 0; step < config.steps; ++step) {
        Eigen::MatrixXd x_video = split.train_video;
        Eigen::MatrixXd x_text = split.train_text;
        std::vector<taxonomy::TagVector> batch_tags = train_tags;
        if (config.objective == Objective::egonce) {
            const auto picks = contrastive::sample_scene_negatives(
                train_pairs, anchors, config.negatives, config.window_sec, neg_rng);
            x_video.conservativeResize(2 * n_train, Eigen::NoChange);
            x_text.conservativeResize(2 * n_train, Eigen::NoChange);
            for (int i = 0; i < n_train; ++i) {
                x_video.row(n_train + i) = split.train_video.row(picks[i].index);
                x_text.row(n_train + i) = split.train_text.row(picks[i].index);
                batch_tags.push_back(train_tags[static_cast<size_t>(picks[i].index)]);
            }
        }

        const NormalizedRows v = NormalizedRows::forward(x_video * w_video);
        const NormalizedRows t = NormalizedRows::forward(x_text * w_text);

        contrastive::LossResult loss;
        if (config.objective == Objective::egonce) {
            const auto positives = contrastive::build_positive_sets(batch_tags, config.positives);
            loss = contrastive::ego_nce(v.normalized, t.normalized, positives, config.tau);
        } else {
            loss = contrastive::info_nce(v.normalized, t.normalized, config.tau);
        }
        if (!std::isfinite(loss.value))
            throw std::runtime_error("loss diverged at step " + std::to_string(step));
        last_loss = loss.value;

        const Eigen::MatrixXd grad_wv = x_video.transpose() * v.backward(loss.grad_video);
        const Eigen::MatrixXd grad_wt = x_text.transpose() * t.backward(loss.grad_text);
        w_video -= config.lr * grad_wv;
        w_text -= config.lr * grad_wt;
    }

    // held-out MCQ evaluation: cosine of option video rows vs query text row
    const NormalizedRows ev = NormalizedRows::forward(split.eval_video * w_video);
    const NormalizedRows et = NormalizedRows::forward(split.eval_text * w_text);

    std::map<std::tuple<std::string, double, double, std::string>, int> locate;
    for (size_t i = 0; i < split.eval.size(); ++i) {
        const auto& p = split.eval[i].pair;
        locate[{p.video_uid, p.t_start, p.t_end, p.text}] = static_cast<int>(i);
    }
    const auto accuracy_for = [&](mcq::McqSetting setting, int& n_questions) {
        mcq::BuildConfig bc;
        bc.setting = setting;
        bc.count = config.eval_questions;
        bc.seed = Rng(seed).substream("toy/eval").next_u64();
        const auto built = mcq::build_mcq(split.eval, bc);
        std::vector<std::vector<double>> scores;
        for (const auto& q : built.questions) {
            const int query_row =
                locate.at({q.options[q.answer].video_uid, q.options[q.answer].t_start,
                           q.options[q.answer].t_end, q.options[q.answer].text});
            std::vector<double> s(5);
            for (int k = 0; k < 5; ++k) {
                const int row = locate.at(
                    {q.options[k].video_uid, q.options[k].t_start, q.options[k].t_end,
                     q.options[k].text});
                s[static_cast<size_t>(k)] = ev.normalized.row(row).dot(et.normalized.row(query_row));
            }
            scores.push_back(std::move(s));
        }
        n_questions = static_cast<int>(built.questions.size());
        return mcq::score_mcq(built.questions, scores).accuracy;
    };

    SeedResult result;
    result.seed = seed;
    result.final_loss = last_loss;
    result.inter_accuracy = accuracy_for(mcq::McqSetting::inter, result.inter_questions);
    result.intra_accuracy = accuracy_for(mcq::McqSetting::intra, result.intra_questions);
    return result;
}

std::vector<SeedResult> train_toy(const TrainConfig& config, std::span<const uint64_t> seeds) {
    std::vector<SeedResult> results;
    results.reserve(seeds.size());
    for (uint64_t seed : seeds) results.push_back(train_one(config, seed));
    return results;
}

}  // namespace egocurate::toy
