// Command line front end for the curation library: filtering, pairing,
// tagging, MCQ building/scoring, batch sampling, loss checks, the toy
// trainer, metric evaluation, fixture generation and the end-to-end pipeline.

#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "egocurate/io.hpp"
#include "egocurate/metrics.hpp"
#include "egocurate/pairing.hpp"
#include "egocurate/pipeline.hpp"
#include "egocurate/synth.hpp"
#include "egocurate/toy.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;
using namespace egocurate;

namespace {

std::ifstream open_in(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw std::runtime_error("cannot open " + p.string());
    return in;
}

void emit(const ordered_json& j, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << j.dump(2) << '\n';
    } else {
        io::spit(out_path, j.dump(2) + "\n");
    }
}

// one {"<key>": [..]} row per line, equal lengths -> dense matrix
Eigen::MatrixXd read_matrix_jsonl(const fs::path& p, const std::string& key) {
    auto in = open_in(p);
    std::vector<std::vector<double>> rows;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            rows.push_back(json::parse(line).at(key).get<std::vector<double>>());
        } catch (const json::exception& e) {
            throw std::runtime_error(p.string() + " line " + std::to_string(line_no) + ": " +
                                     e.what());
        }
        if (rows.back().size() != rows.front().size())
            throw std::runtime_error(p.string() + " line " + std::to_string(line_no) +
                                     ": ragged row");
    }
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                      rows.empty() ? 0 : static_cast<Eigen::Index>(rows.front().size()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            m(i, j) = rows[static_cast<size_t>(i)][static_cast<size_t>(j)];
    return m;
}

std::vector<mcq::TaggedPair> load_tagged(const fs::path& tagged_path, const fs::path& tax_path) {
    const auto tax = taxonomy::Taxonomy::load(tax_path);
    auto in = open_in(tagged_path);
    return io::read_tagged_jsonl(in, tax);
}

ordered_json score_questions(const fs::path& questions_path, const fs::path& scores_path) {
    auto qin = open_in(questions_path);
    const auto questions = io::read_mcq_json(qin);
    auto sin = open_in(scores_path);
    const auto scores = io::read_score_rows_jsonl(sin);
    const auto acc = mcq::score_mcq(questions, scores);
    return ordered_json{
        {"accuracy", acc.accuracy}, {"correct", acc.correct}, {"total", acc.total}};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"curation toolkit for narrated egocentric video"};
    app.require_subcommand(1);

    std::string narrations_path, meta_path, taxonomy_path, pairs_path, tagged_path;
    std::string questions_path, scores_path, embeddings_path, rel_path, preds_path, gt_path;
    std::string out_path, out_dir, config_path;
    std::string strategy = "f", annotators = "all", setting = "inter", variant = "f";
    std::string objective = "egonce", positives = "c";
    double alpha = 4.9, tau = 0.05, window_sec = 60.0;
    int count = 1000, max_resample = 50, batch_size = 32, dim = 16;
    int seeds = 5, steps = toy::TrainConfig{}.steps;
    double lr = 4.0;
    uint64_t seed = 7, seed_base = 1;
    bool force = false, clean = false;
    int videos = 12, narrations_per_video = 24, scenes = 4, actions = 8;
    std::vector<std::string> overrides;

    ordered_json result;  // each callback fills this; printed after parse

    auto* filter = app.add_subcommand("filter", "apply the video and narration filter rules");
    filter->add_option("--narrations", narrations_path)->required();
    filter->add_option("--meta", meta_path)->required();
    filter->add_option("--out-dir", out_dir)->required();
    filter->callback([&] {
        auto in = open_in(narrations_path);
        const auto format = fs::path(narrations_path).extension() == ".csv"
                                ? ingest::InputFormat::csv
                                : ingest::InputFormat::jsonl;
        const auto parsed = ingest::parse_narrations(in, format);
        auto min = open_in(meta_path);
        const auto metas = io::read_meta_jsonl(min);
        auto [videos_kept, report] = ingest::filter_videos(metas);
        std::set<std::string> keep;
        for (const auto& v : videos_kept) keep.insert(v.video_uid);

        fs::create_directories(out_dir);
        std::ofstream vout(fs::path(out_dir) / "videos.filtered.jsonl");
        io::write_meta_jsonl(vout, videos_kept);
        std::ofstream nout(fs::path(out_dir) / "narrations.filtered.jsonl");
        size_t skipped_no_video = 0;
        for (const auto& stream : parsed.streams) {
            if (!keep.count(stream.video_uid)) {
                skipped_no_video += stream.records.size();
                continue;
            }
            auto [records, nreport] = ingest::filter_narrations(stream.records);
            report.merge(nreport);
            io::write_narrations_jsonl(nout, records);
        }
        report.rejected_records = parsed.errors.size();
        result = report.to_json();
        result["narrations_skipped_no_video"] = skipped_no_video;
    });

    auto* pair = app.add_subcommand("pair", "derive clip intervals for each narration");
    pair->add_option("--narrations", narrations_path)->required();
    pair->add_option("--meta", meta_path)->required();
    pair->add_option("--out", out_path)->required();
    pair->add_option("--strategy", strategy, "interval strategy a..f");
    pair->add_option("--alpha", alpha, "corpus-scale mean gap, seconds");
    pair->add_option("--annotators", annotators, "all|one (seeded pick per video)");
    pair->add_option("--seed", seed);
    pair->callback([&] {
        auto in = open_in(narrations_path);
        const auto format = fs::path(narrations_path).extension() == ".csv"
                                ? ingest::InputFormat::csv
                                : ingest::InputFormat::jsonl;
        const auto parsed = ingest::parse_narrations(in, format);
        auto min = open_in(meta_path);
        const auto metas = io::read_meta_jsonl(min);
        std::map<std::string, double> durations;
        for (const auto& m : metas) durations[m.video_uid] = m.duration_sec;

        std::vector<ingest::NarrationStream> streams;
        for (const auto& s : parsed.streams)
            if (durations.count(s.video_uid)) streams.push_back(s);
        if (annotators == "one") {
            Rng ann_rng = Rng(seed).substream("pair/annotators");
            std::vector<ingest::NarrationStream> chosen;
            for (size_t i = 0; i < streams.size();) {
                size_t j = i;
                while (j < streams.size() && streams[j].video_uid == streams[i].video_uid) ++j;
                chosen.push_back(std::move(streams[i + ann_rng.uniform_below(j - i)]));
                i = j;
            }
            streams = std::move(chosen);
        } else if (annotators != "all") {
            throw std::runtime_error("--annotators must be all|one");
        }

        pairing::PairingConfig pc;
        pc.strategy = parse_strategy(strategy);
        pc.alpha = alpha;
        std::vector<ClipTextPair> pairs;
        for (const auto& s : streams) {
            auto clips = pairing::pair_clips(s, pc, durations.at(s.video_uid));
            pairs.insert(pairs.end(), clips.begin(), clips.end());
        }
        std::ofstream out(out_path);
        if (!out) throw std::runtime_error("cannot write " + out_path);
        io::write_pairs_jsonl(out, pairs);
        result = ordered_json{{"streams", streams.size()}, {"pairs", pairs.size()}};
    });

    auto* tag = app.add_subcommand("tag", "resolve verb/noun groups for each pair");
    tag->add_option("--pairs", pairs_path)->required();
    tag->add_option("--taxonomy", taxonomy_path)->required();
    tag->add_option("--out", out_path)->required();
    tag->callback([&] {
        const auto tax = taxonomy::Taxonomy::load(taxonomy_path);
        auto in = open_in(pairs_path);
        const auto pairs = io::read_pairs_jsonl(in);
        std::vector<mcq::TaggedPair> tagged;
        size_t with_both = 0;
        for (const auto& p : pairs) {
            mcq::TaggedPair tp;
            tp.pair = p;
            tp.tags = tax.tag(p.text);
            if (tp.tags.has_noun() && tp.tags.has_verb()) ++with_both;
            tagged.push_back(std::move(tp));
        }
        std::ofstream out(out_path);
        if (!out) throw std::runtime_error("cannot write " + out_path);
        io::write_tagged_jsonl(out, tagged, tax);
        result = ordered_json{{"records", tagged.size()}, {"with_noun_and_verb", with_both}};
    });

    auto* mcq_cmd = app.add_subcommand("mcq", "multiple-choice benchmark tools");
    mcq_cmd->require_subcommand(1);
    auto* mcq_build = mcq_cmd->add_subcommand("build", "generate questions from tagged pairs");
    mcq_build->add_option("--tagged", tagged_path)->required();
    mcq_build->add_option("--taxonomy", taxonomy_path)->required();
    mcq_build->add_option("--setting", setting, "inter|intra");
    mcq_build->add_option("--count", count);
    mcq_build->add_option("--seed", seed);
    mcq_build->add_option("--max-resample", max_resample);
    mcq_build->add_option("--out", out_path)->required();
    mcq_build->callback([&] {
        const auto tagged = load_tagged(tagged_path, taxonomy_path);
        mcq::BuildConfig bc;
        bc.setting = mcq::parse_mcq_setting(setting);
        bc.count = count;
        bc.seed = seed;
        bc.max_resample = max_resample;
        const auto built = mcq::build_mcq(tagged, bc);
        mcq::validate_mcq(built.questions, tagged);
        std::ofstream out(out_path);
        if (!out) throw std::runtime_error("cannot write " + out_path);
        io::write_mcq_json(out, built.questions);
        result = ordered_json{{"requested", built.report.requested},
                              {"built", built.report.built},
                              {"warnings", built.report.warnings}};
    });
    auto* mcq_score = mcq_cmd->add_subcommand("score", "accuracy of per-option score rows");
    mcq_score->add_option("--questions", questions_path)->required();
    mcq_score->add_option("--scores", scores_path)->required();
    mcq_score->callback([&] { result = score_questions(questions_path, scores_path); });

    auto* sample = app.add_subcommand("sample-batch",
                                      "draw anchors plus scene negatives and embed them");
    sample->add_option("--tagged", tagged_path)->required();
    sample->add_option("--taxonomy", taxonomy_path)->required();
    sample->add_option("--out-dir", out_dir)->required();
    sample->add_option("--variant", variant, "negative variant d|e|f");
    sample->add_option("--window", window_sec);
    sample->add_option("--batch-size", batch_size);
    sample->add_option("--dim", dim);
    sample->add_option("--seed", seed);
    sample->callback([&] {
        const auto tagged = load_tagged(tagged_path, taxonomy_path);
        if (tagged.size() < 2) throw std::runtime_error("need at least two tagged pairs");
        std::vector<int> order(tagged.size());
        for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
        Rng anchor_rng = Rng(seed).substream("batch/anchors");
        anchor_rng.shuffle(order);
        const size_t n = std::min<size_t>(static_cast<size_t>(batch_size), tagged.size());
        const std::vector<int> anchors(order.begin(), order.begin() + static_cast<long>(n));

        std::vector<ClipTextPair> plain;
        for (const auto& tp : tagged) plain.push_back(tp.pair);
        Rng neg_rng = Rng(seed).substream("batch/negatives");
        const auto picks = contrastive::sample_scene_negatives(
            plain, anchors, contrastive::parse_negative_variant(variant), window_sec, neg_rng);

        std::vector<mcq::TaggedPair> rows;
        for (int a : anchors) rows.push_back(tagged[static_cast<size_t>(a)]);
        for (const auto& p : picks) rows.push_back(tagged[static_cast<size_t>(p.index)]);
        synth::SynthEmbedConfig ec;
        ec.dim = dim;
        ec.seed = Rng(seed).substream("batch/embed").next_u64();
        io::EmbeddingRows emb;
        synth::synth_embeddings(rows, ec, emb.video, emb.text);
        for (int a : anchors) emb.ids.push_back(std::to_string(a));
        for (const auto& p : picks) emb.ids.push_back(std::to_string(p.index));

        fs::create_directories(out_dir);
        io::write_embeddings_binary(fs::path(out_dir) / "embeddings.bin", emb);
        std::vector<int> neg_idx;
        std::vector<bool> fallback;
        for (const auto& p : picks) {
            neg_idx.push_back(p.index);
            fallback.push_back(p.fallback);
        }
        ordered_json batch{{"n", n},          {"variant", variant}, {"window_sec", window_sec},
                           {"anchors", anchors}, {"negatives", neg_idx}, {"fallback", fallback}};
        io::spit(fs::path(out_dir) / "batch.json", batch.dump(2) + "\n");
        result = ordered_json{{"rows", rows.size()},
                              {"out", (fs::path(out_dir) / "embeddings.bin").string()}};
    });

    auto* loss = app.add_subcommand("loss-check",
                                    "objective values and gradient checks on embeddings");
    loss->add_option("--embeddings", embeddings_path)->required();
    loss->add_option("--tagged", tagged_path, "tagged rows aligned with the embedding ids");
    loss->add_option("--taxonomy", taxonomy_path);
    loss->add_option("--tau", tau);
    loss->add_option("--positives", positives, "positive mode a|b|c");
    loss->callback([&] {
        const auto emb = io::read_embeddings(embeddings_path);
        const Eigen::Index n = emb.video.rows();
        if (n < 2) throw std::runtime_error("need at least two embedding rows");

        std::vector<std::vector<int>> pos_sets;
        Eigen::MatrixXd corr = Eigen::MatrixXd::Identity(n, n);
        if (!tagged_path.empty()) {
            if (taxonomy_path.empty())
                throw std::runtime_error("--tagged requires --taxonomy");
            const auto tagged = load_tagged(tagged_path, taxonomy_path);
            std::vector<taxonomy::TagVector> tags;
            if (tagged.size() == static_cast<size_t>(n)) {
                for (const auto& tp : tagged) tags.push_back(tp.tags);
            } else {
                // ids index into the tagged corpus
                for (const auto& id : emb.ids)
                    tags.push_back(tagged.at(std::stoul(id)).tags);
            }
            pos_sets = contrastive::build_positive_sets(tags, pipeline::parse_positive_mode(positives));
            for (Eigen::Index i = 0; i < n; ++i) {
                for (Eigen::Index j = 0; j < n; ++j)
                    corr(i, j) = std::min<double>(
                        1.0, static_cast<double>(taxonomy::positive_score(
                                 tags[static_cast<size_t>(i)], tags[static_cast<size_t>(j)])));
                corr(i, i) = 1.0;
            }
        } else {
            for (Eigen::Index i = 0; i < n; ++i)
                pos_sets.push_back({static_cast<int>(i)});
        }

        const auto info = contrastive::info_nce(emb.video, emb.text, tau);
        const auto ego = contrastive::ego_nce(emb.video, emb.text, pos_sets, tau);
        const Eigen::MatrixXd sims = emb.video * emb.text.transpose();
        const auto margin = contrastive::max_margin_loss(sims, corr);
        const double err_info = contrastive::gradient_check_info_nce(emb.video, emb.text, tau);
        const double err_ego =
            contrastive::gradient_check_ego_nce(emb.video, emb.text, pos_sets, tau);
        const double slack = contrastive::min_hinge_slack(sims, corr);
        const double err_margin =
            slack > 1e-3 ? contrastive::gradient_check_max_margin(sims, corr) : -1.0;
        result = ordered_json{
            {"rows", n},
            {"tau", tau},
            {"info_nce", {{"value", info.value}, {"max_grad_error", err_info}}},
            {"ego_nce", {{"value", ego.value}, {"max_grad_error", err_ego}}},
            {"max_margin",
             {{"value", margin.value},
              {"max_grad_error", err_margin},
              {"min_hinge_slack", slack}}}};
    });

    auto* train = app.add_subcommand("train-toy",
                                     "directional check of the objectives on a synthetic world");
    toy::TrainConfig toy_defaults;
    double scene_strength = toy_defaults.features.scene_strength;
    double action_strength = toy_defaults.features.action_strength;
    double feature_noise = toy_defaults.features.video_noise;
    train->add_option("--objective", objective, "infonce|egonce");
    train->add_option("--seeds", seeds, "number of seeds, run as seed-base..seed-base+n-1");
    train->add_option("--seed-base", seed_base);
    train->add_option("--steps", steps);
    train->add_option("--lr", lr);
    train->add_option("--tau", tau);
    train->add_option("--dim", dim);
    train->add_option("--negatives", variant, "negative variant d|e|f");
    train->add_option("--window", window_sec);
    train->add_option("--positives", positives, "positive mode a|b|c");
    train->add_option("--scene-strength", scene_strength, "scene block weight in video features");
    train->add_option("--action-strength", action_strength, "verb/noun block weight in video features");
    train->add_option("--feature-noise", feature_noise, "gaussian noise on both feature blocks");
    train->callback([&] {
        toy::TrainConfig tc;
        tc.objective = toy::parse_objective(objective);
        tc.steps = steps;
        tc.lr = lr;
        tc.tau = tau;
        tc.dim = dim;
        tc.negatives = contrastive::parse_negative_variant(variant);
        tc.window_sec = window_sec;
        tc.positives = pipeline::parse_positive_mode(positives);
        tc.features.scene_strength = scene_strength;
        tc.features.action_strength = action_strength;
        tc.features.video_noise = feature_noise;
        tc.features.text_noise = feature_noise;
        std::vector<uint64_t> seed_list;
        for (int i = 0; i < seeds; ++i) seed_list.push_back(seed_base + static_cast<uint64_t>(i));
        const auto per_seed = toy::train_toy(tc, seed_list);
        ordered_json rows = ordered_json::array();
        double mean_intra = 0.0, mean_inter = 0.0;
        for (const auto& r : per_seed) {
            rows.push_back(ordered_json{{"seed", r.seed},
                                        {"final_loss", r.final_loss},
                                        {"inter_accuracy", r.inter_accuracy},
                                        {"intra_accuracy", r.intra_accuracy},
                                        {"inter_questions", r.inter_questions},
                                        {"intra_questions", r.intra_questions}});
            mean_intra += r.intra_accuracy;
            mean_inter += r.inter_accuracy;
        }
        const double k = per_seed.empty() ? 1.0 : static_cast<double>(per_seed.size());
        result = ordered_json{{"objective", objective},
                              {"seeds", rows},
                              {"mean_inter_accuracy", mean_inter / k},
                              {"mean_intra_accuracy", mean_intra / k}};
    });

    auto* eval = app.add_subcommand("eval", "evaluation metrics");
    eval->require_subcommand(1);
    auto* eval_ret = eval->add_subcommand("retrieval", "mAP and nDCG in both directions");
    eval_ret->add_option("--scores", scores_path)->required();
    eval_ret->add_option("--rel", rel_path)->required();
    eval_ret->add_option("--out", out_path);
    eval_ret->callback([&] {
        const Eigen::MatrixXd scores = read_matrix_jsonl(scores_path, "scores");
        const Eigen::MatrixXd rel = read_matrix_jsonl(rel_path, "rel");
        const auto direction = [&](const Eigen::MatrixXd& s, const Eigen::MatrixXd& c) {
            const auto ap = metrics::mean_average_precision(s, c);
            const auto nd = metrics::ndcg(s, c);
            return ordered_json{{"mAP", ap.value},
                                {"nDCG", nd.value},
                                {"queries_used", ap.queries_used},
                                {"queries_skipped", ap.queries_skipped}};
        };
        const auto v2t = direction(scores, rel);
        const auto t2v = direction(scores.transpose(), rel.transpose());
        result = ordered_json{
            {"v2t", v2t},
            {"t2v", t2v},
            {"avg",
             {{"mAP", (v2t.at("mAP").get<double>() + t2v.at("mAP").get<double>()) / 2.0},
              {"nDCG", (v2t.at("nDCG").get<double>() + t2v.at("nDCG").get<double>()) / 2.0}}}};
        emit(result, out_path);
        result = ordered_json();  // already emitted
    });
    auto* eval_gr = eval->add_subcommand("grounding", "Recall@K at IoU thresholds");
    eval_gr->add_option("--preds", preds_path)->required();
    eval_gr->add_option("--gt", gt_path)->required();
    eval_gr->add_option("--out", out_path);
    eval_gr->callback([&] {
        auto pin = open_in(preds_path);
        std::vector<std::vector<Interval>> preds;
        std::string line;
        while (std::getline(pin, line)) {
            if (line.empty()) continue;
            std::vector<Interval> row;
            for (const auto& iv : json::parse(line).at("intervals"))
                row.push_back({iv.at(0).get<double>(), iv.at(1).get<double>()});
            preds.push_back(std::move(row));
        }
        auto gin = open_in(gt_path);
        std::vector<Interval> gt;
        while (std::getline(gin, line)) {
            if (line.empty()) continue;
            const auto iv = json::parse(line).at("interval");
            gt.push_back({iv.at(0).get<double>(), iv.at(1).get<double>()});
        }
        const auto table = metrics::recall_at_k(preds, gt);
        result = ordered_json::object();
        for (size_t ik = 0; ik < table.ks.size(); ++ik)
            for (size_t it = 0; it < table.thresholds.size(); ++it) {
                std::ostringstream key;
                key << "R@" << table.ks[ik] << "-IoU=" << table.thresholds[it];
                result[key.str()] =
                    table.values(static_cast<Eigen::Index>(ik), static_cast<Eigen::Index>(it));
            }
        emit(result, out_path);
        result = ordered_json();
    });
    auto* eval_mcq = eval->add_subcommand("mcq", "accuracy of per-option score rows");
    eval_mcq->add_option("--questions", questions_path)->required();
    eval_mcq->add_option("--scores", scores_path)->required();
    eval_mcq->callback([&] { result = score_questions(questions_path, scores_path); });

    auto* gen = app.add_subcommand("gen-fixture", "write a synthetic corpus fixture");
    gen->add_option("--out-dir", out_dir)->required();
    gen->add_option("--videos", videos);
    gen->add_option("--narrations", narrations_per_video, "narrations per video");
    gen->add_option("--scenes", scenes);
    gen->add_option("--actions", actions, "actions per scene");
    gen->add_option("--seed", seed);
    gen->add_flag("--clean", clean, "omit the noise records the filters reject");
    gen->callback([&] {
        synth::FixtureConfig fc;
        fc.world.num_videos = videos;
        fc.world.narrations_per_video = narrations_per_video;
        fc.world.num_scenes = scenes;
        fc.world.actions_per_scene = actions;
        fc.world.seed = seed;
        fc.with_noise = !clean;
        synth::write_fixture(out_dir, fc);
        result = ordered_json{{"out_dir", out_dir},
                              {"videos", videos},
                              {"narrations_per_video", narrations_per_video},
                              {"noise", !clean}};
    });

    auto* run = app.add_subcommand("run", "execute the full pipeline from a config file");
    run->add_option("--config", config_path)->required();
    run->add_option("--set", overrides, "override a config entry, key=value")
        ->take_all();
    run->add_flag("--force", force, "rebuild even if the manifest hash matches");
    run->callback([&] {
        std::string text = io::slurp(config_path);
        for (const auto& o : overrides) text += "\n" + o + "\n";
        const auto cfg = pipeline::parse_config_text(text);
        const auto r = pipeline::run_pipeline(cfg, force);
        result = ordered_json{{"skipped", r.skipped},
                              {"manifest", r.manifest_path.string()},
                              {"config_hash", r.manifest.at("config_hash")}};
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << ordered_json{{"error", e.what()}}.dump() << '\n';
        return e.get_exit_code() == 0 ? 1 : e.get_exit_code();
    } catch (const std::exception& e) {
        std::cerr << ordered_json{{"error", e.what()}}.dump() << '\n';
        return 1;
    }

    if (!result.is_null()) std::cout << result.dump(2) << '\n';
    return 0;
}
