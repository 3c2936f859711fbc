#include "egocurate/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include "egocurate/io.hpp"
#include "egocurate/mcq.hpp"
#include "egocurate/pairing.hpp"
#include "egocurate/parallel.hpp"
#include "egocurate/rng.hpp"
#include "egocurate/synth.hpp"

namespace egocurate::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr const char* kVersion = "0.1.0";

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::string fmt_double(double v) {
    std::ostringstream out;
    out << std::setprecision(17) << v;
    return out.str();
}

}  // namespace

taxonomy::PositiveMode parse_positive_mode(const std::string& s) {
    if (s == "a" || s == "noun") return taxonomy::PositiveMode::noun_only;
    if (s == "b" || s == "verb") return taxonomy::PositiveMode::verb_only;
    if (s == "c" || s == "noun_verb" || s == "noun-and-verb")
        return taxonomy::PositiveMode::noun_and_verb;
    throw std::invalid_argument("unknown positive mode: " + s + " (expected a|b|c)");
}

const char* positive_mode_name(taxonomy::PositiveMode m) {
    switch (m) {
        case taxonomy::PositiveMode::noun_only: return "a";
        case taxonomy::PositiveMode::verb_only: return "b";
        case taxonomy::PositiveMode::noun_and_verb: return "c";
    }
    throw std::logic_error("unreachable");
}

PipelineConfig parse_config_text(const std::string& text) {
    PipelineConfig cfg;
    std::istringstream in(text);
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(line_no) +
                                        ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const auto as_double = [&](const std::string& v) {
            size_t pos = 0;
            double d = 0.0;
            try {
                d = std::stod(v, &pos);
            } catch (const std::exception&) {
                pos = std::string::npos;
            }
            if (pos != v.size())
                throw std::invalid_argument("config line " + std::to_string(line_no) + " (" + key +
                                            "): bad number '" + v + "'");
            return d;
        };
        const auto as_uint = [&](const std::string& v) {
            size_t pos = 0;
            uint64_t u = 0;
            try {
                u = std::stoull(v, &pos);
            } catch (const std::exception&) {
                pos = std::string::npos;
            }
            if (pos != v.size() || v.front() == '-')
                throw std::invalid_argument("config line " + std::to_string(line_no) + " (" + key +
                                            "): bad unsigned integer '" + v + "'");
            return u;
        };
        try {
            if (key == "narrations") cfg.narrations_path = value;
            else if (key == "meta") cfg.meta_path = value;
            else if (key == "taxonomy") cfg.taxonomy_path = value;
            else if (key == "out") cfg.out_dir = value;
            else if (key == "strategy") cfg.strategy = parse_strategy(value);
            else if (key == "alpha") cfg.alpha = as_double(value);
            else if (key == "annotators") {
                if (value != "all" && value != "one")
                    throw std::invalid_argument("annotators must be all|one");
                cfg.annotators = value;
            } else if (key == "positives") cfg.positive_mode = parse_positive_mode(value);
            else if (key == "negatives") cfg.negative_variant = contrastive::parse_negative_variant(value);
            else if (key == "window_sec") cfg.window_sec = as_double(value);
            else if (key == "tau") cfg.tau = as_double(value);
            else if (key == "mcq_count") cfg.mcq_count = static_cast<int>(as_uint(value));
            else if (key == "mcq_max_resample") cfg.mcq_max_resample = static_cast<int>(as_uint(value));
            else if (key == "batch_size") cfg.batch_size = static_cast<int>(as_uint(value));
            else if (key == "embed_dim") cfg.embed_dim = static_cast<int>(as_uint(value));
            else if (key == "seed") cfg.seed = as_uint(value);
            else throw std::invalid_argument("unknown config key '" + key + "'");
        } catch (const std::invalid_argument& e) {
            const std::string what = e.what();
            if (what.rfind("config line", 0) == 0) throw;
            throw std::invalid_argument("config line " + std::to_string(line_no) + " (" + key +
                                        "): " + what);
        }
    }
    return cfg;
}

PipelineConfig load_config(const fs::path& file) {
    try {
        return parse_config_text(io::slurp(file));
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(file.string() + ": " + e.what());
    }
}

std::string serialize_config(const PipelineConfig& c) {
    std::ostringstream out;
    out << "narrations = " << c.narrations_path.string() << '\n'
        << "meta = " << c.meta_path.string() << '\n'
        << "taxonomy = " << c.taxonomy_path.string() << '\n'
        << "out = " << c.out_dir.string() << '\n'
        << "strategy = " << strategy_letter(c.strategy) << '\n'
        << "alpha = " << fmt_double(c.alpha) << '\n'
        << "annotators = " << c.annotators << '\n'
        << "positives = " << positive_mode_name(c.positive_mode) << '\n'
        << "negatives = " << contrastive::negative_variant_letter(c.negative_variant) << '\n'
        << "window_sec = " << fmt_double(c.window_sec) << '\n'
        << "tau = " << fmt_double(c.tau) << '\n'
        << "mcq_count = " << c.mcq_count << '\n'
        << "mcq_max_resample = " << c.mcq_max_resample << '\n'
        << "batch_size = " << c.batch_size << '\n'
        << "embed_dim = " << c.embed_dim << '\n'
        << "seed = " << c.seed << '\n';
    return out.str();
}

std::string config_hash(const PipelineConfig& config) {
    std::ostringstream out;
    out << std::hex << std::setw(16) << std::setfill('0') << Rng::fnv1a(serialize_config(config));
    return out.str();
}

PipelineResult run_pipeline(const PipelineConfig& cfg, bool force) {
    if (cfg.narrations_path.empty() || cfg.meta_path.empty() || cfg.taxonomy_path.empty() ||
        cfg.out_dir.empty())
        throw std::invalid_argument("narrations, meta, taxonomy and out paths are all required");
    if (cfg.batch_size < 1) throw std::invalid_argument("batch_size must be positive");
    if (cfg.embed_dim < 2) throw std::invalid_argument("embed_dim must be at least 2");

    const std::string hash = config_hash(cfg);
    fs::create_directories(cfg.out_dir);
    const fs::path manifest_path = cfg.out_dir / "manifest.json";

    if (!force && fs::exists(manifest_path)) {
        try {
            const json old = json::parse(io::slurp(manifest_path));
            if (old.value("config_hash", "") == hash && old.value("status", "") == "ok") {
                PipelineResult r;
                r.skipped = true;
                r.manifest_path = manifest_path;
                r.manifest = ordered_json::parse(io::slurp(manifest_path));
                return r;
            }
        } catch (const std::exception&) {
            // unreadable manifest: rebuild
        }
    }

    ordered_json stages = ordered_json::object();
    ordered_json artifacts = ordered_json::object();
    std::string current_stage;
    const auto write_artifact = [&](const std::string& name, const std::string& content,
                                    size_t records) {
        io::spit(cfg.out_dir / name, content);
        artifacts[name] = records;
    };

    try {
        // ---- filter ----
        current_stage = "filter";
        std::ifstream nin(cfg.narrations_path);
        if (!nin) throw std::runtime_error("cannot open " + cfg.narrations_path.string());
        const auto format = cfg.narrations_path.extension() == ".csv" ? ingest::InputFormat::csv
                                                                      : ingest::InputFormat::jsonl;
        const ingest::ParseResult parsed = ingest::parse_narrations(nin, format);

        std::ifstream min(cfg.meta_path);
        if (!min) throw std::runtime_error("cannot open " + cfg.meta_path.string());
        const std::vector<VideoMeta> metas = io::read_meta_jsonl(min);
        auto [kept_videos, report] = ingest::filter_videos(metas);

        std::set<std::string> retained_uids;
        for (const auto& v : kept_videos) retained_uids.insert(v.video_uid);

        std::vector<ingest::NarrationStream> streams;
        size_t skipped_no_video = 0;
        for (const auto& stream : parsed.streams) {
            if (!retained_uids.count(stream.video_uid)) {
                skipped_no_video += stream.records.size();
                continue;
            }
            auto [records, nreport] = ingest::filter_narrations(stream.records);
            report.merge(nreport);
            if (!records.empty())
                streams.push_back({stream.video_uid, stream.annotator_id, std::move(records)});
        }
        report.rejected_records = parsed.errors.size();

        {
            std::ostringstream out;
            io::write_meta_jsonl(out, kept_videos);
            write_artifact("videos.filtered.jsonl", out.str(), kept_videos.size());
        }
        size_t kept_narrations = 0;
        {
            std::ostringstream out;
            for (const auto& s : streams) {
                io::write_narrations_jsonl(out, s.records);
                kept_narrations += s.records.size();
            }
            write_artifact("narrations.filtered.jsonl", out.str(), kept_narrations);
        }
        ordered_json filter_stage = report.to_json();
        filter_stage["narrations_skipped_no_video"] = skipped_no_video;
        stages["filter"] = std::move(filter_stage);

        // ---- pair ----
        current_stage = "pair";
        if (cfg.annotators == "one") {
            // one seeded annotator pick per video; streams arrive sorted by
            // (video, annotator) so the draw order is well-defined
            Rng ann_rng = Rng(cfg.seed).substream("pair/annotators");
            std::vector<ingest::NarrationStream> chosen;
            for (size_t i = 0; i < streams.size();) {
                size_t j = i;
                while (j < streams.size() && streams[j].video_uid == streams[i].video_uid) ++j;
                chosen.push_back(std::move(streams[i + ann_rng.uniform_below(j - i)]));
                i = j;
            }
            streams = std::move(chosen);
        }
        std::map<std::string, double> durations;
        for (const auto& v : kept_videos) durations[v.video_uid] = v.duration_sec;
        pairing::PairingConfig pair_cfg;
        pair_cfg.strategy = cfg.strategy;
        pair_cfg.alpha = cfg.alpha;
        const auto per_stream = parallel_map<std::vector<ClipTextPair>>(
            streams.size(), [&](size_t i) {
                return pairing::pair_clips(streams[i], pair_cfg,
                                           durations.at(streams[i].video_uid));
            });
        std::vector<ClipTextPair> pairs;
        for (const auto& chunk : per_stream) pairs.insert(pairs.end(), chunk.begin(), chunk.end());
        {
            std::ostringstream out;
            io::write_pairs_jsonl(out, pairs);
            write_artifact("pairs.jsonl", out.str(), pairs.size());
        }
        stages["pair"] = ordered_json{{"streams", streams.size()},
                                      {"records", pairs.size()},
                                      {"strategy", std::string(1, strategy_letter(cfg.strategy))}};

        // ---- tag ----
        current_stage = "tag";
        const taxonomy::Taxonomy tax = taxonomy::Taxonomy::load(cfg.taxonomy_path);
        const auto tagged = parallel_map<mcq::TaggedPair>(pairs.size(), [&](size_t i) {
            mcq::TaggedPair tp;
            tp.pair = pairs[i];
            tp.tags = tax.tag(pairs[i].text);
            return tp;
        });
        size_t with_both = 0;
        for (const auto& tp : tagged)
            if (tp.tags.has_noun() && tp.tags.has_verb()) ++with_both;
        {
            std::ostringstream out;
            io::write_tagged_jsonl(out, tagged, tax);
            write_artifact("tagged.jsonl", out.str(), tagged.size());
        }
        stages["tag"] = ordered_json{{"records", tagged.size()}, {"with_noun_and_verb", with_both}};

        // ---- mcq ----
        current_stage = "mcq";
        mcq::BuildConfig mcq_cfg;
        mcq_cfg.count = cfg.mcq_count;
        mcq_cfg.seed = Rng(cfg.seed).substream("mcq").next_u64();
        mcq_cfg.max_resample = cfg.mcq_max_resample;
        mcq_cfg.setting = mcq::McqSetting::inter;
        const auto inter = mcq::build_mcq(tagged, mcq_cfg);
        mcq_cfg.setting = mcq::McqSetting::intra;
        const auto intra = mcq::build_mcq(tagged, mcq_cfg);
        mcq::validate_mcq(inter.questions, tagged);
        mcq::validate_mcq(intra.questions, tagged);
        {
            std::ostringstream out;
            io::write_mcq_json(out, inter.questions);
            write_artifact("mcq_inter.json", out.str(), inter.questions.size());
        }
        {
            std::ostringstream out;
            io::write_mcq_json(out, intra.questions);
            write_artifact("mcq_intra.json", out.str(), intra.questions.size());
        }
        stages["mcq"] = ordered_json{
            {"inter_built", inter.report.built},
            {"intra_built", intra.report.built},
            {"warnings", inter.report.warnings.size() + intra.report.warnings.size()}};

        // ---- sample-batch ----
        current_stage = "sample-batch";
        if (tagged.size() < 2)
            throw std::runtime_error("need at least two tagged pairs to sample a batch");
        std::vector<int> order(tagged.size());
        for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
        Rng anchor_rng = Rng(cfg.seed).substream("batch/anchors");
        anchor_rng.shuffle(order);
        const size_t n_anchor = std::min<size_t>(static_cast<size_t>(cfg.batch_size), tagged.size());
        std::vector<int> anchors(order.begin(), order.begin() + static_cast<long>(n_anchor));

        std::vector<ClipTextPair> plain;
        plain.reserve(tagged.size());
        for (const auto& tp : tagged) plain.push_back(tp.pair);
        Rng neg_rng = Rng(cfg.seed).substream("batch/negatives");
        const auto picks = contrastive::sample_scene_negatives(
            plain, anchors, cfg.negative_variant, cfg.window_sec, neg_rng);

        std::vector<mcq::TaggedPair> batch_rows;
        for (int a : anchors) batch_rows.push_back(tagged[static_cast<size_t>(a)]);
        for (const auto& p : picks) batch_rows.push_back(tagged[static_cast<size_t>(p.index)]);

        synth::SynthEmbedConfig embed_cfg;
        embed_cfg.dim = cfg.embed_dim;
        embed_cfg.seed = Rng(cfg.seed).substream("batch/embed").next_u64();
        Eigen::MatrixXd video_emb, text_emb;
        synth::synth_embeddings(batch_rows, embed_cfg, video_emb, text_emb);

        io::EmbeddingRows emb_rows;
        emb_rows.video = video_emb;
        emb_rows.text = text_emb;
        for (int a : anchors) emb_rows.ids.push_back(std::to_string(a));
        for (const auto& p : picks) emb_rows.ids.push_back(std::to_string(p.index));
        io::write_embeddings_binary(cfg.out_dir / "embeddings.bin", emb_rows);
        artifacts["embeddings.bin"] = 2 * emb_rows.video.rows() * emb_rows.video.cols();

        ordered_json batch_json{
            {"n", n_anchor},
            {"variant",
             std::string(1, contrastive::negative_variant_letter(cfg.negative_variant))},
            {"window_sec", cfg.window_sec},
            {"anchors", anchors}};
        std::vector<int> neg_idx;
        std::vector<bool> fallback;
        for (const auto& p : picks) {
            neg_idx.push_back(p.index);
            fallback.push_back(p.fallback);
        }
        batch_json["negatives"] = neg_idx;
        batch_json["fallback"] = fallback;
        write_artifact("batch.json", batch_json.dump(2) + "\n", 1);
        stages["sample_batch"] = ordered_json{{"anchors", n_anchor},
                                              {"rows", batch_rows.size()}};

        // ---- loss-check ----
        current_stage = "loss-check";
        std::vector<taxonomy::TagVector> batch_tags;
        for (const auto& tp : batch_rows) batch_tags.push_back(tp.tags);
        const auto positives = contrastive::build_positive_sets(batch_tags, cfg.positive_mode);
        const auto info = contrastive::info_nce(video_emb, text_emb, cfg.tau);
        const auto ego = contrastive::ego_nce(video_emb, text_emb, positives, cfg.tau);

        const Eigen::Index rows = video_emb.rows();
        Eigen::MatrixXd sims = video_emb * text_emb.transpose();
        Eigen::MatrixXd corr = Eigen::MatrixXd::Zero(rows, rows);
        for (Eigen::Index i = 0; i < rows; ++i) {
            for (Eigen::Index j = 0; j < rows; ++j)
                corr(i, j) = std::min<double>(
                    1.0, static_cast<double>(taxonomy::positive_score(
                             batch_tags[static_cast<size_t>(i)], batch_tags[static_cast<size_t>(j)])));
            corr(i, i) = 1.0;
        }
        const auto margin = contrastive::max_margin_loss(sims, corr);

        // gradient spot-check on a leading sub-batch (anchors + their own
        // negatives) to keep the finite-difference sweep cheap
        const Eigen::Index m = std::min<Eigen::Index>(8, static_cast<Eigen::Index>(n_anchor));
        const Eigen::Index half = static_cast<Eigen::Index>(n_anchor);
        Eigen::MatrixXd v_sub(2 * m, video_emb.cols()), t_sub(2 * m, text_emb.cols());
        std::vector<taxonomy::TagVector> sub_tags;
        for (Eigen::Index i = 0; i < m; ++i) {
            v_sub.row(i) = video_emb.row(i);
            t_sub.row(i) = text_emb.row(i);
            sub_tags.push_back(batch_tags[static_cast<size_t>(i)]);
        }
        for (Eigen::Index i = 0; i < m; ++i) {
            v_sub.row(m + i) = video_emb.row(half + i);
            t_sub.row(m + i) = text_emb.row(half + i);
            sub_tags.push_back(batch_tags[static_cast<size_t>(half + i)]);
        }
        const auto sub_positives = contrastive::build_positive_sets(sub_tags, cfg.positive_mode);
        const double err_info = contrastive::gradient_check_info_nce(v_sub, t_sub, cfg.tau);
        const double err_ego =
            contrastive::gradient_check_ego_nce(v_sub, t_sub, sub_positives, cfg.tau);
        Eigen::MatrixXd sims_sub = v_sub * t_sub.transpose();
        Eigen::MatrixXd corr_sub = Eigen::MatrixXd::Zero(2 * m, 2 * m);
        for (Eigen::Index i = 0; i < 2 * m; ++i) {
            for (Eigen::Index j = 0; j < 2 * m; ++j)
                corr_sub(i, j) = std::min<double>(
                    1.0, static_cast<double>(taxonomy::positive_score(
                             sub_tags[static_cast<size_t>(i)], sub_tags[static_cast<size_t>(j)])));
            corr_sub(i, i) = 1.0;
        }
        const double slack = contrastive::min_hinge_slack(sims_sub, corr_sub);
        const double err_margin =
            slack > 1e-3 ? contrastive::gradient_check_max_margin(sims_sub, corr_sub) : -1.0;

        ordered_json losses{
            {"tau", cfg.tau},
            {"info_nce", {{"value", info.value}, {"max_grad_error", err_info}}},
            {"ego_nce", {{"value", ego.value}, {"max_grad_error", err_ego}}},
            {"max_margin",
             {{"value", margin.value},
              {"max_grad_error", err_margin},
              {"min_hinge_slack", slack}}}};
        write_artifact("losses.json", losses.dump(2) + "\n", 1);
        stages["loss_check"] = losses;
    } catch (const std::exception& e) {
        ordered_json manifest{{"config_hash", hash}, {"version", kVersion},
                              {"status", "failed"},  {"failed_stage", current_stage},
                              {"error", e.what()},   {"stages", stages},
                              {"artifacts", artifacts}};
        io::spit(manifest_path, manifest.dump(2) + "\n");
        throw std::runtime_error("stage " + current_stage + ": " + e.what());
    }

    ordered_json manifest{{"config_hash", hash},
                          {"version", kVersion},
                          {"status", "ok"},
                          {"stages", stages},
                          {"artifacts", artifacts}};
    io::spit(manifest_path, manifest.dump(2) + "\n");

    PipelineResult result;
    result.skipped = false;
    result.manifest_path = manifest_path;
    result.manifest = std::move(manifest);
    return result;
}

}  // namespace egocurate::pipeline
