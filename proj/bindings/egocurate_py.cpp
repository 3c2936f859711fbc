#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <string>
#include <vector>

#include "egocurate/contrastive.hpp"
#include "egocurate/ingest.hpp"
#include "egocurate/mcq.hpp"
#include "egocurate/metrics.hpp"
#include "egocurate/pairing.hpp"
#include "egocurate/pipeline.hpp"
#include "egocurate/rng.hpp"
#include "egocurate/synth.hpp"
#include "egocurate/taxonomy.hpp"
#include "egocurate/types.hpp"

namespace py = pybind11;
using namespace egocurate;

PYBIND11_MODULE(_egocurate, m) {
    m.doc() = "Clip-text curation core: filtering, pairing, tagging, contrastive "
              "objectives, MCQ benchmarks and retrieval metrics.";
    m.attr("__version__") = "0.1.0";

    // ---- records and filters ----
    py::class_<NarrationRecord>(m, "NarrationRecord")
        .def(py::init([](std::string video_uid, std::string annotator_id, double timestamp_sec,
                         std::string text) {
                 return NarrationRecord{std::move(video_uid), std::move(annotator_id),
                                        timestamp_sec, std::move(text)};
             }),
             py::arg("video_uid"), py::arg("annotator_id") = "ann_1",
             py::arg("timestamp_sec") = 0.0, py::arg("text") = "")
        .def_readwrite("video_uid", &NarrationRecord::video_uid)
        .def_readwrite("annotator_id", &NarrationRecord::annotator_id)
        .def_readwrite("timestamp_sec", &NarrationRecord::timestamp_sec)
        .def_readwrite("text", &NarrationRecord::text);

    py::class_<VideoMeta>(m, "VideoMeta")
        .def(py::init([](std::string video_uid, double duration_sec, int width_px, int height_px,
                         bool is_stereo) {
                 VideoMeta v;
                 v.video_uid = std::move(video_uid);
                 v.duration_sec = duration_sec;
                 v.width_px = width_px;
                 v.height_px = height_px;
                 v.is_stereo = is_stereo;
                 return v;
             }),
             py::arg("video_uid"), py::arg("duration_sec"), py::arg("width_px"),
             py::arg("height_px"), py::arg("is_stereo") = false)
        .def_readwrite("video_uid", &VideoMeta::video_uid)
        .def_readwrite("duration_sec", &VideoMeta::duration_sec)
        .def_readwrite("width_px", &VideoMeta::width_px)
        .def_readwrite("height_px", &VideoMeta::height_px)
        .def_readwrite("is_stereo", &VideoMeta::is_stereo)
        .def_readonly("halve_width", &VideoMeta::halve_width);

    py::class_<ingest::FilterReport>(m, "FilterReport")
        .def_readonly("videos_in", &ingest::FilterReport::videos_in)
        .def_readonly("videos_retained", &ingest::FilterReport::videos_retained)
        .def_readonly("videos_dropped_aspect", &ingest::FilterReport::videos_dropped_aspect)
        .def_readonly("videos_flagged_halve", &ingest::FilterReport::videos_flagged_halve)
        .def_readonly("narrations_in", &ingest::FilterReport::narrations_in)
        .def_readonly("narrations_retained", &ingest::FilterReport::narrations_retained)
        .def_readonly("narrations_dropped_unsure", &ingest::FilterReport::narrations_dropped_unsure)
        .def_readonly("narrations_dropped_short", &ingest::FilterReport::narrations_dropped_short)
        .def_readonly("rejected_records", &ingest::FilterReport::rejected_records);

    m.def("filter_videos", &ingest::filter_videos, py::arg("metas"),
          "Drop extreme aspect ratios, halving stereo widths first; returns (kept, report).");
    m.def("filter_narrations", &ingest::filter_narrations, py::arg("records"),
          "Drop uncertainty-tagged and too-short narrations; returns (kept, report).");
    m.def("has_unsure_tag", &ingest::has_unsure_tag, py::arg("text"));
    m.def("content_word_count", &ingest::content_word_count, py::arg("text"));

    // ---- pairing ----
    py::class_<ClipTextPair>(m, "ClipTextPair")
        .def(py::init([](std::string video_uid, double t_start, double t_end, std::string text,
                         double narration_timestamp, double beta_sec, const std::string& strategy) {
                 ClipTextPair p;
                 p.video_uid = std::move(video_uid);
                 p.t_start = t_start;
                 p.t_end = t_end;
                 p.text = std::move(text);
                 p.narration_timestamp = narration_timestamp;
                 p.beta_sec = beta_sec;
                 p.strategy = parse_strategy(strategy);
                 return p;
             }),
             py::arg("video_uid") = "", py::arg("t_start") = 0.0, py::arg("t_end") = 0.0,
             py::arg("text") = "", py::arg("narration_timestamp") = 0.0,
             py::arg("beta_sec") = 0.0, py::arg("strategy") = "f")
        .def_readwrite("video_uid", &ClipTextPair::video_uid)
        .def_readwrite("t_start", &ClipTextPair::t_start)
        .def_readwrite("t_end", &ClipTextPair::t_end)
        .def_readwrite("text", &ClipTextPair::text)
        .def_readwrite("narration_timestamp", &ClipTextPair::narration_timestamp)
        .def_readwrite("beta_sec", &ClipTextPair::beta_sec)
        .def_property(
            "strategy", [](const ClipTextPair& p) { return std::string(1, strategy_letter(p.strategy)); },
            [](ClipTextPair& p, const std::string& s) { p.strategy = parse_strategy(s); });

    py::class_<SegmentLocator>(m, "SegmentLocator")
        .def_readonly("segment_index", &SegmentLocator::segment_index)
        .def_readonly("local_start", &SegmentLocator::local_start)
        .def_readonly("local_end", &SegmentLocator::local_end);

    m.def(
        "compute_beta",
        [](const std::vector<double>& timestamps) { return pairing::compute_beta(timestamps); },
        py::arg("timestamps"), "Mean gap between consecutive narration timestamps.");
    m.def(
        "resolve_beta",
        [](const std::vector<double>& timestamps, double alpha) {
            return pairing::resolve_beta(timestamps, alpha);
        },
        py::arg("timestamps"), py::arg("alpha") = 4.9);
    m.def(
        "pair_stream",
        [](const std::string& video_uid, const std::vector<double>& timestamps,
           const std::vector<std::string>& texts, const std::string& strategy, double alpha,
           double duration, bool clamp, const std::string& annotator) {
            if (timestamps.size() != texts.size())
                throw std::invalid_argument("timestamps and texts must align");
            ingest::NarrationStream stream{video_uid, annotator, {}};
            for (size_t i = 0; i < timestamps.size(); ++i)
                stream.records.push_back({video_uid, annotator, timestamps[i], texts[i]});
            pairing::PairingConfig pc;
            pc.strategy = parse_strategy(strategy);
            pc.alpha = alpha;
            pc.clamp_to_video = clamp;
            return pairing::pair_clips(stream, pc, duration);
        },
        py::arg("video_uid"), py::arg("timestamps"), py::arg("texts"), py::arg("strategy") = "f",
        py::arg("alpha") = 4.9, py::arg("duration") = 0.0, py::arg("clamp") = true,
        py::arg("annotator") = "ann_1",
        "One clip interval per narration of a single stream, per the chosen strategy.");
    m.def(
        "locate_segment",
        [](const ClipTextPair& pair, double segment_len) {
            return pairing::locate_segment(pair, segment_len);
        },
        py::arg("pair"), py::arg("segment_len") = 600.0);

    // ---- taxonomy ----
    py::class_<taxonomy::TagVector>(m, "TagVector")
        .def_readonly("noun_ids", &taxonomy::TagVector::noun_ids)
        .def_readonly("verb_ids", &taxonomy::TagVector::verb_ids)
        .def_readonly("first_noun", &taxonomy::TagVector::first_noun)
        .def_readonly("first_verb", &taxonomy::TagVector::first_verb)
        .def_readonly("k1", &taxonomy::TagVector::k1)
        .def_readonly("k2", &taxonomy::TagVector::k2)
        .def("has_noun", &taxonomy::TagVector::has_noun)
        .def("has_verb", &taxonomy::TagVector::has_verb);

    py::class_<taxonomy::Taxonomy>(m, "Taxonomy")
        .def_static("load", &taxonomy::Taxonomy::load, py::arg("file"))
        .def_static(
            "from_json_text",
            [](const std::string& text) {
                return taxonomy::Taxonomy::from_json(nlohmann::json::parse(text));
            },
            py::arg("text"))
        .def("tag", [](const taxonomy::Taxonomy& t, const std::string& text) { return t.tag(text); },
             py::arg("text"))
        .def("noun_count", &taxonomy::Taxonomy::noun_count)
        .def("verb_count", &taxonomy::Taxonomy::verb_count)
        .def("noun_label", &taxonomy::Taxonomy::noun_label, py::arg("id"))
        .def("verb_label", &taxonomy::Taxonomy::verb_label, py::arg("id"))
        .def("noun_id", &taxonomy::Taxonomy::noun_id, py::arg("label"))
        .def("verb_id", &taxonomy::Taxonomy::verb_id, py::arg("label"))
        .def("to_json_text",
             [](const taxonomy::Taxonomy& t) { return t.to_json().dump(2); });

    m.def("positive_score", &taxonomy::positive_score, py::arg("a"), py::arg("b"),
          "Noun-overlap count times verb-overlap count.");
    m.def(
        "positives_match",
        [](const taxonomy::TagVector& a, const taxonomy::TagVector& b, const std::string& mode) {
            return taxonomy::positives_match(a, b, pipeline::parse_positive_mode(mode));
        },
        py::arg("a"), py::arg("b"), py::arg("mode") = "c");

    // ---- contrastive objectives ----
    py::class_<contrastive::LossResult>(m, "LossResult")
        .def_readonly("value", &contrastive::LossResult::value)
        .def_readonly("grad_video", &contrastive::LossResult::grad_video)
        .def_readonly("grad_text", &contrastive::LossResult::grad_text);

    py::class_<contrastive::MarginLossResult>(m, "MarginLossResult")
        .def_readonly("value", &contrastive::MarginLossResult::value)
        .def_readonly("grad_sims", &contrastive::MarginLossResult::grad_sims);

    m.def("info_nce", &contrastive::info_nce, py::arg("video"), py::arg("text"), py::arg("tau"),
          "Symmetric temperature-scaled contrastive loss with analytic gradients.");
    m.def("ego_nce", &contrastive::ego_nce, py::arg("video"), py::arg("text"),
          py::arg("positives"), py::arg("tau"),
          "Contrastive loss whose numerator sums each row's positive set.");
    m.def("max_margin", &contrastive::max_margin_loss, py::arg("sims"), py::arg("correlations"),
          py::arg("margin") = 0.2, py::arg("threshold") = 0.1,
          "Hinge loss over correlation-defined triples, summed both directions.");
    m.def(
        "build_positive_sets",
        [](const std::vector<taxonomy::TagVector>& tags, const std::string& mode) {
            return contrastive::build_positive_sets(tags, pipeline::parse_positive_mode(mode));
        },
        py::arg("tags"), py::arg("mode") = "c");
    m.def("min_hinge_slack", &contrastive::min_hinge_slack, py::arg("sims"),
          py::arg("correlations"), py::arg("margin") = 0.2, py::arg("threshold") = 0.1);
    m.def("gradient_check_info_nce", &contrastive::gradient_check_info_nce, py::arg("video"),
          py::arg("text"), py::arg("tau"), py::arg("h") = 1e-5);
    m.def("gradient_check_ego_nce", &contrastive::gradient_check_ego_nce, py::arg("video"),
          py::arg("text"), py::arg("positives"), py::arg("tau"), py::arg("h") = 1e-5);
    m.def("gradient_check_max_margin", &contrastive::gradient_check_max_margin, py::arg("sims"),
          py::arg("correlations"), py::arg("margin") = 0.2, py::arg("threshold") = 0.1,
          py::arg("h") = 1e-5);
    m.def(
        "sample_scene_negatives",
        [](const std::vector<ClipTextPair>& corpus, const std::vector<int>& anchors,
           const std::string& variant, double window_sec, uint64_t seed) {
            Rng rng(seed);
            const auto picks = contrastive::sample_scene_negatives(
                corpus, anchors, contrastive::parse_negative_variant(variant), window_sec, rng);
            std::vector<std::pair<int, bool>> out;
            out.reserve(picks.size());
            for (const auto& p : picks) out.emplace_back(p.index, p.fallback);
            return out;
        },
        py::arg("corpus"), py::arg("anchors"), py::arg("variant") = "f",
        py::arg("window_sec") = 60.0, py::arg("seed") = 7,
        "One negative per anchor as (corpus_index, fallback_used).");

    // ---- metrics ----
    py::class_<metrics::RetrievalResult>(m, "RetrievalResult")
        .def_readonly("value", &metrics::RetrievalResult::value)
        .def_readonly("queries_used", &metrics::RetrievalResult::queries_used)
        .def_readonly("queries_skipped", &metrics::RetrievalResult::queries_skipped);

    py::class_<metrics::RecallTable>(m, "RecallTable")
        .def_readonly("ks", &metrics::RecallTable::ks)
        .def_readonly("thresholds", &metrics::RecallTable::thresholds)
        .def_readonly("values", &metrics::RecallTable::values);

    m.def("mean_average_precision", &metrics::mean_average_precision, py::arg("scores"),
          py::arg("rel"), py::arg("binarize_at") = 0.0);
    m.def("ndcg", &metrics::ndcg, py::arg("scores"), py::arg("rel"));
    m.def(
        "iou",
        [](double a_start, double a_end, double b_start, double b_end) {
            return metrics::iou({a_start, a_end}, {b_start, b_end});
        },
        py::arg("a_start"), py::arg("a_end"), py::arg("b_start"), py::arg("b_end"));
    m.def(
        "recall_at_k",
        [](const std::vector<std::vector<std::pair<double, double>>>& preds,
           const std::vector<std::pair<double, double>>& gt, std::vector<int> ks,
           std::vector<double> thresholds) {
            std::vector<std::vector<Interval>> p;
            p.reserve(preds.size());
            for (const auto& ranked : preds) {
                std::vector<Interval> row;
                row.reserve(ranked.size());
                for (const auto& [s, e] : ranked) row.push_back({s, e});
                p.push_back(std::move(row));
            }
            std::vector<Interval> g;
            g.reserve(gt.size());
            for (const auto& [s, e] : gt) g.push_back({s, e});
            return metrics::recall_at_k(p, g, std::move(ks), std::move(thresholds));
        },
        py::arg("preds"), py::arg("gt"), py::arg("ks") = std::vector<int>{1, 5},
        py::arg("thresholds") = std::vector<double>{0.3, 0.5, 0.7},
        "Fraction of queries with a top-K prediction at or above each IoU threshold.");

    // ---- MCQ benchmark ----
    py::class_<mcq::TaggedPair>(m, "TaggedPair")
        .def(py::init([](const ClipTextPair& pair, const taxonomy::TagVector& tags) {
                 mcq::TaggedPair tp;
                 tp.pair = pair;
                 tp.tags = tags;
                 return tp;
             }),
             py::arg("pair"), py::arg("tags"))
        .def_readwrite("pair", &mcq::TaggedPair::pair)
        .def_readwrite("tags", &mcq::TaggedPair::tags);

    py::class_<mcq::McqQuestion>(m, "McqQuestion")
        .def_readonly("query", &mcq::McqQuestion::query)
        .def_readonly("options", &mcq::McqQuestion::options)
        .def_readonly("answer", &mcq::McqQuestion::answer)
        .def_property_readonly("setting", [](const mcq::McqQuestion& q) {
            return std::string(mcq::mcq_setting_name(q.setting));
        });

    py::class_<mcq::McqAccuracy>(m, "McqAccuracy")
        .def_readonly("accuracy", &mcq::McqAccuracy::accuracy)
        .def_readonly("correct", &mcq::McqAccuracy::correct)
        .def_readonly("total", &mcq::McqAccuracy::total);

    m.def(
        "build_mcq",
        [](const std::vector<mcq::TaggedPair>& corpus, const std::string& setting, int count,
           uint64_t seed, int max_resample) {
            mcq::BuildConfig bc;
            bc.setting = mcq::parse_mcq_setting(setting);
            bc.count = count;
            bc.seed = seed;
            bc.max_resample = max_resample;
            auto result = mcq::build_mcq(corpus, bc);
            return py::make_tuple(std::move(result.questions), result.report.built,
                                  std::move(result.report.warnings));
        },
        py::arg("corpus"), py::arg("setting") = "inter", py::arg("count") = 50,
        py::arg("seed") = 7, py::arg("max_resample") = 50,
        "Returns (questions, built_count, warnings).");
    m.def(
        "validate_mcq",
        [](const std::vector<mcq::McqQuestion>& questions,
           const std::vector<mcq::TaggedPair>& corpus) { mcq::validate_mcq(questions, corpus); },
        py::arg("questions"), py::arg("corpus"));
    m.def(
        "score_mcq",
        [](const std::vector<mcq::McqQuestion>& questions,
           const std::vector<std::vector<double>>& scores) {
            return mcq::score_mcq(questions, scores);
        },
        py::arg("questions"), py::arg("scores"));

    // ---- synthetic fixtures and the pipeline ----
    m.def(
        "write_fixture",
        [](const std::filesystem::path& dir, int videos, int narrations, int scenes, int actions,
           uint64_t seed, bool with_noise) {
            synth::FixtureConfig fc;
            fc.world.num_videos = videos;
            fc.world.narrations_per_video = narrations;
            fc.world.num_scenes = scenes;
            fc.world.actions_per_scene = actions;
            fc.world.seed = seed;
            fc.with_noise = with_noise;
            synth::write_fixture(dir, fc);
        },
        py::arg("dir"), py::arg("videos") = 12, py::arg("narrations") = 24, py::arg("scenes") = 4,
        py::arg("actions") = 8, py::arg("seed") = 7, py::arg("with_noise") = true,
        "Writes narrations.jsonl, meta.jsonl and taxonomy.json for a synthetic corpus.");
    m.def(
        "run_pipeline",
        [](const std::filesystem::path& config_path, bool force) {
            const auto result = pipeline::run_pipeline(pipeline::load_config(config_path), force);
            const auto manifest =
                py::module_::import("json").attr("loads")(result.manifest.dump());
            return py::make_tuple(result.skipped, manifest, result.manifest_path.string());
        },
        py::arg("config_path"), py::arg("force") = false,
        "Executes filter, pair, tag, mcq, sample-batch and loss-check stages; "
        "returns (skipped, manifest, manifest_path).");
}
