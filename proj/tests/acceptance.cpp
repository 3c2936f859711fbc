// Acceptance gate: nine independent end-to-end checks, one line each.
// Exit code 0 only when every line is PASS.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "egocurate/contrastive.hpp"
#include "egocurate/ingest.hpp"
#include "egocurate/io.hpp"
#include "egocurate/mcq.hpp"
#include "egocurate/metrics.hpp"
#include "egocurate/pairing.hpp"
#include "egocurate/pipeline.hpp"
#include "egocurate/rng.hpp"
#include "egocurate/synth.hpp"
#include "egocurate/toy.hpp"

#ifndef EGOCURATE_FIXTURE_DIR
#error "EGOCURATE_FIXTURE_DIR must point at the bundled fixture"
#endif

using namespace egocurate;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* pattern, ...) {
    char buf[512];
    va_list args;
    va_start(args, pattern);
    vsnprintf(buf, sizeof buf, pattern, args);
    va_end(args);
    return buf;
}

Eigen::MatrixXd random_unit_rows(Rng& rng, int n, int d) {
    Eigen::MatrixXd m(n, d);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) m(i, j) = rng.normal();
        m.row(i).normalize();
    }
    return m;
}

std::vector<std::vector<int>> singleton_sets(int n) {
    std::vector<std::vector<int>> sets(n);
    for (int i = 0; i < n; ++i) sets[i] = {i};
    return sets;
}

std::vector<std::vector<int>> random_sets_with_self(Rng& rng, int n) {
    std::vector<std::vector<int>> sets(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j)
            if (j == i || rng.uniform01() < 0.3) sets[i].push_back(j);
    }
    return sets;
}

// scalar-loop reference: no shared code with the library computation
double ego_reference(const Eigen::MatrixXd& v, const Eigen::MatrixXd& t,
                     const std::vector<std::vector<int>>& positives, double tau) {
    const int n = static_cast<int>(v.rows());
    const int d = static_cast<int>(v.cols());
    std::vector<std::vector<double>> s(n, std::vector<double>(n, 0.0));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double dot = 0.0;
            for (int k = 0; k < d; ++k) dot += v(i, k) * t(j, k);
            s[i][j] = dot / tau;
        }
    double loss = 0.0;
    for (int i = 0; i < n; ++i) {
        double all = 0.0, pos = 0.0;
        for (int j = 0; j < n; ++j) all += std::exp(s[i][j]);
        for (int j : positives[i]) pos += std::exp(s[i][j]);
        loss += std::log(all) - std::log(pos);
    }
    for (int j = 0; j < n; ++j) {
        double all = 0.0, pos = 0.0;
        for (int i = 0; i < n; ++i) all += std::exp(s[i][j]);
        for (int i : positives[j]) pos += std::exp(s[i][j]);
        loss += std::log(all) - std::log(pos);
    }
    return loss / n;
}

double iou_reference(double a0, double a1, double b0, double b1) {
    const double inter = std::min(a1, b1) - std::max(a0, b0);
    if (inter <= 0.0) return 0.0;
    return inter / (std::max(a1, b1) - std::min(a0, b0));
}

std::vector<mcq::TaggedPair> tagged_corpus(const synth::World& world) {
    std::vector<mcq::TaggedPair> corpus;
    corpus.reserve(world.narrations.size());
    for (const auto& n : world.narrations) {
        mcq::TaggedPair tp;
        tp.pair.video_uid = n.video_uid;
        tp.pair.t_start = n.timestamp_sec - 0.5;
        tp.pair.t_end = n.timestamp_sec + 0.5;
        tp.pair.text = n.text;
        tp.pair.narration_timestamp = n.timestamp_sec;
        tp.tags = world.taxonomy.tag(n.text);
        corpus.push_back(std::move(tp));
    }
    return corpus;
}

Outcome criterion_reduction() {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(101);
    const double taus[] = {0.05, 0.2, 1.0};
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 1 + static_cast<int>(rng.uniform_below(8));
        const int d = 2 + static_cast<int>(rng.uniform_below(15));
        const double tau = taus[trial % 3];
        const auto v = random_unit_rows(rng, n, d);
        const auto t = random_unit_rows(rng, n, d);
        const auto info = contrastive::info_nce(v, t, tau);
        const auto ego = contrastive::ego_nce(v, t, singleton_sets(n), tau);
        worst = std::max(worst, std::abs(info.value - ego.value));
    }
    const double dt = seconds_since(t0);
    return {worst <= 1e-12 && dt < 5.0,
            fmt("singleton-positive agreement, max |delta| %.2e over 100 batches, %.2fs", worst, dt)};
}

Outcome criterion_gradients() {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(202);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 2 + static_cast<int>(rng.uniform_below(5));
        const int d = 4 + static_cast<int>(rng.uniform_below(9));
        const auto v = random_unit_rows(rng, n, d);
        const auto t = random_unit_rows(rng, n, d);
        worst = std::max(worst, contrastive::gradient_check_info_nce(v, t, 0.2));
    }
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 2 + static_cast<int>(rng.uniform_below(5));
        const int d = 4 + static_cast<int>(rng.uniform_below(9));
        const auto v = random_unit_rows(rng, n, d);
        const auto t = random_unit_rows(rng, n, d);
        worst = std::max(worst,
                         contrastive::gradient_check_ego_nce(v, t, random_sets_with_self(rng, n), 0.2));
    }
    int accepted = 0;
    while (accepted < 20) {
        const int n = 3 + static_cast<int>(rng.uniform_below(4));
        Eigen::MatrixXd sims(n, n), corr(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                sims(i, j) = 2.0 * rng.uniform01() - 1.0;
                corr(i, j) = i == j ? 1.0 : (rng.uniform01() < 0.4 ? 0.3 : 0.0);
            }
        const double slack = contrastive::min_hinge_slack(sims, corr);
        if (!std::isfinite(slack) || slack <= 1e-3) continue;
        worst = std::max(worst, contrastive::gradient_check_max_margin(sims, corr));
        ++accepted;
    }
    const double dt = seconds_since(t0);
    return {worst <= 1e-6 && dt < 30.0,
            fmt("three objectives, 20 instances each, worst rel err %.2e, %.2fs", worst, dt)};
}

Outcome criterion_reference_match() {
    Rng rng(303);
    const double taus[] = {0.05, 0.2, 1.0};
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 2 + static_cast<int>(rng.uniform_below(7));
        const int d = 2 + static_cast<int>(rng.uniform_below(15));
        const double tau = taus[trial % 3];
        const auto v = random_unit_rows(rng, n, d);
        const auto t = random_unit_rows(rng, n, d);
        const auto sets = random_sets_with_self(rng, n);
        const auto fast = contrastive::ego_nce(v, t, sets, tau);
        worst = std::max(worst, std::abs(fast.value - ego_reference(v, t, sets, tau)));
    }
    return {worst <= 1e-12, fmt("double-loop reference, max |delta| %.2e over 50 batches", worst)};
}

Outcome criterion_pairing() {
    // exact mean gap on a uniform stream
    std::vector<double> uniform_ts;
    ingest::NarrationStream uniform_stream{"vid_u", "ann_1", {}};
    for (int k = 0; k < 10; ++k) {
        const double t = 50.0 + 5.0 * k;
        uniform_ts.push_back(t);
        uniform_stream.records.push_back({"vid_u", "ann_1", t, "#C C opens the fridge"});
    }
    if (pairing::compute_beta(uniform_ts) != 5.0) return {false, "uniform mean gap is not exact"};

    pairing::PairingConfig scaled;
    scaled.strategy = PairingStrategy::F;
    scaled.alpha = 4.9;
    scaled.clamp_to_video = false;
    const double want_len = 5.0 / 4.9;
    for (const auto& p : pairing::pair_clips(uniform_stream, scaled, 1000.0))
        if (std::abs((p.t_end - p.t_start) - want_len) > 1e-9)
            return {false, fmt("unclamped scaled window length off by %.2e",
                               std::abs((p.t_end - p.t_start) - want_len))};

    // hand-checked table: five narrations, mean gap 3, all six strategies
    const std::vector<double> ts{5.0, 8.0, 10.0, 14.0, 17.0};
    ingest::NarrationStream stream{"vid_t", "ann_1", {}};
    for (double t : ts) stream.records.push_back({"vid_t", "ann_1", t, "#C C opens the fridge"});
    const double hw = 3.0 / (2.0 * 4.9);
    const std::map<char, std::vector<std::pair<double, double>>> expected{
        {'a', {{5.0, 9.9}, {8.0, 12.9}, {10.0, 14.9}, {14.0, 18.9}, {17.0, 21.9}}},
        {'b', {{2.55, 7.45}, {5.55, 10.45}, {7.55, 12.45}, {11.55, 16.45}, {14.55, 19.45}}},
        {'c', {{5.0, 8.0}, {5.0, 10.0}, {8.0, 14.0}, {10.0, 17.0}, {14.0, 17.0}}},
        {'d', {{3.5, 6.5}, {6.5, 9.5}, {8.5, 11.5}, {12.5, 15.5}, {15.5, 18.5}}},
        {'e', {{4.25, 5.75}, {7.25, 8.75}, {9.25, 10.75}, {13.25, 14.75}, {16.25, 17.75}}},
        {'f',
         {{5.0 - hw, 5.0 + hw},
          {8.0 - hw, 8.0 + hw},
          {10.0 - hw, 10.0 + hw},
          {14.0 - hw, 14.0 + hw},
          {17.0 - hw, 17.0 + hw}}}};
    for (const auto& [letter, intervals] : expected) {
        pairing::PairingConfig pc;
        pc.strategy = parse_strategy(std::string(1, letter));
        pc.alpha = 4.9;
        const auto pairs = pairing::pair_clips(stream, pc, 30.0);
        if (pairs.size() != 5) return {false, fmt("strategy %c emitted %zu clips", letter, pairs.size())};
        for (size_t i = 0; i < 5; ++i) {
            if (std::abs(pairs[i].t_start - intervals[i].first) > 1e-12 ||
                std::abs(pairs[i].t_end - intervals[i].second) > 1e-12)
                return {false, fmt("strategy %c clip %zu is [%.6f, %.6f], wanted [%.6f, %.6f]",
                                   letter, i, pairs[i].t_start, pairs[i].t_end,
                                   intervals[i].first, intervals[i].second)};
            if (pairs[i].beta_sec != 3.0)
                return {false, fmt("strategy %c reported mean gap %.17g", letter, pairs[i].beta_sec)};
        }
    }
    return {true, "exact mean gap, unclamped scaled length, 5-narration table for all six strategies"};
}

Outcome criterion_mcq_validity() {
    const auto t0 = std::chrono::steady_clock::now();
    synth::WorldConfig wc;
    wc.num_videos = 30;
    wc.narrations_per_video = 30;
    wc.num_scenes = 4;
    wc.actions_per_scene = 8;
    wc.seed = 7;
    const auto corpus = tagged_corpus(synth::make_world(wc));

    for (const auto setting : {mcq::McqSetting::inter, mcq::McqSetting::intra}) {
        mcq::BuildConfig bc;
        bc.setting = setting;
        bc.count = 1000;
        bc.seed = 1234;
        bc.max_resample = 100;
        const auto built = mcq::build_mcq(corpus, bc);
        if (built.report.built != 1000)
            return {false, fmt("%s built %d of 1000",
                               mcq::mcq_setting_name(setting), built.report.built)};
        try {
            mcq::validate_mcq(built.questions, corpus);
        } catch (const std::exception& e) {
            return {false, fmt("%s validation: %s", mcq::mcq_setting_name(setting), e.what())};
        }
        const auto again = mcq::build_mcq(corpus, bc);
        std::ostringstream a, b;
        io::write_mcq_json(a, built.questions);
        io::write_mcq_json(b, again.questions);
        if (a.str() != b.str())
            return {false, fmt("%s rebuild with the same seed differs",
                               mcq::mcq_setting_name(setting))};
    }
    const double dt = seconds_since(t0);
    return {dt < 10.0, fmt("1000 questions per setting validated and reproducible, %.2fs", dt)};
}

Outcome criterion_metric_oracles() {
    // one query, relevant gallery items end up at ranks 1 and 3
    Eigen::MatrixXd scores(1, 3), rel(1, 3);
    scores << 0.9, 0.8, 0.7;
    rel << 1.0, 0.0, 1.0;
    const auto ap = metrics::mean_average_precision(scores, rel);
    if (std::abs(ap.value - 5.0 / 6.0) > 1e-9)
        return {false, fmt("ranks-1,3 average precision %.12f", ap.value)};

    Eigen::MatrixXd g_scores(1, 3), g_rel(1, 3);
    g_scores << 0.9, 0.5, 0.1;
    g_rel << 3.0, 2.0, 1.0;
    const auto ideal = metrics::ndcg(g_scores, g_rel);
    if (std::abs(ideal.value - 1.0) > 1e-12)
        return {false, fmt("ideal-ranking ndcg %.12f", ideal.value)};

    // 10 grounding queries vs an exhaustive recomputation
    Rng rng(404);
    std::vector<Interval> gt;
    std::vector<std::vector<Interval>> preds;
    for (int q = 0; q < 10; ++q) {
        const double a = 10.0 * q + 5.0 * rng.uniform01();
        const double len = 2.0 + 4.0 * rng.uniform01();
        gt.push_back({a, a + len});
        std::vector<Interval> ranked;
        for (int r = 0; r < 6; ++r) {
            const double shift = (rng.uniform01() - 0.5) * 2.0 * len;
            const double scale = 0.5 + rng.uniform01();
            ranked.push_back({a + shift, a + shift + scale * len});
        }
        preds.push_back(std::move(ranked));
    }
    const std::vector<int> ks{1, 5};
    const std::vector<double> thresholds{0.3, 0.5, 0.7};
    const auto table = metrics::recall_at_k(preds, gt, ks, thresholds);
    for (size_t ik = 0; ik < ks.size(); ++ik)
        for (size_t it = 0; it < thresholds.size(); ++it) {
            int hits = 0;
            for (size_t q = 0; q < gt.size(); ++q) {
                bool hit = false;
                for (int r = 0; r < ks[ik] && r < static_cast<int>(preds[q].size()); ++r)
                    if (iou_reference(preds[q][static_cast<size_t>(r)].start,
                                      preds[q][static_cast<size_t>(r)].end, gt[q].start,
                                      gt[q].end) >= thresholds[it])
                        hit = true;
                hits += hit ? 1 : 0;
            }
            const double want = static_cast<double>(hits) / static_cast<double>(gt.size());
            if (std::abs(table.values(static_cast<Eigen::Index>(ik),
                                      static_cast<Eigen::Index>(it)) - want) > 1e-12)
                return {false, fmt("recall cell K=%d theta=%.1f disagrees with exhaustive scan",
                                   ks[ik], thresholds[it])};
        }

    // chance-level scoring over a large generated question set
    synth::WorldConfig wc;
    wc.num_videos = 30;
    wc.narrations_per_video = 30;
    wc.num_scenes = 4;
    wc.actions_per_scene = 8;
    wc.seed = 7;
    const auto corpus = tagged_corpus(synth::make_world(wc));
    mcq::BuildConfig bc;
    bc.setting = mcq::McqSetting::inter;
    bc.count = 10000;
    bc.seed = 77;
    bc.max_resample = 100;
    const auto built = mcq::build_mcq(corpus, bc);
    if (built.report.built != 10000)
        return {false, fmt("only %d of 10000 questions built", built.report.built)};
    Rng score_rng(505);
    std::vector<std::vector<double>> rows(built.questions.size(), std::vector<double>(5));
    for (auto& row : rows)
        for (auto& x : row) x = score_rng.uniform01();
    const auto acc = mcq::score_mcq(built.questions, rows);
    if (std::abs(acc.accuracy - 0.20) > 0.03)
        return {false, fmt("random scoring accuracy %.4f", acc.accuracy)};
    return {true, fmt("ap 5/6, ideal ndcg 1, recall matches exhaustive, chance accuracy %.4f",
                      acc.accuracy)};
}

Outcome criterion_toy_comparison() {
    const auto t0 = std::chrono::steady_clock::now();
    const std::vector<uint64_t> seeds{1, 2, 3, 4, 5};
    toy::TrainConfig cfg;
    const auto mean_intra = [&](toy::Objective objective) {
        auto c = cfg;
        c.objective = objective;
        const auto results = toy::train_toy(c, seeds);
        double sum = 0.0;
        for (const auto& r : results) sum += r.intra_accuracy;
        return sum / static_cast<double>(results.size());
    };
    const double ego = mean_intra(toy::Objective::egonce);
    const double info = mean_intra(toy::Objective::infonce);
    const double dt = seconds_since(t0);
    return {ego >= info && dt < 120.0,
            fmt("held-out intra accuracy over 5 seeds: %.4f with positive sets vs %.4f without, %.1fs",
                ego, info, dt)};
}

Outcome criterion_filters() {
    VideoMeta normal{"v_n", 100.0, 1920, 1080, false, false};
    VideoMeta wide{"v_w", 100.0, 2400, 1080, false, false};
    VideoMeta stereo{"v_s", 100.0, 3840, 1080, true, false};
    const auto [videos, vreport] = ingest::filter_videos({normal, wide, stereo});
    if (videos.size() != 2 || vreport.videos_dropped_aspect != 1)
        return {false, "aspect rule mismatch"};
    if (vreport.videos_flagged_halve != 1 || !videos[1].halve_width)
        return {false, "stereo width rule mismatch"};
    if (videos[0].halve_width) return {false, "monocular video flagged for halving"};

    const std::vector<NarrationRecord> records{
        {"v_n", "ann_1", 1.0, "#C C speaks"},
        {"v_n", "ann_1", 2.0, "#C C washes #unsure in sink"},
        {"v_n", "ann_1", 3.0, "#C C puts the scrapper down."},
    };
    const auto [kept, nreport] = ingest::filter_narrations(records);
    if (nreport.narrations_dropped_short != 1) return {false, "brevity rule missed '#C C speaks'"};
    if (nreport.narrations_dropped_unsure != 1)
        return {false, "uncertainty rule missed '#C C washes #unsure in sink'"};
    if (kept.size() != 1 || kept[0].text != "#C C puts the scrapper down.")
        return {false, "filter dropped a clean narration"};
    return {true, "aspect, stereo-halving, uncertainty and brevity rules each verified"};
}

Outcome criterion_pipeline_determinism() {
    const fs::path fixture{EGOCURATE_FIXTURE_DIR};
    const fs::path out = fs::temp_directory_path() / "egocurate_acceptance_out";
    fs::remove_all(out);
    pipeline::PipelineConfig cfg;
    cfg.narrations_path = fixture / "narrations.jsonl";
    cfg.meta_path = fixture / "meta.jsonl";
    cfg.taxonomy_path = fixture / "taxonomy.json";
    cfg.out_dir = out;
    cfg.seed = 7;

    const auto first = pipeline::run_pipeline(cfg);
    if (first.manifest.at("status") != "ok") return {false, "first run did not finish"};
    std::map<std::string, std::string> before;
    for (const auto& entry : fs::directory_iterator(out))
        before[entry.path().filename().string()] = io::slurp(entry.path());

    const auto second = pipeline::run_pipeline(cfg, true);
    if (second.skipped) return {false, "forced rerun was skipped"};
    size_t compared = 0;
    for (const auto& entry : fs::directory_iterator(out)) {
        const auto name = entry.path().filename().string();
        if (!before.count(name)) return {false, fmt("rerun added artifact %s", name.c_str())};
        if (io::slurp(entry.path()) != before.at(name))
            return {false, fmt("artifact %s changed between runs", name.c_str())};
        ++compared;
    }
    if (compared != before.size()) return {false, "rerun dropped an artifact"};
    fs::remove_all(out);
    return {true, fmt("%zu artifacts byte-identical across two runs", compared)};
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"objective reduction", criterion_reduction},
        {"gradient checks", criterion_gradients},
        {"reference equivalence", criterion_reference_match},
        {"interval derivation", criterion_pairing},
        {"question validity", criterion_mcq_validity},
        {"metric oracles", criterion_metric_oracles},
        {"toy training comparison", criterion_toy_comparison},
        {"record filters", criterion_filters},
        {"pipeline determinism", criterion_pipeline_determinism},
    };
    int failures = 0;
    for (size_t i = 0; i < criteria.size(); ++i) {
        Outcome outcome;
        try {
            outcome = criteria[i].second();
        } catch (const std::exception& e) {
            outcome = {false, fmt("unexpected error: %s", e.what())};
        }
        if (!outcome.pass) ++failures;
        std::printf("%s %zu/9 %s: %s\n", outcome.pass ? "PASS" : "FAIL", i + 1,
                    criteria[i].first, outcome.detail.c_str());
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
