#include "doctest.h"

#include "egocurate/io.hpp"
#include "egocurate/pipeline.hpp"
#include "egocurate/synth.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <string>

using namespace egocurate;
namespace fs = std::filesystem;

namespace {

struct TempTree {
    fs::path root;
    explicit TempTree(const std::string& tag)
        : root(fs::temp_directory_path() / ("egocurate_pipe_" + tag)) {
        fs::remove_all(root);
        fs::create_directories(root);
    }
    ~TempTree() { fs::remove_all(root); }
};

pipeline::PipelineConfig fixture_config(const fs::path& root, const fs::path& out) {
    synth::FixtureConfig fc;
    fc.world.num_videos = 6;
    fc.world.narrations_per_video = 12;
    fc.world.actions_per_scene = 8;  // a 5-clip window needs 5 distinct actions
    fc.world.seed = 7;
    synth::write_fixture(root / "fixture", fc);
    pipeline::PipelineConfig cfg;
    cfg.narrations_path = root / "fixture" / "narrations.jsonl";
    cfg.meta_path = root / "fixture" / "meta.jsonl";
    cfg.taxonomy_path = root / "fixture" / "taxonomy.json";
    cfg.out_dir = out;
    cfg.mcq_count = 20;
    return cfg;
}

size_t line_count(const fs::path& file) {
    const std::string s = io::slurp(file);
    size_t n = 0;
    for (char c : s)
        if (c == '\n') ++n;
    return n;
}

std::map<std::string, std::string> snapshot_dir(const fs::path& dir) {
    std::map<std::string, std::string> bytes;
    for (const auto& entry : fs::directory_iterator(dir))
        bytes[entry.path().filename().string()] = io::slurp(entry.path());
    return bytes;
}

}  // namespace

TEST_CASE("a full run reports every stage and its artifact record counts match the files") {
    TempTree tmp("full");
    const auto cfg = fixture_config(tmp.root, tmp.root / "out");
    const auto result = pipeline::run_pipeline(cfg);
    CHECK_FALSE(result.skipped);
    const auto& m = result.manifest;
    CHECK(m.at("status") == "ok");
    CHECK(m.at("config_hash") == pipeline::config_hash(cfg));

    const auto& filter = m.at("stages").at("filter");
    CHECK(filter.at("rejected_records") == 1);
    CHECK(filter.at("videos").at("dropped_aspect") == 1);
    CHECK(filter.at("videos").at("flagged_halve") == 1);
    CHECK(filter.at("narrations").at("dropped_unsure") == 1);
    CHECK(filter.at("narrations").at("dropped_short") == 1);
    CHECK(filter.at("videos").at("retained") == 7);  // 6 world videos + the stereo one

    for (const char* name : {"videos.filtered.jsonl", "narrations.filtered.jsonl", "pairs.jsonl",
                             "tagged.jsonl"}) {
        const size_t expected = m.at("artifacts").at(name).get<size_t>();
        CHECK(line_count(cfg.out_dir / name) == expected);
    }
    CHECK(m.at("artifacts").at("pairs.jsonl") == 72);  // 6 videos x 12 clean narrations
    CHECK(m.at("stages").at("pair").at("records") == 72);
    CHECK(m.at("stages").at("tag").at("with_noun_and_verb") == 72);
    CHECK(m.at("stages").at("mcq").at("inter_built") == 20);
    CHECK(m.at("stages").at("mcq").at("intra_built") == 20);
    CHECK(fs::exists(cfg.out_dir / "embeddings.bin"));
    CHECK(fs::exists(cfg.out_dir / "embeddings.bin.json"));
    CHECK(fs::exists(cfg.out_dir / "batch.json"));

    const auto& losses = m.at("stages").at("loss_check");
    CHECK(losses.at("info_nce").at("max_grad_error").get<double>() <= 1e-6);
    CHECK(losses.at("ego_nce").at("max_grad_error").get<double>() <= 1e-6);
    CHECK(losses.at("info_nce").at("value").get<double>() > 0.0);
}

TEST_CASE("an unchanged config is skipped and force rebuilds it") {
    TempTree tmp("skip");
    const auto cfg = fixture_config(tmp.root, tmp.root / "out");
    const auto first = pipeline::run_pipeline(cfg);
    CHECK_FALSE(first.skipped);
    const auto second = pipeline::run_pipeline(cfg);
    CHECK(second.skipped);
    CHECK(second.manifest == first.manifest);
    const auto forced = pipeline::run_pipeline(cfg, true);
    CHECK_FALSE(forced.skipped);

    auto changed = cfg;
    changed.mcq_count = 10;
    const auto rerun = pipeline::run_pipeline(changed);
    CHECK_FALSE(rerun.skipped);
    CHECK(rerun.manifest.at("stages").at("mcq").at("inter_built") == 10);
}

TEST_CASE("two runs of the same config write byte-identical artifacts") {
    TempTree tmp("repro");
    const auto cfg = fixture_config(tmp.root, tmp.root / "out");
    (void)pipeline::run_pipeline(cfg);
    const auto before = snapshot_dir(cfg.out_dir);
    (void)pipeline::run_pipeline(cfg, true);
    const auto after = snapshot_dir(cfg.out_dir);
    REQUIRE(before.size() == after.size());
    for (const auto& [name, bytes] : before) {
        INFO("artifact ", name);
        CHECK(after.at(name) == bytes);
    }
}

TEST_CASE("interval strategies change the produced clip lengths as designed") {
    TempTree tmp("strategies");
    std::map<char, double> mean_len;
    for (char s : {'a', 'd', 'f'}) {
        auto cfg = fixture_config(tmp.root, tmp.root / ("out_" + std::string(1, s)));
        cfg.strategy = parse_strategy(std::string(1, s));
        (void)pipeline::run_pipeline(cfg);
        std::ifstream in(cfg.out_dir / "pairs.jsonl");
        const auto pairs = io::read_pairs_jsonl(in);
        REQUIRE_FALSE(pairs.empty());
        double total = 0.0;
        for (const auto& p : pairs) {
            CHECK(p.strategy == cfg.strategy);
            total += p.t_end - p.t_start;
        }
        mean_len[s] = total / static_cast<double>(pairs.size());
    }
    // fixed span ~ alpha, neighborhood span ~ beta, scaled span ~ beta/alpha
    CHECK(mean_len['f'] < mean_len['d']);
    CHECK(mean_len['d'] <= mean_len['a'] + 0.5);
    CHECK(mean_len['f'] < 2.0);
}

TEST_CASE("a missing input fails the named stage and leaves a failed manifest") {
    TempTree tmp("fail");
    auto cfg = fixture_config(tmp.root, tmp.root / "out");
    cfg.narrations_path = tmp.root / "nope.jsonl";
    CHECK_THROWS_WITH_AS((void)pipeline::run_pipeline(cfg), doctest::Contains("stage filter"),
                         std::runtime_error);
    const auto manifest = nlohmann::json::parse(io::slurp(cfg.out_dir / "manifest.json"));
    CHECK(manifest.at("status") == "failed");
    CHECK(manifest.at("failed_stage") == "filter");

    // a failed manifest never short-circuits the next attempt
    auto good = fixture_config(tmp.root, cfg.out_dir);
    const auto recovered = pipeline::run_pipeline(good);
    CHECK_FALSE(recovered.skipped);
}

TEST_CASE("config text round-trips through serialization") {
    pipeline::PipelineConfig cfg;
    cfg.narrations_path = "in/n.jsonl";
    cfg.meta_path = "in/m.jsonl";
    cfg.taxonomy_path = "in/t.json";
    cfg.out_dir = "out";
    cfg.strategy = PairingStrategy::D;
    cfg.alpha = 3.25;
    cfg.annotators = "one";
    cfg.positive_mode = taxonomy::PositiveMode::verb_only;
    cfg.negative_variant = contrastive::NegativeVariant::same_video;
    cfg.window_sec = 45.0;
    cfg.tau = 0.07;
    cfg.mcq_count = 13;
    cfg.mcq_max_resample = 9;
    cfg.batch_size = 17;
    cfg.embed_dim = 24;
    cfg.seed = 99;
    const std::string text = pipeline::serialize_config(cfg);
    const auto back = pipeline::parse_config_text(text);
    CHECK(pipeline::serialize_config(back) == text);
    CHECK(pipeline::config_hash(back) == pipeline::config_hash(cfg));

    auto tweaked = cfg;
    tweaked.seed = 100;
    CHECK(pipeline::config_hash(tweaked) != pipeline::config_hash(cfg));
}

TEST_CASE("config parsing tolerates comments and reports bad lines precisely") {
    const auto cfg = pipeline::parse_config_text(
        "# pipeline inputs\n"
        "narrations = a.jsonl\n"
        "\n"
        "tau = 0.5   # inline comment\n");
    CHECK(cfg.narrations_path == "a.jsonl");
    CHECK(cfg.tau == 0.5);

    CHECK_THROWS_WITH_AS((void)pipeline::parse_config_text("tau 0.5\n"),
                         doctest::Contains("config line 1"), std::invalid_argument);
    CHECK_THROWS_WITH_AS((void)pipeline::parse_config_text("\ntau = soup\n"),
                         doctest::Contains("config line 2 (tau): bad number"),
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS((void)pipeline::parse_config_text("mcq_count = -4\n"),
                         doctest::Contains("bad unsigned integer"), std::invalid_argument);
    CHECK_THROWS_WITH_AS((void)pipeline::parse_config_text("flavor = mint\n"),
                         doctest::Contains("unknown config key 'flavor'"), std::invalid_argument);
    CHECK_THROWS_WITH_AS((void)pipeline::parse_config_text("strategy = q\n"),
                         doctest::Contains("config line 1 (strategy)"), std::invalid_argument);
}

TEST_CASE("single-annotator selection is deterministic and keeps one stream per video") {
    TempTree tmp("annotators");
    auto cfg = fixture_config(tmp.root, tmp.root / "out");
    cfg.annotators = "one";
    const auto result = pipeline::run_pipeline(cfg);
    // the fixture has one annotator per video, so selection keeps all streams
    CHECK(result.manifest.at("stages").at("pair").at("streams") == 6);
    CHECK(result.manifest.at("stages").at("pair").at("records") == 72);
}

TEST_CASE("degenerate configs are rejected before any stage runs") {
    pipeline::PipelineConfig cfg;
    CHECK_THROWS_AS((void)pipeline::run_pipeline(cfg), std::invalid_argument);
    cfg.narrations_path = "n";
    cfg.meta_path = "m";
    cfg.taxonomy_path = "t";
    cfg.out_dir = fs::temp_directory_path() / "egocurate_pipe_degenerate";
    cfg.batch_size = 0;
    CHECK_THROWS_AS((void)pipeline::run_pipeline(cfg), std::invalid_argument);
    cfg.batch_size = 4;
    cfg.embed_dim = 1;
    CHECK_THROWS_AS((void)pipeline::run_pipeline(cfg), std::invalid_argument);
    fs::remove_all(cfg.out_dir);
}
