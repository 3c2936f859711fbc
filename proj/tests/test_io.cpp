#include "doctest.h"

#include "egocurate/io.hpp"
#include "egocurate/rng.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace egocurate;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("egocurate_io_test_" + std::to_string(std::rand()) + "_" +
                std::to_string(reinterpret_cast<uintptr_t>(this)));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

taxonomy::Taxonomy tiny_taxonomy() {
    nlohmann::json j = {
        {"nouns", {{"phone", {"cellphone"}}, {"fridge", nlohmann::json::array()}}},
        {"verbs", {{"take", {"takes", "pick", "picks"}}, {"open", {"opens"}}}},
    };
    return taxonomy::Taxonomy::from_json(j);
}

std::vector<ClipTextPair> sample_pairs() {
    return {
        {"vid_a", 1.5, 2.5, "#C C takes the phone", 2.0, 4.25, PairingStrategy::F},
        {"vid_a", 3.0, 4.0, "#C C opens the fridge", 3.5, 4.25, PairingStrategy::F},
        {"vid_b", 0.0, 0.5, "#C C picks the cellphone", 0.25, 0.1, PairingStrategy::C},
    };
}

}  // namespace

TEST_CASE("clip records round-trip through jsonl") {
    auto pairs = sample_pairs();
    std::ostringstream out;
    io::write_pairs_jsonl(out, pairs);
    std::istringstream in(out.str());
    auto back = io::read_pairs_jsonl(in);
    REQUIRE(back.size() == pairs.size());
    for (size_t i = 0; i < pairs.size(); ++i) {
        CHECK(back[i].video_uid == pairs[i].video_uid);
        CHECK(back[i].t_start == pairs[i].t_start);
        CHECK(back[i].t_end == pairs[i].t_end);
        CHECK(back[i].text == pairs[i].text);
        CHECK(back[i].narration_timestamp == pairs[i].narration_timestamp);
        CHECK(back[i].beta_sec == pairs[i].beta_sec);
        CHECK(back[i].strategy == pairs[i].strategy);
    }
}

TEST_CASE("clip records serialize the documented field set in order") {
    std::vector<ClipTextPair> one = {sample_pairs()[0]};
    std::ostringstream out;
    io::write_pairs_jsonl(out, one);
    auto j = nlohmann::ordered_json::parse(out.str());
    std::vector<std::string> keys;
    for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
    CHECK(keys == std::vector<std::string>{"video_uid", "t_start", "t_end", "narration_timestamp",
                                           "beta", "strategy", "text"});
    CHECK(j["strategy"] == "f");
}

TEST_CASE("malformed clip lines name the line number") {
    std::istringstream in("{\"video_uid\":\"v\"\nnot json\n");
    CHECK_THROWS_WITH_AS((void)io::read_pairs_jsonl(in), doctest::Contains("line 1"),
                         std::runtime_error);
}

TEST_CASE("tagged records store canonical labels and resolve back") {
    auto tax = tiny_taxonomy();
    std::vector<mcq::TaggedPair> records;
    for (const auto& p : sample_pairs()) records.push_back({p, tax.tag(p.text)});

    std::ostringstream out;
    io::write_tagged_jsonl(out, records, tax);

    // labels, not ids, appear on disk
    auto first = nlohmann::json::parse(out.str().substr(0, out.str().find('\n')));
    CHECK(first["first_noun"] == "phone");
    CHECK(first["first_verb"] == "take");
    CHECK(first["nouns"] == nlohmann::json::array({"phone"}));

    std::istringstream in(out.str());
    auto back = io::read_tagged_jsonl(in, tax);
    REQUIRE(back.size() == records.size());
    for (size_t i = 0; i < records.size(); ++i) {
        CHECK(back[i].tags.noun_ids == records[i].tags.noun_ids);
        CHECK(back[i].tags.verb_ids == records[i].tags.verb_ids);
        CHECK(back[i].tags.first_noun == records[i].tags.first_noun);
        CHECK(back[i].tags.first_verb == records[i].tags.first_verb);
        CHECK(back[i].tags.k1 == tax.noun_count());
        CHECK(back[i].pair.text == records[i].pair.text);
    }
    // synonym phrasings resolved to one group id
    CHECK(back[0].tags.noun_ids == back[2].tags.noun_ids);
}

TEST_CASE("tagged records with no matches write nulls") {
    auto tax = tiny_taxonomy();
    ClipTextPair p{"v", 0.0, 1.0, "nothing matches here", 0.5, 1.0, PairingStrategy::A};
    std::vector<mcq::TaggedPair> records = {{p, tax.tag(p.text)}};
    std::ostringstream out;
    io::write_tagged_jsonl(out, records, tax);
    auto j = nlohmann::json::parse(out.str());
    CHECK(j["first_noun"].is_null());
    CHECK(j["first_verb"].is_null());
    std::istringstream in(out.str());
    auto back = io::read_tagged_jsonl(in, tax);
    CHECK_FALSE(back[0].tags.has_noun());
    CHECK_FALSE(back[0].tags.has_verb());
}

TEST_CASE("tagged records reject labels the taxonomy does not know") {
    auto tax = tiny_taxonomy();
    std::istringstream in(
        R"({"video_uid":"v","t_start":0.0,"t_end":1.0,"narration_timestamp":0.5,"beta":1.0,"strategy":"a","text":"x","nouns":["spaceship"],"verbs":[],"first_noun":"spaceship","first_verb":null})"
        "\n");
    CHECK_THROWS_AS((void)io::read_tagged_jsonl(in, tax), std::runtime_error);
}

TEST_CASE("questions round-trip through the json array format") {
    auto tax = tiny_taxonomy();
    auto pairs = sample_pairs();
    mcq::McqQuestion q;
    q.setting = mcq::McqSetting::inter;
    q.answer = 2;
    for (int i = 0; i < 5; ++i) q.options[i] = pairs[i % pairs.size()];
    q.query = q.options[2].text;

    std::ostringstream out;
    io::write_mcq_json(out, std::vector<mcq::McqQuestion>{q});
    std::istringstream in(out.str());
    auto back = io::read_mcq_json(in);
    REQUIRE(back.size() == 1);
    CHECK(back[0].answer == 2);
    CHECK(back[0].query == q.query);
    CHECK(back[0].setting == mcq::McqSetting::inter);
    for (int i = 0; i < 5; ++i) {
        CHECK(back[0].options[i].video_uid == q.options[i].video_uid);
        CHECK(back[0].options[i].t_start == q.options[i].t_start);
        CHECK(back[0].options[i].text == q.options[i].text);
    }
}

TEST_CASE("question files must be arrays of five-option entries") {
    std::istringstream scalar("42");
    CHECK_THROWS_AS((void)io::read_mcq_json(scalar), std::runtime_error);
    std::istringstream four_options(
        R"([{"query":"q","options":[{"video_uid":"v","t_start":0,"t_end":1,"text":"q"}],"answer":0,"setting":"inter"}])");
    CHECK_THROWS_AS((void)io::read_mcq_json(four_options), std::runtime_error);
}

TEST_CASE("embedding rows round-trip through jsonl text") {
    io::EmbeddingRows rows;
    rows.ids = {"r0", "r1", "r2"};
    Rng rng(5);
    rows.video.resize(3, 4);
    rows.text.resize(3, 4);
    for (Eigen::Index i = 0; i < 3; ++i)
        for (Eigen::Index j = 0; j < 4; ++j) {
            rows.video(i, j) = rng.normal();
            rows.text(i, j) = rng.normal();
        }
    std::ostringstream out;
    io::write_embeddings_jsonl(out, rows);
    std::istringstream in(out.str());
    auto back = io::read_embeddings_jsonl(in);
    CHECK(back.ids == rows.ids);
    CHECK((back.video - rows.video).cwiseAbs().maxCoeff() == 0.0);  // f64 text round-trip
    CHECK((back.text - rows.text).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("embedding rows round-trip through the binary format at f32 precision") {
    TempDir tmp;
    io::EmbeddingRows rows;
    rows.ids = {"0", "1"};
    rows.video.resize(2, 3);
    rows.text.resize(2, 3);
    rows.video << 0.25, -1.5, 3.0, 0.0, 2.0, -0.125;
    rows.text << 1.0, 0.5, -0.75, 8.0, -16.0, 0.0625;  // exactly representable at f32

    const auto file = tmp.path / "embeddings.bin";
    io::write_embeddings_binary(file, rows);
    CHECK(fs::exists(tmp.path / "embeddings.bin.json"));
    auto back = io::read_embeddings_binary(file);
    CHECK(back.ids == rows.ids);
    CHECK((back.video - rows.video).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.text - rows.text).cwiseAbs().maxCoeff() == 0.0);

    // extension dispatch: .jsonl goes to text, anything else to binary
    const auto as_jsonl = tmp.path / "embeddings.jsonl";
    io::write_embeddings(as_jsonl, rows);
    auto text_back = io::read_embeddings(as_jsonl);
    CHECK(text_back.video == rows.video);
    auto bin_back = io::read_embeddings(file);
    CHECK(bin_back.video == rows.video);
}

TEST_CASE("binary embeddings reject truncated and oversized payloads") {
    TempDir tmp;
    io::EmbeddingRows rows;
    rows.ids = {"0"};
    rows.video = Eigen::MatrixXd::Ones(1, 4);
    rows.text = Eigen::MatrixXd::Zero(1, 4);
    const auto file = tmp.path / "e.bin";
    io::write_embeddings_binary(file, rows);

    auto size = fs::file_size(file);
    fs::resize_file(file, size - 2);
    CHECK_THROWS_WITH_AS((void)io::read_embeddings_binary(file), doctest::Contains("expected"),
                         std::runtime_error);

    io::write_embeddings_binary(file, rows);
    std::ofstream(file, std::ios::binary | std::ios::app) << "xx";
    CHECK_THROWS_WITH_AS((void)io::read_embeddings_binary(file), doctest::Contains("trailing"),
                         std::runtime_error);
}

TEST_CASE("score rows round-trip") {
    std::vector<std::vector<double>> rows = {{0.1, 0.2, 0.3, 0.4, 0.5}, {1.0, -1.0, 0.0, 2.0, 3.0}};
    std::ostringstream out;
    io::write_score_rows_jsonl(out, rows);
    std::istringstream in(out.str());
    auto back = io::read_score_rows_jsonl(in);
    CHECK(back == rows);
}

TEST_CASE("video metadata round-trips with the halve flag") {
    std::vector<VideoMeta> metas = {
        {"a", 120.0, 1920, 1080, false, false},
        {"b", 60.0, 3840, 1080, true, true},
    };
    std::ostringstream out;
    io::write_meta_jsonl(out, metas);
    std::istringstream in(out.str());
    auto back = io::read_meta_jsonl(in);
    REQUIRE(back.size() == 2);
    CHECK(back[1].is_stereo);
    CHECK(back[1].halve_width);
    CHECK(back[0].width_px == 1920);
    CHECK(back[0].duration_sec == 120.0);
}

TEST_CASE("slurp and spit move whole files and name failures") {
    TempDir tmp;
    const auto file = tmp.path / "note.txt";
    io::spit(file, "line one\nline two\n");
    CHECK(io::slurp(file) == "line one\nline two\n");
    CHECK_THROWS_WITH_AS((void)io::slurp(tmp.path / "absent.txt"), doctest::Contains("absent.txt"),
                         std::runtime_error);
}
