#include "egocurate/io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace egocurate::io {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

json parse_line(const std::string& line, size_t line_no) {
    try {
        return json::parse(line);
    } catch (const json::exception& e) {
        throw std::runtime_error("line " + std::to_string(line_no) + ": " + e.what());
    }
}

ordered_json pair_to_json(const ClipTextPair& p) {
    return ordered_json{{"video_uid", p.video_uid},
                        {"t_start", p.t_start},
                        {"t_end", p.t_end},
                        {"narration_timestamp", p.narration_timestamp},
                        {"beta", p.beta_sec},
                        {"strategy", std::string(1, strategy_letter(p.strategy))},
                        {"text", p.text}};
}

ClipTextPair pair_from_json(const json& j) {
    ClipTextPair p;
    p.video_uid = j.at("video_uid").get<std::string>();
    p.t_start = j.at("t_start").get<double>();
    p.t_end = j.at("t_end").get<double>();
    p.narration_timestamp = j.at("narration_timestamp").get<double>();
    p.beta_sec = j.at("beta").get<double>();
    p.strategy = parse_strategy(j.at("strategy").get<std::string>());
    p.text = j.at("text").get<std::string>();
    return p;
}

// option objects carry only what scoring needs
ordered_json option_to_json(const ClipTextPair& p) {
    return ordered_json{{"video_uid", p.video_uid},
                        {"t_start", p.t_start},
                        {"t_end", p.t_end},
                        {"text", p.text}};
}

ClipTextPair option_from_json(const json& j) {
    ClipTextPair p;
    p.video_uid = j.at("video_uid").get<std::string>();
    p.t_start = j.at("t_start").get<double>();
    p.t_end = j.at("t_end").get<double>();
    p.text = j.at("text").get<std::string>();
    return p;
}

void require_little_endian() {
    const uint16_t probe = 1;
    uint8_t first;
    std::memcpy(&first, &probe, 1);
    if (first != 1) throw std::runtime_error("binary embedding io requires a little-endian host");
}

}  // namespace

void write_pairs_jsonl(std::ostream& out, std::span<const ClipTextPair> pairs) {
    for (const auto& p : pairs) out << pair_to_json(p).dump() << '\n';
}

std::vector<ClipTextPair> read_pairs_jsonl(std::istream& in) {
    std::vector<ClipTextPair> pairs;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        pairs.push_back(pair_from_json(parse_line(line, line_no)));
    }
    return pairs;
}

void write_tagged_jsonl(std::ostream& out, std::span<const mcq::TaggedPair> records,
                        const taxonomy::Taxonomy& tax) {
    for (const auto& r : records) {
        ordered_json j = pair_to_json(r.pair);
        json nouns = json::array();
        for (int32_t id : r.tags.noun_ids) nouns.push_back(tax.noun_label(id));
        json verbs = json::array();
        for (int32_t id : r.tags.verb_ids) verbs.push_back(tax.verb_label(id));
        j["nouns"] = std::move(nouns);
        j["verbs"] = std::move(verbs);
        j["first_noun"] = r.tags.has_noun() ? json(tax.noun_label(r.tags.first_noun)) : json();
        j["first_verb"] = r.tags.has_verb() ? json(tax.verb_label(r.tags.first_verb)) : json();
        out << j.dump() << '\n';
    }
}

std::vector<mcq::TaggedPair> read_tagged_jsonl(std::istream& in, const taxonomy::Taxonomy& tax) {
    std::vector<mcq::TaggedPair> records;
    std::string line;
    size_t line_no = 0;
    const auto resolve = [&](const json& j, const char* key, auto lookup, const char* klass) {
        std::vector<int32_t> ids;
        for (const auto& label : j.at(key)) {
            const auto id = lookup(label.template get<std::string>());
            if (!id)
                throw std::runtime_error("line " + std::to_string(line_no) + ": unknown " +
                                         klass + " label '" + label.get<std::string>() + "'");
            ids.push_back(*id);
        }
        return ids;
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const json j = parse_line(line, line_no);
        mcq::TaggedPair r;
        r.pair = pair_from_json(j);
        r.tags.noun_ids =
            resolve(j, "nouns", [&](const std::string& s) { return tax.noun_id(s); }, "noun");
        r.tags.verb_ids =
            resolve(j, "verbs", [&](const std::string& s) { return tax.verb_id(s); }, "verb");
        r.tags.k1 = tax.noun_count();
        r.tags.k2 = tax.verb_count();
        if (!j.at("first_noun").is_null()) {
            const auto id = tax.noun_id(j.at("first_noun").get<std::string>());
            if (!id) throw std::runtime_error("line " + std::to_string(line_no) + ": unknown first_noun");
            r.tags.first_noun = *id;
        }
        if (!j.at("first_verb").is_null()) {
            const auto id = tax.verb_id(j.at("first_verb").get<std::string>());
            if (!id) throw std::runtime_error("line " + std::to_string(line_no) + ": unknown first_verb");
            r.tags.first_verb = *id;
        }
        records.push_back(std::move(r));
    }
    return records;
}

void write_mcq_json(std::ostream& out, std::span<const mcq::McqQuestion> questions) {
    ordered_json arr = ordered_json::array();
    for (const auto& q : questions) {
        ordered_json options = ordered_json::array();
        for (const auto& opt : q.options) options.push_back(option_to_json(opt));
        arr.push_back(ordered_json{{"query", q.query},
                                   {"options", std::move(options)},
                                   {"answer", q.answer},
                                   {"setting", mcq::mcq_setting_name(q.setting)}});
    }
    out << arr.dump(2) << '\n';
}

std::vector<mcq::McqQuestion> read_mcq_json(std::istream& in) {
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw std::runtime_error(std::string("bad question file: ") + e.what());
    }
    if (!doc.is_array()) throw std::runtime_error("question file must hold a JSON array");
    std::vector<mcq::McqQuestion> questions;
    questions.reserve(doc.size());
    for (const auto& j : doc) {
        mcq::McqQuestion q;
        q.query = j.at("query").get<std::string>();
        const auto& options = j.at("options");
        if (!options.is_array() || options.size() != 5)
            throw std::runtime_error("each question must list exactly 5 options");
        for (size_t i = 0; i < 5; ++i) q.options[i] = option_from_json(options[i]);
        q.answer = j.at("answer").get<int>();
        q.setting = mcq::parse_mcq_setting(j.at("setting").get<std::string>());
        questions.push_back(std::move(q));
    }
    return questions;
}

void write_embeddings_jsonl(std::ostream& out, const EmbeddingRows& rows) {
    const Eigen::Index n = rows.video.rows();
    if (rows.text.rows() != n || static_cast<Eigen::Index>(rows.ids.size()) != n)
        throw std::invalid_argument("embedding rows/ids size mismatch");
    for (Eigen::Index i = 0; i < n; ++i) {
        ordered_json j{{"id", rows.ids[i]}};
        json v = json::array(), t = json::array();
        for (Eigen::Index c = 0; c < rows.video.cols(); ++c) v.push_back(rows.video(i, c));
        for (Eigen::Index c = 0; c < rows.text.cols(); ++c) t.push_back(rows.text(i, c));
        j["video_vec"] = std::move(v);
        j["text_vec"] = std::move(t);
        out << j.dump() << '\n';
    }
}

EmbeddingRows read_embeddings_jsonl(std::istream& in) {
    std::vector<std::string> ids;
    std::vector<std::vector<double>> video, text;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const json j = parse_line(line, line_no);
        ids.push_back(j.at("id").get<std::string>());
        video.push_back(j.at("video_vec").get<std::vector<double>>());
        text.push_back(j.at("text_vec").get<std::vector<double>>());
        if (video.back().size() != text.back().size() ||
            (video.size() > 1 && video.back().size() != video.front().size()))
            throw std::runtime_error("line " + std::to_string(line_no) +
                                     ": inconsistent embedding dimension");
    }
    EmbeddingRows rows;
    rows.ids = std::move(ids);
    const Eigen::Index n = static_cast<Eigen::Index>(video.size());
    const Eigen::Index d = n > 0 ? static_cast<Eigen::Index>(video.front().size()) : 0;
    rows.video.resize(n, d);
    rows.text.resize(n, d);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index c = 0; c < d; ++c) {
            rows.video(i, c) = video[i][c];
            rows.text(i, c) = text[i][c];
        }
    return rows;
}

void write_embeddings_binary(const std::filesystem::path& file, const EmbeddingRows& rows) {
    require_little_endian();
    const Eigen::Index n = rows.video.rows(), d = rows.video.cols();
    if (rows.text.rows() != n || rows.text.cols() != d)
        throw std::invalid_argument("embedding rows size mismatch");
    std::ofstream out(file, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + file.string());
    const auto dump_rows = [&](const Eigen::MatrixXd& m) {
        std::vector<float> buf(static_cast<size_t>(d));
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index c = 0; c < d; ++c) buf[static_cast<size_t>(c)] = static_cast<float>(m(i, c));
            out.write(reinterpret_cast<const char*>(buf.data()),
                      static_cast<std::streamsize>(buf.size() * sizeof(float)));
        }
    };
    dump_rows(rows.video);
    dump_rows(rows.text);
    if (!out) throw std::runtime_error("short write to " + file.string());
    out.close();

    std::filesystem::path sidecar = file;
    sidecar += ".json";
    spit(sidecar, ordered_json{{"n", n}, {"d", d}}.dump() + "\n");
}

EmbeddingRows read_embeddings_binary(const std::filesystem::path& file) {
    require_little_endian();
    std::filesystem::path sidecar = file;
    sidecar += ".json";
    json meta;
    try {
        meta = json::parse(slurp(sidecar));
    } catch (const json::exception& e) {
        throw std::runtime_error("bad sidecar " + sidecar.string() + ": " + e.what());
    }
    const auto n = meta.at("n").get<Eigen::Index>();
    const auto d = meta.at("d").get<Eigen::Index>();
    if (n < 0 || d < 0) throw std::runtime_error("bad sidecar " + sidecar.string() + ": negative shape");

    std::ifstream in(file, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + file.string());
    const size_t want = static_cast<size_t>(2 * n * d);
    std::vector<float> buf(want);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(want * sizeof(float)));
    if (static_cast<size_t>(in.gcount()) != want * sizeof(float))
        throw std::runtime_error(file.string() + ": expected " + std::to_string(want) +
                                 " float32 values");
    in.get();
    if (!in.eof()) throw std::runtime_error(file.string() + ": trailing bytes after embeddings");

    EmbeddingRows rows;
    rows.video.resize(n, d);
    rows.text.resize(n, d);
    size_t k = 0;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index c = 0; c < d; ++c) rows.video(i, c) = buf[k++];
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index c = 0; c < d; ++c) rows.text(i, c) = buf[k++];
    rows.ids.reserve(static_cast<size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) rows.ids.push_back(std::to_string(i));
    return rows;
}

void write_embeddings(const std::filesystem::path& file, const EmbeddingRows& rows) {
    if (file.extension() == ".jsonl") {
        std::ofstream out(file);
        if (!out) throw std::runtime_error("cannot write " + file.string());
        write_embeddings_jsonl(out, rows);
    } else {
        write_embeddings_binary(file, rows);
    }
}

EmbeddingRows read_embeddings(const std::filesystem::path& file) {
    if (file.extension() == ".jsonl") {
        std::ifstream in(file);
        if (!in) throw std::runtime_error("cannot read " + file.string());
        return read_embeddings_jsonl(in);
    }
    return read_embeddings_binary(file);
}

void write_score_rows_jsonl(std::ostream& out, const std::vector<std::vector<double>>& rows) {
    for (const auto& row : rows) out << ordered_json{{"scores", row}}.dump() << '\n';
}

std::vector<std::vector<double>> read_score_rows_jsonl(std::istream& in) {
    std::vector<std::vector<double>> rows;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        rows.push_back(parse_line(line, line_no).at("scores").get<std::vector<double>>());
    }
    return rows;
}

void write_narrations_jsonl(std::ostream& out, std::span<const NarrationRecord> records) {
    for (const auto& r : records)
        out << ordered_json{{"video_uid", r.video_uid},
                            {"annotator_id", r.annotator_id},
                            {"timestamp_sec", r.timestamp_sec},
                            {"text", r.text}}
                   .dump()
            << '\n';
}

void write_meta_jsonl(std::ostream& out, std::span<const VideoMeta> metas) {
    for (const auto& m : metas)
        out << ordered_json{{"video_uid", m.video_uid},
                            {"duration_sec", m.duration_sec},
                            {"width_px", m.width_px},
                            {"height_px", m.height_px},
                            {"is_stereo", m.is_stereo},
                            {"halve_width", m.halve_width}}
                   .dump()
            << '\n';
}

std::vector<VideoMeta> read_meta_jsonl(std::istream& in) {
    std::vector<VideoMeta> metas;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const json j = parse_line(line, line_no);
        VideoMeta m;
        m.video_uid = j.at("video_uid").get<std::string>();
        m.duration_sec = j.at("duration_sec").get<double>();
        m.width_px = j.at("width_px").get<int>();
        m.height_px = j.at("height_px").get<int>();
        m.is_stereo = j.at("is_stereo").get<bool>();
        m.halve_width = j.value("halve_width", false);
        metas.push_back(std::move(m));
    }
    return metas;
}

std::string slurp(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + file.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const std::filesystem::path& file, const std::string& content) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + file.string());
    out << content;
    if (!out) throw std::runtime_error("short write to " + file.string());
}

}  // namespace egocurate::io
