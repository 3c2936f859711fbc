#include "egocurate/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <sstream>
#include <stdexcept>

namespace egocurate::ingest {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

struct RawRecord {
    NarrationRecord rec;
    std::string error;  // empty when valid
};

RawRecord validate(NarrationRecord rec) {
    RawRecord out{std::move(rec), ""};
    if (out.rec.video_uid.empty()) {
        out.error = "missing video_uid";
    } else if (out.rec.annotator_id.empty()) {
        out.error = "missing annotator_id";
    } else if (out.rec.timestamp_sec < 0.0) {
        out.error = "negative timestamp";
    } else if (trim(out.rec.text).empty()) {
        out.error = "empty text";
    }
    return out;
}

RawRecord parse_jsonl_line(const std::string& line) {
    nlohmann::json j = nlohmann::json::parse(line);  // throws on malformed input
    NarrationRecord rec;
    rec.video_uid = j.at("video_uid").get<std::string>();
    rec.annotator_id = j.at("annotator_id").get<std::string>();
    rec.timestamp_sec = j.at("timestamp_sec").get<double>();
    rec.text = j.at("text").get<std::string>();
    return validate(std::move(rec));
}

}  // namespace

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(c);
            }
        } else if (c == '"' && cur.empty()) {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    fields.push_back(std::move(cur));
    return fields;
}

ParseResult parse_narrations(std::istream& in, InputFormat format) {
    ParseResult result;
    std::map<std::pair<std::string, std::string>, std::vector<NarrationRecord>> groups;

    // csv column order comes from the header line
    std::vector<int> csv_cols;  // indices of video_uid, annotator_id, timestamp_sec, text
    bool header_read = false;

    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        result.total_lines++;

        RawRecord raw;
        if (format == InputFormat::jsonl) {
            try {
                raw = parse_jsonl_line(line);
            } catch (const std::exception& e) {
                result.errors.push_back({line_no, std::string("malformed line: ") + e.what()});
                continue;
            }
        } else {
            auto fields = split_csv_line(line);
            if (!header_read) {
                header_read = true;
                result.total_lines--;  // header is not a record
                const std::vector<std::string> want{"video_uid", "annotator_id", "timestamp_sec",
                                                    "text"};
                csv_cols.assign(want.size(), -1);
                for (size_t w = 0; w < want.size(); ++w) {
                    for (size_t f = 0; f < fields.size(); ++f) {
                        if (lower(trim(fields[f])) == want[w]) csv_cols[w] = static_cast<int>(f);
                    }
                    if (csv_cols[w] < 0) {
                        throw std::invalid_argument("csv header missing column '" + want[w] + "'");
                    }
                }
                continue;
            }
            const size_t needed =
                static_cast<size_t>(*std::max_element(csv_cols.begin(), csv_cols.end())) + 1;
            if (fields.size() < needed) {
                result.errors.push_back({line_no, "malformed line: too few csv fields"});
                continue;
            }
            NarrationRecord rec;
            rec.video_uid = trim(fields[static_cast<size_t>(csv_cols[0])]);
            rec.annotator_id = trim(fields[static_cast<size_t>(csv_cols[1])]);
            try {
                rec.timestamp_sec = std::stod(fields[static_cast<size_t>(csv_cols[2])]);
            } catch (const std::exception&) {
                result.errors.push_back({line_no, "malformed line: bad timestamp"});
                continue;
            }
            rec.text = fields[static_cast<size_t>(csv_cols[3])];
            raw = validate(std::move(rec));
        }

        if (!raw.error.empty()) {
            result.errors.push_back({line_no, "rejected record: " + raw.error});
            continue;
        }
        result.parsed_records++;
        groups[{raw.rec.video_uid, raw.rec.annotator_id}].push_back(std::move(raw.rec));
    }

    for (auto& [key, records] : groups) {
        std::stable_sort(records.begin(), records.end(),
                         [](const NarrationRecord& a, const NarrationRecord& b) {
                             return a.timestamp_sec < b.timestamp_sec;
                         });
        result.streams.push_back({key.first, key.second, std::move(records)});
    }
    return result;
}

void FilterReport::merge(const FilterReport& other) {
    videos_in += other.videos_in;
    videos_retained += other.videos_retained;
    videos_dropped_aspect += other.videos_dropped_aspect;
    videos_flagged_halve += other.videos_flagged_halve;
    narrations_in += other.narrations_in;
    narrations_retained += other.narrations_retained;
    narrations_dropped_unsure += other.narrations_dropped_unsure;
    narrations_dropped_short += other.narrations_dropped_short;
    rejected_records += other.rejected_records;
}

nlohmann::ordered_json FilterReport::to_json() const {
    return nlohmann::ordered_json{
        {"videos",
         {{"input", videos_in},
          {"retained", videos_retained},
          {"dropped_aspect", videos_dropped_aspect},
          {"flagged_halve", videos_flagged_halve}}},
        {"narrations",
         {{"input", narrations_in},
          {"retained", narrations_retained},
          {"dropped_unsure", narrations_dropped_unsure},
          {"dropped_short", narrations_dropped_short}}},
        {"rejected_records", rejected_records},
    };
}

std::pair<std::vector<VideoMeta>, FilterReport> filter_videos(const std::vector<VideoMeta>& metas) {
    FilterReport report;
    report.videos_in = metas.size();
    std::vector<VideoMeta> retained;
    for (const VideoMeta& m : metas) {
        if (m.width_px <= 0 || m.height_px <= 0 || m.duration_sec <= 0.0) {
            throw std::invalid_argument("filter_videos: non-positive dimensions or duration for '" +
                                        m.video_uid + "'");
        }
        // stereo videos store both eyes side by side; halve before the ratio test
        const double effective_width = m.is_stereo ? m.width_px / 2.0 : m.width_px;
        if (effective_width / m.height_px > 2.0) {
            report.videos_dropped_aspect++;
            continue;
        }
        VideoMeta kept = m;
        if (kept.is_stereo) {
            kept.halve_width = true;
            report.videos_flagged_halve++;
        }
        retained.push_back(std::move(kept));
    }
    report.videos_retained = retained.size();
    return {std::move(retained), report};
}

bool has_unsure_tag(const std::string& text) {
    return lower(text).find("#unsure") != std::string::npos;
}

size_t content_word_count(const std::string& text) {
    std::istringstream in(text);
    std::vector<std::string> tokens;
    std::string t;
    while (in >> t) tokens.push_back(t);
    size_t start = 0;
    if (!tokens.empty()) {
        const std::string head = lower(tokens[0]);
        if (head == "#c" || head == "#o") start = std::min<size_t>(2, tokens.size());
    }
    return tokens.size() - start;
}

std::pair<std::vector<NarrationRecord>, FilterReport> filter_narrations(
    const std::vector<NarrationRecord>& records) {
    FilterReport report;
    report.narrations_in = records.size();
    std::vector<NarrationRecord> retained;
    for (const NarrationRecord& r : records) {
        if (has_unsure_tag(r.text)) {
            report.narrations_dropped_unsure++;
            continue;
        }
        if (content_word_count(r.text) < 3) {
            report.narrations_dropped_short++;
            continue;
        }
        retained.push_back(r);
    }
    report.narrations_retained = retained.size();
    return {std::move(retained), report};
}

}  // namespace egocurate::ingest
