#pragma once

#include <istream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "egocurate/types.hpp"

namespace egocurate::ingest {

enum class InputFormat { jsonl, csv };

struct ParseError {
    size_t line_no = 0;  // 1-based
    std::string message;
};

/// All narrations of one (video, annotator) pair, ascending by timestamp.
struct NarrationStream {
    std::string video_uid;
    std::string annotator_id;
    std::vector<NarrationRecord> records;
};

struct ParseResult {
    std::vector<NarrationStream> streams;  // sorted by (video_uid, annotator_id)
    std::vector<ParseError> errors;        // malformed / rejected records, non-fatal
    size_t total_lines = 0;
    size_t parsed_records = 0;
};

/// Parse line-delimited narration records. Malformed lines and records with a
/// negative timestamp or empty text are reported per line, never fatal.
/// Groups are sorted by timestamp with input order preserved on ties.
ParseResult parse_narrations(std::istream& in, InputFormat format);

/// Per-rule drop counts; retained + dropped reconcile with the input size.
struct FilterReport {
    size_t videos_in = 0;
    size_t videos_retained = 0;
    size_t videos_dropped_aspect = 0;
    size_t videos_flagged_halve = 0;  // retained, counted separately
    size_t narrations_in = 0;
    size_t narrations_retained = 0;
    size_t narrations_dropped_unsure = 0;
    size_t narrations_dropped_short = 0;
    size_t rejected_records = 0;

    void merge(const FilterReport& other);
    nlohmann::ordered_json to_json() const;
};

/// Drops videos whose effective aspect ratio (stereo width halved first)
/// exceeds 2; stereo videos are retained with halve_width set.
/// Throws std::invalid_argument on non-positive dimensions or duration.
std::pair<std::vector<VideoMeta>, FilterReport> filter_videos(const std::vector<VideoMeta>& metas);

/// Drops narrations carrying the unsure marker or with fewer than 3 content
/// words. Retained records keep their input order.
std::pair<std::vector<NarrationRecord>, FilterReport> filter_narrations(
    const std::vector<NarrationRecord>& records);

/// Case-insensitive check for the inline "#unsure" marker.
bool has_unsure_tag(const std::string& text);

/// Whitespace tokens left after stripping a leading "#C"/"#O" annotator tag
/// and the subject token right after it. Attached punctuation does not split
/// or create tokens.
size_t content_word_count(const std::string& text);

/// Splits one CSV record, handling quoted fields and doubled quotes.
std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace egocurate::ingest
