#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "egocurate/mcq.hpp"
#include "egocurate/taxonomy.hpp"
#include "egocurate/types.hpp"

namespace egocurate::io {

/// Line-delimited clip records. Field set is fixed:
/// video_uid, t_start, t_end, narration_timestamp, beta, strategy, text.
void write_pairs_jsonl(std::ostream& out, std::span<const ClipTextPair> pairs);
std::vector<ClipTextPair> read_pairs_jsonl(std::istream& in);

/// Pair records with resolved tag groups, spelled as canonical labels so the
/// file stands alone; reading resolves them back through the same taxonomy.
void write_tagged_jsonl(std::ostream& out, std::span<const mcq::TaggedPair> records,
                        const taxonomy::Taxonomy& tax);
std::vector<mcq::TaggedPair> read_tagged_jsonl(std::istream& in, const taxonomy::Taxonomy& tax);

/// One JSON array of {query, options[5], answer, setting}.
void write_mcq_json(std::ostream& out, std::span<const mcq::McqQuestion> questions);
std::vector<mcq::McqQuestion> read_mcq_json(std::istream& in);

/// Paired embedding rows; ids line up with the row index.
struct EmbeddingRows {
    std::vector<std::string> ids;
    Eigen::MatrixXd video;
    Eigen::MatrixXd text;
};

void write_embeddings_jsonl(std::ostream& out, const EmbeddingRows& rows);
EmbeddingRows read_embeddings_jsonl(std::istream& in);

/// Flat little-endian float32 file: n video rows then n text rows, row-major.
/// A `<file>.json` sidecar records {"n": ..., "d": ...}; ids become row
/// numbers on read.
void write_embeddings_binary(const std::filesystem::path& file, const EmbeddingRows& rows);
EmbeddingRows read_embeddings_binary(const std::filesystem::path& file);

/// Extension-driven dispatch: ".jsonl" text rows, anything else binary+sidecar.
void write_embeddings(const std::filesystem::path& file, const EmbeddingRows& rows);
EmbeddingRows read_embeddings(const std::filesystem::path& file);

/// Score rows for answer ranking: {"scores": [..]} per line.
void write_score_rows_jsonl(std::ostream& out, const std::vector<std::vector<double>>& rows);
std::vector<std::vector<double>> read_score_rows_jsonl(std::istream& in);

void write_narrations_jsonl(std::ostream& out, std::span<const NarrationRecord> records);

void write_meta_jsonl(std::ostream& out, std::span<const VideoMeta> metas);
std::vector<VideoMeta> read_meta_jsonl(std::istream& in);

/// Whole-file helpers; throw std::runtime_error with the path on failure.
std::string slurp(const std::filesystem::path& file);
void spit(const std::filesystem::path& file, const std::string& content);

}  // namespace egocurate::io
