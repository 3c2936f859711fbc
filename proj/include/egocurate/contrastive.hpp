#pragma once

#include <Eigen/Core>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "egocurate/rng.hpp"
#include "egocurate/taxonomy.hpp"
#include "egocurate/types.hpp"

namespace egocurate::contrastive {

struct RowMeta {
    std::string video_uid;
    double narration_timestamp = 0.0;
    taxonomy::TagVector tags;
};

/// Aligned video/text embedding matrices; row i of both is a matched pair.
struct EmbeddingBatch {
    Eigen::MatrixXd video;  // N x d, rows L2-normalized
    Eigen::MatrixXd text;   // N x d
    std::vector<RowMeta> meta;

    Eigen::Index size() const { return video.rows(); }
    /// Enforces matching shapes, finiteness and unit row norms (1e-9).
    void validate() const;
};

struct LossResult {
    double value = 0.0;
    Eigen::MatrixXd grad_video;  // shape of the video input
    Eigen::MatrixXd grad_text;
};

struct MarginLossResult {
    double value = 0.0;
    Eigen::MatrixXd grad_sims;  // shape of the similarity input
};

/// Symmetric InfoNCE in minimization form: mean over rows of
/// [logsumexp_j(v_i.t_j/tau) - v_i.t_i/tau], plus the text-to-video mirror.
LossResult info_nce(const Eigen::MatrixXd& video, const Eigen::MatrixXd& text, double tau);

/// Contrastive objective with action-aware positive sets: the numerator sums
/// exp-similarities over positives[i], the denominator over every row of the
/// batch (for an augmented batch of 2N rows this is exactly the base term
/// plus its scene-negative term). positives[i] must contain i.
LossResult ego_nce(const Eigen::MatrixXd& video, const Eigen::MatrixXd& text,
                   const std::vector<std::vector<int>>& positives, double tau);

/// Hinge loss over (anchor, positive, negative) triples defined by the
/// correlation threshold: positives j have c_ij > threshold, negatives k are
/// the rest. Each triple adds max(0, margin + s_ik - s_ij) and the mirrored
/// term read from the transposed similarities. Sum, not mean.
MarginLossResult max_margin_loss(const Eigen::MatrixXd& sims, const Eigen::MatrixXd& correlations,
                                 double margin = 0.2, double threshold = 0.1);

/// P_i = {j | tags overlap per mode} with i always included, over whatever
/// index set the metas span (base or augmented batch).
std::vector<std::vector<int>> build_positive_sets(
    std::span<const taxonomy::TagVector> tags,
    taxonomy::PositiveMode mode = taxonomy::PositiveMode::noun_and_verb);

enum class NegativeVariant {
    corpus_random,   // any other pair from the corpus
    same_video,      // any other pair from the anchor's video
    within_window,   // same video, |dt| <= window, nearest-other fallback
};

NegativeVariant parse_negative_variant(const std::string& s);  // "d" | "e" | "f"
char negative_variant_letter(NegativeVariant v);

struct NegativePick {
    int index = -1;       // corpus index of the chosen negative
    bool fallback = false;  // true when the variant's rule could not be honored
};

/// One scene negative per anchor, drawn from corpus (indices refer into it).
/// Anchors whose video has a single narration fall back to corpus_random.
std::vector<NegativePick> sample_scene_negatives(std::span<const ClipTextPair> corpus,
                                                 std::span<const int> anchors, NegativeVariant variant,
                                                 double window_sec, Rng& rng);

/// Max over coordinates of |analytic - numeric| / max(1, |numeric|), where
/// numeric is the central difference of f at x with step h.
/// Throws if f is non-finite at any probe point.
double max_grad_error(const std::function<double(const Eigen::VectorXd&)>& f,
                      const Eigen::VectorXd& x, const Eigen::VectorXd& analytic_grad,
                      double h = 1e-5);

/// Finite-difference checks of the analytic gradients, flattened over all
/// inputs of the respective loss.
double gradient_check_info_nce(const Eigen::MatrixXd& video, const Eigen::MatrixXd& text,
                               double tau, double h = 1e-5);
double gradient_check_ego_nce(const Eigen::MatrixXd& video, const Eigen::MatrixXd& text,
                              const std::vector<std::vector<int>>& positives, double tau,
                              double h = 1e-5);
double gradient_check_max_margin(const Eigen::MatrixXd& sims, const Eigen::MatrixXd& correlations,
                                 double margin = 0.2, double threshold = 0.1, double h = 1e-5);

/// Smallest |margin + s_ik - s_ij| over active triples (both directions);
/// instances closer than h to a hinge kink should be regenerated before a
/// finite-difference check.
double min_hinge_slack(const Eigen::MatrixXd& sims, const Eigen::MatrixXd& correlations,
                       double margin = 0.2, double threshold = 0.1);

}  // namespace egocurate::contrastive
