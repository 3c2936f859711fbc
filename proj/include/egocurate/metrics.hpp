#pragma once

#include <Eigen/Core>
#include <vector>

#include "egocurate/types.hpp"

namespace egocurate::metrics {

/// Mean over usable queries; queries with no relevant (or no positive-gain)
/// item are skipped and counted.
struct RetrievalResult {
    double value = 0.0;
    size_t queries_used = 0;
    size_t queries_skipped = 0;
};

/// mAP with binary relevance (c > binarize_at). Gallery ranked by descending
/// score, ties broken by gallery index.
RetrievalResult mean_average_precision(const Eigen::MatrixXd& scores, const Eigen::MatrixXd& rel,
                                       double binarize_at = 0.0);

/// nDCG with graded gains c and log2 discounts over the full gallery.
RetrievalResult ndcg(const Eigen::MatrixXd& scores, const Eigen::MatrixXd& rel);

/// Intersection over union of two intervals; 0 when disjoint.
double iou(const Interval& a, const Interval& b);

/// recall_at_k output: values(ik, it) = R@ks[ik]-IoU=thresholds[it].
struct RecallTable {
    std::vector<int> ks;
    std::vector<double> thresholds;
    Eigen::MatrixXd values;
};

/// A query counts as a hit at (K, theta) if any of its top-K predictions has
/// IoU >= theta with the ground truth. preds must be ranked by confidence.
RecallTable recall_at_k(const std::vector<std::vector<Interval>>& preds,
                        const std::vector<Interval>& gt, std::vector<int> ks = {1, 5},
                        std::vector<double> thresholds = {0.3, 0.5, 0.7});

/// Gallery indices sorted by descending score, stable in index on ties.
std::vector<int> rank_by_score(const Eigen::VectorXd& scores);

}  // namespace egocurate::metrics
