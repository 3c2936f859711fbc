#include "egocurate/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace egocurate::metrics {

std::vector<int> rank_by_score(const Eigen::VectorXd& scores) {
    std::vector<int> order(static_cast<size_t>(scores.size()));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&scores](int a, int b) { return scores[a] > scores[b]; });
    return order;
}

RetrievalResult mean_average_precision(const Eigen::MatrixXd& scores, const Eigen::MatrixXd& rel,
                                       double binarize_at) {
    if (scores.rows() != rel.rows() || scores.cols() != rel.cols()) {
        throw std::invalid_argument("mean_average_precision: score/relevance shape mismatch");
    }
    RetrievalResult out;
    double sum = 0.0;
    for (Eigen::Index q = 0; q < scores.rows(); ++q) {
        const auto order = rank_by_score(scores.row(q).transpose());
        size_t relevant_total = 0;
        for (Eigen::Index g = 0; g < rel.cols(); ++g) {
            if (rel(q, g) > binarize_at) relevant_total++;
        }
        if (relevant_total == 0) {
            out.queries_skipped++;
            continue;
        }
        size_t hits = 0;
        double ap = 0.0;
        for (size_t r = 0; r < order.size(); ++r) {
            if (rel(q, order[r]) > binarize_at) {
                hits++;
                ap += static_cast<double>(hits) / static_cast<double>(r + 1);
            }
        }
        sum += ap / static_cast<double>(relevant_total);
        out.queries_used++;
    }
    out.value = out.queries_used ? sum / static_cast<double>(out.queries_used) : 0.0;
    return out;
}

RetrievalResult ndcg(const Eigen::MatrixXd& scores, const Eigen::MatrixXd& rel) {
    if (scores.rows() != rel.rows() || scores.cols() != rel.cols()) {
        throw std::invalid_argument("ndcg: score/relevance shape mismatch");
    }
    RetrievalResult out;
    double sum = 0.0;
    for (Eigen::Index q = 0; q < scores.rows(); ++q) {
        std::vector<double> gains(static_cast<size_t>(rel.cols()));
        for (Eigen::Index g = 0; g < rel.cols(); ++g) gains[static_cast<size_t>(g)] = rel(q, g);
        if (std::all_of(gains.begin(), gains.end(), [](double g) { return g <= 0.0; })) {
            out.queries_skipped++;
            continue;
        }
        const auto order = rank_by_score(scores.row(q).transpose());
        double dcg = 0.0;
        for (size_t r = 0; r < order.size(); ++r) {
            dcg += gains[static_cast<size_t>(order[r])] / std::log2(static_cast<double>(r) + 2.0);
        }
        std::sort(gains.begin(), gains.end(), std::greater<>());
        double idcg = 0.0;
        for (size_t r = 0; r < gains.size(); ++r) {
            idcg += gains[r] / std::log2(static_cast<double>(r) + 2.0);
        }
        sum += dcg / idcg;
        out.queries_used++;
    }
    out.value = out.queries_used ? sum / static_cast<double>(out.queries_used) : 0.0;
    return out;
}

double iou(const Interval& a, const Interval& b) {
    if (a.start >= a.end || b.start >= b.end) {
        throw std::invalid_argument("iou: intervals must satisfy start < end");
    }
    const double inter = std::min(a.end, b.end) - std::max(a.start, b.start);
    if (inter <= 0.0) return 0.0;
    const double uni = (a.end - a.start) + (b.end - b.start) - inter;
    return inter / uni;
}

RecallTable recall_at_k(const std::vector<std::vector<Interval>>& preds,
                        const std::vector<Interval>& gt, std::vector<int> ks,
                        std::vector<double> thresholds) {
    if (preds.size() != gt.size()) {
        throw std::invalid_argument("recall_at_k: prediction/ground-truth count mismatch");
    }
    RecallTable table;
    table.ks = std::move(ks);
    table.thresholds = std::move(thresholds);
    table.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(table.ks.size()),
                                         static_cast<Eigen::Index>(table.thresholds.size()));
    if (gt.empty()) return table;

    for (size_t q = 0; q < gt.size(); ++q) {
        // best IoU within each prefix; an empty prediction list is a miss
        for (size_t ik = 0; ik < table.ks.size(); ++ik) {
            const size_t k = static_cast<size_t>(table.ks[ik]);
            double best = 0.0;
            for (size_t r = 0; r < preds[q].size() && r < k; ++r) {
                best = std::max(best, iou(preds[q][r], gt[q]));
            }
            for (size_t it = 0; it < table.thresholds.size(); ++it) {
                if (best >= table.thresholds[it]) {
                    table.values(static_cast<Eigen::Index>(ik), static_cast<Eigen::Index>(it)) +=
                        1.0;
                }
            }
        }
    }
    table.values /= static_cast<double>(gt.size());
    return table;
}

}  // namespace egocurate::metrics
