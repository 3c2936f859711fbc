#include "egocurate/contrastive.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <unordered_map>

namespace egocurate::contrastive {

namespace {

double logsumexp_all(const Eigen::VectorXd& v) {
    const double m = v.maxCoeff();
    return m + std::log((v.array() - m).exp().sum());
}

// logsumexp over the subset `idx` of v's coordinates
double logsumexp_subset(const Eigen::VectorXd& v, const std::vector<int>& idx) {
    double m = -std::numeric_limits<double>::infinity();
    for (int j : idx) m = std::max(m, v(j));
    double s = 0.0;
    for (int j : idx) s += std::exp(v(j) - m);
    return m + std::log(s);
}

Eigen::VectorXd softmax(const Eigen::VectorXd& v) {
    const double m = v.maxCoeff();
    Eigen::VectorXd e = (v.array() - m).exp();
    return e / e.sum();
}

void check_pair_shapes(const Eigen::MatrixXd& video, const Eigen::MatrixXd& text) {
    if (video.rows() != text.rows() || video.cols() != text.cols())
        throw std::invalid_argument("video/text embedding shapes differ");
    if (video.rows() == 0) throw std::invalid_argument("empty embedding batch");
    if (!video.allFinite() || !text.allFinite())
        throw std::invalid_argument("non-finite embedding");
}

void check_positive_sets(const std::vector<std::vector<int>>& positives, Eigen::Index n) {
    if (static_cast<Eigen::Index>(positives.size()) != n)
        throw std::invalid_argument("positive sets size mismatch");
    for (Eigen::Index i = 0; i < n; ++i) {
        bool self = false;
        for (int j : positives[i]) {
            if (j < 0 || j >= n) throw std::invalid_argument("positive index out of range");
            if (j == i) self = true;
        }
        if (!self) throw std::invalid_argument("positive set must contain its own index");
    }
}

}  // namespace

void EmbeddingBatch::validate() const {
    check_pair_shapes(video, text);
    if (meta.size() != static_cast<size_t>(video.rows()))
        throw std::invalid_argument("meta size does not match embedding rows");
    for (Eigen::Index i = 0; i < video.rows(); ++i) {
        if (std::abs(video.row(i).norm() - 1.0) > 1e-9 ||
            std::abs(text.row(i).norm() - 1.0) > 1e-9)
            throw std::invalid_argument("embedding rows must be unit length");
    }
}

LossResult info_nce(const Eigen::MatrixXd& video, const Eigen::MatrixXd& text, double tau) {
    check_pair_shapes(video, text);
    if (tau <= 0.0) throw std::invalid_argument("temperature must be positive");
    const Eigen::Index n = video.rows();
    const Eigen::MatrixXd sims = video * text.transpose() / tau;

    double loss = 0.0;
    // G(i,j) = d loss / d sims(i,j); both directions accumulate here
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::VectorXd row = sims.row(i).transpose();
        loss += logsumexp_all(row) - sims(i, i);
        g.row(i) += softmax(row).transpose();
        g(i, i) -= 1.0;
    }
    for (Eigen::Index j = 0; j < n; ++j) {
        const Eigen::VectorXd col = sims.col(j);
        loss += logsumexp_all(col) - sims(j, j);
        g.col(j) += softmax(col);
        g(j, j) -= 1.0;
    }
    loss /= static_cast<double>(n);
    g /= static_cast<double>(n);

    LossResult out;
    out.value = loss;
    out.grad_video = g * text / tau;
    out.grad_text = g.transpose() * video / tau;
    return out;
}

LossResult ego_nce(const Eigen::MatrixXd& video, const Eigen::MatrixXd& text,
                   const std::vector<std::vector<int>>& positives, double tau) {
    check_pair_shapes(video, text);
    if (tau <= 0.0) throw std::invalid_argument("temperature must be positive");
    const Eigen::Index m = video.rows();
    check_positive_sets(positives, m);
    const Eigen::MatrixXd sims = video * text.transpose() / tau;

    double loss = 0.0;
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
        // video row i against every text: full denominator, positive-set numerator
        const Eigen::VectorXd row = sims.row(i).transpose();
        const double lse_all = logsumexp_all(row);
        const double lse_pos = logsumexp_subset(row, positives[i]);
        loss += lse_all - lse_pos;
        g.row(i) += softmax(row).transpose();
        double denom_pos = 0.0;
        for (int j : positives[i]) denom_pos += std::exp(row(j) - lse_pos);
        for (int j : positives[i]) g(i, j) -= std::exp(row(j) - lse_pos) / denom_pos;
    }
    for (Eigen::Index i = 0; i < m; ++i) {
        // text column i against every video; positives index rows here
        const Eigen::VectorXd col = sims.col(i);
        const double lse_all = logsumexp_all(col);
        const double lse_pos = logsumexp_subset(col, positives[i]);
        loss += lse_all - lse_pos;
        g.col(i) += softmax(col);
        double denom_pos = 0.0;
        for (int j : positives[i]) denom_pos += std::exp(col(j) - lse_pos);
        for (int j : positives[i]) g(j, i) -= std::exp(col(j) - lse_pos) / denom_pos;
    }
    loss /= static_cast<double>(m);
    g /= static_cast<double>(m);

    LossResult out;
    out.value = loss;
    out.grad_video = g * text / tau;
    out.grad_text = g.transpose() * video / tau;
    return out;
}

MarginLossResult max_margin_loss(const Eigen::MatrixXd& sims, const Eigen::MatrixXd& correlations,
                                 double margin, double threshold) {
    if (sims.rows() != sims.cols()) throw std::invalid_argument("similarity matrix must be square");
    if (correlations.rows() != sims.rows() || correlations.cols() != sims.cols())
        throw std::invalid_argument("correlation matrix shape mismatch");
    if (margin < 0.0) throw std::invalid_argument("margin must be non-negative");
    const Eigen::Index n = sims.rows();

    MarginLossResult out;
    out.grad_sims = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            if (correlations(i, j) <= threshold) continue;
            for (Eigen::Index k = 0; k < n; ++k) {
                if (correlations(i, k) > threshold) continue;
                const double h1 = margin + sims(i, k) - sims(i, j);
                if (h1 > 0.0) {
                    out.value += h1;
                    out.grad_sims(i, k) += 1.0;
                    out.grad_sims(i, j) -= 1.0;
                }
                const double h2 = margin + sims(k, i) - sims(j, i);
                if (h2 > 0.0) {
                    out.value += h2;
                    out.grad_sims(k, i) += 1.0;
                    out.grad_sims(j, i) -= 1.0;
                }
            }
        }
    }
    return out;
}

double min_hinge_slack(const Eigen::MatrixXd& sims, const Eigen::MatrixXd& correlations,
                       double margin, double threshold) {
    const Eigen::Index n = sims.rows();
    double slack = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) {
            if (correlations(i, j) <= threshold) continue;
            for (Eigen::Index k = 0; k < n; ++k) {
                if (correlations(i, k) > threshold) continue;
                slack = std::min(slack, std::abs(margin + sims(i, k) - sims(i, j)));
                slack = std::min(slack, std::abs(margin + sims(k, i) - sims(j, i)));
            }
        }
    return slack;
}

std::vector<std::vector<int>> build_positive_sets(std::span<const taxonomy::TagVector> tags,
                                                  taxonomy::PositiveMode mode) {
    const int n = static_cast<int>(tags.size());
    std::vector<std::vector<int>> sets(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (j == i || taxonomy::positives_match(tags[i], tags[j], mode))
                sets[i].push_back(j);
        }
    }
    return sets;
}

NegativeVariant parse_negative_variant(const std::string& s) {
    if (s == "d" || s == "corpus_random" || s == "corpus-random") return NegativeVariant::corpus_random;
    if (s == "e" || s == "same_video" || s == "same-video") return NegativeVariant::same_video;
    if (s == "f" || s == "within_window" || s == "within-window") return NegativeVariant::within_window;
    throw std::invalid_argument("unknown negative variant: " + s);
}

char negative_variant_letter(NegativeVariant v) {
    switch (v) {
        case NegativeVariant::corpus_random: return 'd';
        case NegativeVariant::same_video: return 'e';
        case NegativeVariant::within_window: return 'f';
    }
    throw std::logic_error("unreachable");
}

std::vector<NegativePick> sample_scene_negatives(std::span<const ClipTextPair> corpus,
                                                 std::span<const int> anchors, NegativeVariant variant,
                                                 double window_sec, Rng& rng) {
    if (corpus.size() < 2) throw std::invalid_argument("need at least two corpus entries");
    if (variant == NegativeVariant::within_window && window_sec <= 0.0)
        throw std::invalid_argument("window must be positive");

    std::unordered_map<std::string, std::vector<int>> by_video;
    for (size_t i = 0; i < corpus.size(); ++i)
        by_video[corpus[i].video_uid].push_back(static_cast<int>(i));

    const auto pick_corpus_random = [&](int anchor) {
        // uniform over all indices except the anchor
        const auto r = static_cast<int>(rng.uniform_below(corpus.size() - 1));
        return r >= anchor ? r + 1 : r;
    };

    std::vector<NegativePick> picks;
    picks.reserve(anchors.size());
    for (int anchor : anchors) {
        if (anchor < 0 || anchor >= static_cast<int>(corpus.size()))
            throw std::invalid_argument("anchor index out of range");
        const auto& pair = corpus[anchor];
        const std::vector<int>& peers = by_video.at(pair.video_uid);

        NegativePick pick;
        if (variant == NegativeVariant::corpus_random) {
            pick.index = pick_corpus_random(anchor);
        } else if (peers.size() < 2) {
            pick.index = pick_corpus_random(anchor);
            pick.fallback = true;
        } else if (variant == NegativeVariant::same_video) {
            std::vector<int> others;
            others.reserve(peers.size() - 1);
            for (int p : peers)
                if (p != anchor) others.push_back(p);
            pick.index = others[rng.uniform_below(others.size())];
        } else {
            std::vector<int> in_window;
            for (int p : peers) {
                if (p == anchor) continue;
                if (std::abs(corpus[p].narration_timestamp - pair.narration_timestamp) <= window_sec)
                    in_window.push_back(p);
            }
            if (!in_window.empty()) {
                pick.index = in_window[rng.uniform_below(in_window.size())];
            } else {
                // nearest other narration in the same video, lower index on ties
                int best = -1;
                double best_dt = std::numeric_limits<double>::infinity();
                for (int p : peers) {
                    if (p == anchor) continue;
                    const double dt =
                        std::abs(corpus[p].narration_timestamp - pair.narration_timestamp);
                    if (dt < best_dt) {
                        best_dt = dt;
                        best = p;
                    }
                }
                pick.index = best;
                pick.fallback = true;
            }
        }
        picks.push_back(pick);
    }
    return picks;
}

double max_grad_error(const std::function<double(const Eigen::VectorXd&)>& f,
                      const Eigen::VectorXd& x, const Eigen::VectorXd& analytic_grad, double h) {
    if (x.size() != analytic_grad.size())
        throw std::invalid_argument("gradient size mismatch");
    if (h <= 0.0) throw std::invalid_argument("step must be positive");
    double worst = 0.0;
    Eigen::VectorXd probe = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        probe(i) = x(i) + h;
        const double fp = f(probe);
        probe(i) = x(i) - h;
        const double fm = f(probe);
        probe(i) = x(i);
        if (!std::isfinite(fp) || !std::isfinite(fm))
            throw std::runtime_error("loss non-finite during finite-difference probe");
        const double numeric = (fp - fm) / (2.0 * h);
        const double err = std::abs(analytic_grad(i) - numeric) / std::max(1.0, std::abs(numeric));
        worst = std::max(worst, err);
    }
    return worst;
}

namespace {

// pack [vec(video); vec(text)] and the matching analytic gradient, then run
// the generic checker against a re-evaluating closure
double check_pairwise_loss(
    const Eigen::MatrixXd& video, const Eigen::MatrixXd& text,
    const std::function<double(const Eigen::MatrixXd&, const Eigen::MatrixXd&)>& loss,
    const Eigen::MatrixXd& grad_video, const Eigen::MatrixXd& grad_text, double h) {
    const Eigen::Index n = video.rows(), d = video.cols();
    Eigen::VectorXd x(2 * n * d), g(2 * n * d);
    Eigen::Map<Eigen::VectorXd>(x.data(), n * d) =
        Eigen::Map<const Eigen::VectorXd>(video.data(), n * d);
    Eigen::Map<Eigen::VectorXd>(x.data() + n * d, n * d) =
        Eigen::Map<const Eigen::VectorXd>(text.data(), n * d);
    Eigen::Map<Eigen::VectorXd>(g.data(), n * d) =
        Eigen::Map<const Eigen::VectorXd>(grad_video.data(), n * d);
    Eigen::Map<Eigen::VectorXd>(g.data() + n * d, n * d) =
        Eigen::Map<const Eigen::VectorXd>(grad_text.data(), n * d);

    const auto f = [&](const Eigen::VectorXd& v) {
        const Eigen::Map<const Eigen::MatrixXd> vm(v.data(), n, d);
        const Eigen::Map<const Eigen::MatrixXd> tm(v.data() + n * d, n, d);
        return loss(vm, tm);
    };
    return max_grad_error(f, x, g, h);
}

}  // namespace

double gradient_check_info_nce(const Eigen::MatrixXd& video, const Eigen::MatrixXd& text,
                               double tau, double h) {
    const LossResult r = info_nce(video, text, tau);
    return check_pairwise_loss(
        video, text,
        [tau](const Eigen::MatrixXd& v, const Eigen::MatrixXd& t) { return info_nce(v, t, tau).value; },
        r.grad_video, r.grad_text, h);
}

double gradient_check_ego_nce(const Eigen::MatrixXd& video, const Eigen::MatrixXd& text,
                              const std::vector<std::vector<int>>& positives, double tau, double h) {
    const LossResult r = ego_nce(video, text, positives, tau);
    return check_pairwise_loss(
        video, text,
        [&positives, tau](const Eigen::MatrixXd& v, const Eigen::MatrixXd& t) {
            return ego_nce(v, t, positives, tau).value;
        },
        r.grad_video, r.grad_text, h);
}

double gradient_check_max_margin(const Eigen::MatrixXd& sims, const Eigen::MatrixXd& correlations,
                                 double margin, double threshold, double h) {
    const MarginLossResult r = max_margin_loss(sims, correlations, margin, threshold);
    const Eigen::Index n = sims.rows();
    const Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(sims.data(), n * n);
    const Eigen::VectorXd g = Eigen::Map<const Eigen::VectorXd>(r.grad_sims.data(), n * n);
    const auto f = [&](const Eigen::VectorXd& v) {
        const Eigen::Map<const Eigen::MatrixXd> s(v.data(), n, n);
        return max_margin_loss(s, correlations, margin, threshold).value;
    };
    return max_grad_error(f, x, g, h);
}

}  // namespace egocurate::contrastive
