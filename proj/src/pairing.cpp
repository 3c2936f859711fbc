#include "egocurate/pairing.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace egocurate::pairing {

double compute_beta(std::span<const double> timestamps) {
    if (timestamps.size() < 2) {
        throw std::invalid_argument("beta undefined: need at least 2 timestamps");
    }
    double sum = 0.0;
    for (size_t j = 0; j + 1 < timestamps.size(); ++j) {
        const double gap = timestamps[j + 1] - timestamps[j];
        if (gap < 0.0) throw std::invalid_argument("compute_beta: timestamps must be ascending");
        sum += gap;
    }
    return sum / static_cast<double>(timestamps.size() - 1);
}

double resolve_beta(std::span<const double> timestamps, double alpha) {
    double beta = timestamps.size() < 2 ? alpha : compute_beta(timestamps);
    return std::max(beta, kMinBeta);
}

namespace {

struct RawInterval {
    double start;
    double end;
};

RawInterval strategy_interval(PairingStrategy strategy, std::span<const double> ts, size_t i,
                              double beta, double alpha) {
    const double t = ts[i];
    switch (strategy) {
        case PairingStrategy::A:
            return {t, t + alpha};
        case PairingStrategy::B:
            return {t - alpha / 2.0, t + alpha / 2.0};
        case PairingStrategy::C: {
            // ends anchor on the narration itself
            const double left = i > 0 ? ts[i - 1] : t;
            const double right = i + 1 < ts.size() ? ts[i + 1] : t;
            if (right - left <= 0.0) {
                return {t - kMinBeta / 2.0, t + kMinBeta / 2.0};
            }
            return {left, right};
        }
        case PairingStrategy::D:
            return {t - beta / 2.0, t + beta / 2.0};
        case PairingStrategy::E:
            return {t - beta / 4.0, t + beta / 4.0};
        case PairingStrategy::F:
            return {t - beta / (2.0 * alpha), t + beta / (2.0 * alpha)};
    }
    throw std::invalid_argument("unknown pairing strategy");
}

// Clamp into [0, duration] without ever emitting an empty interval: a window
// that falls entirely outside slides back in at kMinBeta length.
RawInterval clamp_interval(RawInterval iv, double duration) {
    double start = std::max(iv.start, 0.0);
    double end = std::min(iv.end, duration);
    if (start < end) return {start, end};
    const double len = std::min(kMinBeta, duration);
    if (iv.start >= duration) return {duration - len, duration};
    return {0.0, len};
}

}  // namespace

std::vector<ClipTextPair> pair_clips(const ingest::NarrationStream& stream,
                                     const PairingConfig& config, double duration_sec) {
    if (config.alpha <= 0.0) throw std::invalid_argument("pair_clips: alpha must be positive");
    if (config.clamp_to_video && duration_sec <= 0.0) {
        throw std::invalid_argument("pair_clips: clamping requires a positive duration");
    }

    std::vector<double> ts;
    ts.reserve(stream.records.size());
    for (const auto& r : stream.records) ts.push_back(r.timestamp_sec);
    if (!std::is_sorted(ts.begin(), ts.end())) {
        throw std::invalid_argument("pair_clips: records must be sorted by timestamp");
    }

    const double beta = resolve_beta(ts, config.alpha);

    std::vector<ClipTextPair> pairs;
    pairs.reserve(stream.records.size());
    for (size_t i = 0; i < stream.records.size(); ++i) {
        RawInterval iv = strategy_interval(config.strategy, ts, i, beta, config.alpha);
        if (config.clamp_to_video) iv = clamp_interval(iv, duration_sec);
        ClipTextPair pair;
        pair.video_uid = stream.video_uid;
        pair.t_start = iv.start;
        pair.t_end = iv.end;
        pair.text = stream.records[i].text;
        pair.narration_timestamp = ts[i];
        pair.beta_sec = beta;
        pair.strategy = config.strategy;
        pairs.push_back(std::move(pair));
    }
    return pairs;
}

SegmentLocator locate_segment(const ClipTextPair& pair, double segment_len) {
    if (segment_len <= 0.0) throw std::invalid_argument("locate_segment: segment_len must be positive");
    const double mid = (pair.t_start + pair.t_end) / 2.0;
    SegmentLocator loc;
    loc.segment_len = segment_len;
    loc.segment_index = static_cast<int>(std::floor(mid / segment_len));
    const double offset = loc.segment_index * segment_len;
    loc.local_start = std::max(pair.t_start - offset, 0.0);
    loc.local_end = std::min(pair.t_end - offset, segment_len);
    return loc;
}

}  // namespace egocurate::pairing
