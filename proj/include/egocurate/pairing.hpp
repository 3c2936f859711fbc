#pragma once

#include <span>
#include <vector>

#include "egocurate/ingest.hpp"
#include "egocurate/types.hpp"

namespace egocurate::pairing {

struct PairingConfig {
    PairingStrategy strategy = PairingStrategy::F;
    double alpha = 4.9;  // corpus-level mean of per-video mean gaps, seconds
    bool clamp_to_video = true;
};

/// Shortest clip the degenerate-input rules may emit, seconds.
inline constexpr double kMinBeta = 0.1;

/// Mean gap between consecutive timestamps. Throws std::invalid_argument for
/// fewer than two timestamps ("beta undefined") or a decreasing sequence.
double compute_beta(std::span<const double> timestamps);

/// compute_beta with the degenerate-input rules applied: a single-narration
/// stream falls back to alpha, a zero mean gap is raised to kMinBeta.
double resolve_beta(std::span<const double> timestamps, double alpha);

/// One clip per narration; interval per the configured strategy, clamped to
/// [0, duration] when enabled. duration must be known when clamping.
std::vector<ClipTextPair> pair_clips(const ingest::NarrationStream& stream,
                                     const PairingConfig& config, double duration_sec);

/// Segment index by clip midpoint; local interval clamped into the segment.
SegmentLocator locate_segment(const ClipTextPair& pair, double segment_len = 600.0);

}  // namespace egocurate::pairing
