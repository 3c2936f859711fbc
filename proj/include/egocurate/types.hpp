#pragma once

#include <stdexcept>
#include <string>

namespace egocurate {

/// One timestamped narration line written by one annotator for one video.
struct NarrationRecord {
    std::string video_uid;
    std::string annotator_id;
    double timestamp_sec = 0.0;
    std::string text;
};

/// Video-level metadata used by the filtering rules.
struct VideoMeta {
    std::string video_uid;
    double duration_sec = 0.0;
    int width_px = 0;
    int height_px = 0;
    bool is_stereo = false;
    // set by filter_videos: stereo videos are retained but must be treated
    // as half their stored width
    bool halve_width = false;
};

/// Clip creation strategies, rows (a)-(f) of the pairing ablation.
enum class PairingStrategy { A, B, C, D, E, F };

inline char strategy_letter(PairingStrategy s) {
    return static_cast<char>('a' + static_cast<int>(s));
}

inline PairingStrategy parse_strategy(const std::string& s) {
    if (s.size() == 1) {
        char c = static_cast<char>(std::tolower(static_cast<unsigned char>(s[0])));
        if (c >= 'a' && c <= 'f') return static_cast<PairingStrategy>(c - 'a');
    }
    throw std::invalid_argument("unknown pairing strategy: '" + s + "' (expected a..f)");
}

/// A derived video interval matched to one narration; the atomic sample.
struct ClipTextPair {
    std::string video_uid;
    double t_start = 0.0;
    double t_end = 0.0;
    std::string text;
    double narration_timestamp = 0.0;
    double beta_sec = 0.0;  // per-stream mean narration gap used for this clip
    PairingStrategy strategy = PairingStrategy::F;
};

/// Closed interval in seconds, start < end.
struct Interval {
    double start = 0.0;
    double end = 0.0;
};

/// Position of a clip inside a fixed-length storage segment.
struct SegmentLocator {
    int segment_index = 0;
    double local_start = 0.0;
    double local_end = 0.0;
    double segment_len = 600.0;
};

}  // namespace egocurate
