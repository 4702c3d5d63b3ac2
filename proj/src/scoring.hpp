#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tensor.hpp"

namespace stcae {

// Per-window, per-frame squared reconstruction error for one test video.
// Row i holds the errors of the T frames inside window i; with unit window
// stride, window i (0-based) covers frames i .. i+T-1, so the value for
// absolute frame j sits at column j - i.
struct ReconErrorMatrix {
    std::string video_id;
    int windows = 0;  // D
    int frames = 0;   // V
    int length = 0;   // T
    std::vector<double> values;  // D x T row-major

    double at(int window, int frame) const {  // both 0-based, frame absolute
        const int k = frame - window;
        check_contract(k >= 0 && k < length, "frame not covered by window");
        return values[static_cast<std::size_t>(window) * length + k];
    }
};

ReconErrorMatrix recon_error_matrix(const std::string& video_id,
                                    const std::vector<Tensor>& inputs,
                                    const std::vector<Tensor>& outputs);

// Cross-context per-frame scores: mean and population standard deviation of
// a frame's reconstruction errors over every window containing it.
struct FrameScoreSeries {
    std::vector<double> mu;     // length V
    std::vector<double> sigma;  // length V
    std::vector<std::uint8_t> labels;  // optional; filled by evaluation
};

FrameScoreSeries cross_context_scores(const ReconErrorMatrix& r);

// Within-context per-window scores: mean and population standard deviation
// of the T per-frame errors inside each window.
struct WindowScoreSeries {
    std::vector<double> mu;     // length D
    std::vector<double> sigma;  // length D
    std::vector<int> fall_frame_counts;  // optional; filled by label_windows
    std::vector<std::uint8_t> labels;    // optional; filled by label_windows
};

WindowScoreSeries within_context_scores(const ReconErrorMatrix& r);

// A window counts as a fall when it contains at least `alpha` fall frames.
struct WindowLabels {
    std::vector<int> fall_frame_counts;
    std::vector<std::uint8_t> labels;
};

WindowLabels label_windows(const std::vector<std::uint8_t>& frame_labels, int window_count,
                           int window_length, int alpha);

}  // namespace stcae
