#pragma once

#include <string>
#include <vector>

#include "tensor.hpp"

namespace stcae {

struct WindowConfig {
    int length = 8;  // T, frames per window
    int stride = 1;  // B, frames shifted between consecutive windows
};

// Temporal sliding windows over one video's frames. Window i (0-based)
// covers frames [i*stride, i*stride + length); frame indices reported
// 1-based to match annotation files.
struct WindowSet {
    std::string video_id;
    int video_frames = 0;
    WindowConfig config;
    std::vector<Tensor> windows;     // each (T, H, W, C), materialized copies
    std::vector<int> start_frames;   // 1-based first frame of each window
};

// D = floor((V - T)/B) + 1; videos shorter than one window are an error.
int window_count(int video_frames, const WindowConfig& cfg);

WindowSet make_windows(const std::string& video_id, const Tensor& video, const WindowConfig& cfg);

}  // namespace stcae
