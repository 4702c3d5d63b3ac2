#include "window.hpp"

#include <cstring>

namespace stcae {

int window_count(int video_frames, const WindowConfig& cfg) {
    check_contract(cfg.length >= 1 && cfg.stride >= 1, "window length and stride must be >= 1");
    check(video_frames >= cfg.length, ErrorKind::data,
          "video shorter than window: " + std::to_string(video_frames) + " frames < T=" +
              std::to_string(cfg.length));
    return (video_frames - cfg.length) / cfg.stride + 1;
}

WindowSet make_windows(const std::string& video_id, const Tensor& video, const WindowConfig& cfg) {
    check_contract(video.rank() >= 2, "video tensor must be (V, ...)");
    const int v = video.dim(0);
    const int d = window_count(v, cfg);

    WindowSet set;
    set.video_id = video_id;
    set.video_frames = v;
    set.config = cfg;
    set.windows.reserve(static_cast<std::size_t>(d));
    set.start_frames.reserve(static_cast<std::size_t>(d));

    std::vector<int> wshape = video.shape();
    wshape[0] = cfg.length;
    const std::int64_t frame_elems = video.size() / v;
    for (int i = 0; i < d; ++i) {
        const int first = i * cfg.stride;
        Tensor w(wshape);
        std::memcpy(w.data(), video.data() + static_cast<std::int64_t>(first) * frame_elems,
                    sizeof(float) * static_cast<std::size_t>(frame_elems) * cfg.length);
        set.windows.push_back(std::move(w));
        set.start_frames.push_back(first + 1);
    }
    return set;
}

}  // namespace stcae
