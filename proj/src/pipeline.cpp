#include "pipeline.hpp"

#include <cstring>

namespace stcae {

std::vector<Tensor> collect_training_samples(const ModelSpec& spec, const Dataset& ds,
                                             const WindowConfig& wcfg) {
    std::vector<Tensor> samples;
    const bool windowed = is_dstcae(spec.variant);
    WindowConfig cfg = wcfg;
    if (windowed) cfg.length = spec.input_shape[0];
    for (const auto& m : ds.manifests) {
        if (m.role != VideoRole::train_adl) continue;
        const Tensor video = load_video(m, ds.options);
        if (windowed) {
            if (video.dim(0) < cfg.length) {
                warn("video " + m.id + " shorter than one window; skipped from training");
                continue;
            }
            WindowSet set = make_windows(m.id, video, cfg);
            for (auto& w : set.windows) samples.push_back(std::move(w));
        } else {
            const std::int64_t frame_elems = video.size() / video.dim(0);
            std::vector<int> fshape(video.shape().begin() + 1, video.shape().end());
            for (int j = 0; j < video.dim(0); ++j) {
                Tensor f(fshape);
                std::memcpy(f.data(), video.data() + j * frame_elems,
                            sizeof(float) * static_cast<std::size_t>(frame_elems));
                samples.push_back(std::move(f));
            }
        }
    }
    check(!samples.empty(), ErrorKind::data, "dataset has no usable train_adl videos");
    return samples;
}

std::vector<VideoScores> score_test_videos(const ModelSpec& spec, const ModelParams& params,
                                           const Dataset& ds, const WindowConfig& wcfg,
                                           int batch_size) {
    std::vector<VideoScores> scored;
    const bool three_d = is_dstcae(spec.variant);
    for (const auto& m : ds.manifests) {
        if (m.role != VideoRole::test_fall) continue;
        const Tensor video = load_video(m, ds.options);
        const auto labels = frame_labels(ds.find_annotation(m.id), video.dim(0));
        if (three_d && video.dim(0) < wcfg.length) {
            warn("video " + m.id + " shorter than one window; skipped");
            continue;
        }
        scored.push_back(score_video(spec, params, m.id, video, labels, wcfg, batch_size));
    }
    check(!scored.empty(), ErrorKind::data, "dataset has no test_fall videos");
    return scored;
}

}  // namespace stcae
