#pragma once

#include <vector>

#include "dataset.hpp"
#include "eval.hpp"
#include "model.hpp"
#include "window.hpp"

namespace stcae {

// Training samples from the train_adl videos: sliding windows for DSTCAE
// variants, single frames for 2D models. Videos shorter than one window are
// skipped with a warning.
std::vector<Tensor> collect_training_samples(const ModelSpec& spec, const Dataset& ds,
                                             const WindowConfig& wcfg = {});

// One VideoScores per test_fall video (model inference included).
std::vector<VideoScores> score_test_videos(const ModelSpec& spec, const ModelParams& params,
                                           const Dataset& ds, const WindowConfig& wcfg,
                                           int batch_size);

}  // namespace stcae
