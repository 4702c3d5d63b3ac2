#pragma once

#include <functional>
#include <string>
#include <vector>

#include "model.hpp"
#include "optim.hpp"

namespace stcae {

struct TrainConfig {
    int epochs = 500;
    int batch_size = 0;   // 0 -> variant default: 16 for DSTCAE, 32 for DAE/CAE
    int augment = -1;     // -1 -> variant default: horizontal flip for 2D models only
    std::uint64_t seed = 0;
    AdadeltaConfig optimizer;
    int checkpoint_interval = 0;      // epochs between checkpoints; 0 = final only
    std::string checkpoint_path;      // empty = no checkpoints written
    std::string loss_csv_path;        // empty = no CSV written
    std::function<void(int epoch, double loss)> on_epoch;  // optional progress hook
};

int default_batch_size(Variant variant);
bool default_augment(Variant variant);

// Doubles the batch with the left-right mirror of every sample (last axis is
// channels, the axis before it is width).
Tensor augment_hflip(const Tensor& batch);

// Trains in place; returns the per-epoch mean of batch losses. Deterministic
// given cfg.seed: shuffling is a pure function of (seed, epoch) and dropout
// streams are a pure function of (seed, epoch, batch).
std::vector<double> fit(const ModelSpec& spec, ModelParams& params,
                        const std::vector<Tensor>& samples, const TrainConfig& cfg);

void write_loss_csv(const std::string& path, const std::vector<double>& history);

}  // namespace stcae
