#include "train.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <memory>
#include <numeric>

#include "checkpoint.hpp"

namespace stcae {

int default_batch_size(Variant variant) { return is_dstcae(variant) ? 16 : 32; }

bool default_augment(Variant variant) { return !is_dstcae(variant); }

Tensor augment_hflip(const Tensor& batch) {
    check_contract(batch.rank() >= 3, "hflip needs (..., W, C) axes");
    const int C = batch.dim(batch.rank() - 1);
    const int W = batch.dim(batch.rank() - 2);
    std::vector<int> shape = batch.shape();
    shape[0] *= 2;
    Tensor out(shape);
    const std::int64_t n = batch.size();
    std::memcpy(out.data(), batch.data(), sizeof(float) * static_cast<std::size_t>(n));
    const std::int64_t rows = n / (static_cast<std::int64_t>(W) * C);
    const float* src = batch.data();
    float* dst = out.data() + n;
    for (std::int64_t r = 0; r < rows; ++r) {
        const float* srow = src + r * W * C;
        float* drow = dst + r * W * C;
        for (int x = 0; x < W; ++x) {
            std::memcpy(drow + static_cast<std::size_t>(x) * C,
                        srow + static_cast<std::size_t>(W - 1 - x) * C, sizeof(float) * C);
        }
    }
    return out;
}

namespace {

Tensor gather_batch(const std::vector<Tensor>& samples, const std::vector<std::size_t>& order,
                    std::size_t begin, std::size_t end) {
    const Tensor& first = samples[order[begin]];
    std::vector<int> shape{static_cast<int>(end - begin)};
    shape.insert(shape.end(), first.shape().begin(), first.shape().end());
    Tensor batch(shape);
    const std::int64_t stride = first.size();
    for (std::size_t i = begin; i < end; ++i) {
        const Tensor& s = samples[order[i]];
        std::memcpy(batch.data() + (i - begin) * stride, s.data(),
                    sizeof(float) * static_cast<std::size_t>(stride));
    }
    return batch;
}

Tensor flip_sample(const Tensor& sample) {
    std::vector<int> shape{1};
    shape.insert(shape.end(), sample.shape().begin(), sample.shape().end());
    Tensor flipped = augment_hflip(sample.reshaped(shape));
    std::vector<int> back = sample.shape();
    // second half of the doubled singleton batch is the mirror
    Tensor out(back);
    std::memcpy(out.data(), flipped.data() + sample.size(),
                sizeof(float) * static_cast<std::size_t>(sample.size()));
    return out;
}

}  // namespace

std::vector<double> fit(const ModelSpec& spec, ModelParams& params,
                        const std::vector<Tensor>& samples, const TrainConfig& cfg) {
    check_contract(cfg.epochs >= 1, "epochs must be >= 1");
    check(!samples.empty(), ErrorKind::data, "training dataset is empty");
    for (const Tensor& s : samples) {
        check_contract(s.shape() == spec.input_shape, "training sample shape does not match model");
    }
    const int batch_size = cfg.batch_size > 0 ? cfg.batch_size : default_batch_size(spec.variant);
    const bool augment = cfg.augment >= 0 ? cfg.augment != 0 : default_augment(spec.variant);

    std::vector<Tensor> data = samples;
    if (augment) {
        data.reserve(samples.size() * 2);
        for (const Tensor& s : samples) data.push_back(flip_sample(s));
    }

    AdadeltaState state = AdadeltaState::zeros_for(params);
    std::vector<double> history;
    history.reserve(static_cast<std::size_t>(cfg.epochs));

    std::vector<std::size_t> order(data.size());
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng shuffle_rng(Rng::mix(cfg.seed, 0xE70C * 2654435761ULL + static_cast<std::uint64_t>(epoch)));
        shuffle_rng.shuffle(order);

        double loss_sum = 0.0;
        std::size_t n_batches = 0;
        for (std::size_t begin = 0; begin < order.size(); begin += static_cast<std::size_t>(batch_size)) {
            const std::size_t end = std::min(order.size(), begin + static_cast<std::size_t>(batch_size));
            Tensor batch = gather_batch(data, order, begin, end);
            Rng drop_rng(Rng::mix(Rng::mix(cfg.seed, 0xD0D0),
                                  static_cast<std::uint64_t>(epoch) * 0x10001ULL + n_batches));
            auto [output, caches] = model_forward(spec, params, batch, true, drop_rng);
            auto [loss, grad_out] = mse_loss(batch, output);
            if (!std::isfinite(loss)) {
                fail(ErrorKind::divergence,
                     "non-finite loss at epoch " + std::to_string(epoch + 1));
            }
            ModelGrads grads = model_backward(spec, params, caches, grad_out);
            adadelta_step(params, grads.params, state, cfg.optimizer);
            loss_sum += loss;
            ++n_batches;
        }
        const double epoch_loss = loss_sum / static_cast<double>(n_batches);
        history.push_back(epoch_loss);
        if (cfg.on_epoch) cfg.on_epoch(epoch + 1, epoch_loss);
        if (!cfg.checkpoint_path.empty() && cfg.checkpoint_interval > 0 &&
            (epoch + 1) % cfg.checkpoint_interval == 0) {
            save_checkpoint(cfg.checkpoint_path, spec, params);
        }
    }
    if (!cfg.checkpoint_path.empty()) save_checkpoint(cfg.checkpoint_path, spec, params);
    if (!cfg.loss_csv_path.empty()) write_loss_csv(cfg.loss_csv_path, history);
    return history;
}

void write_loss_csv(const std::string& path, const std::vector<double>& history) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    check(f != nullptr, ErrorKind::io, "cannot open loss CSV for writing: " + path);
    std::fputs("epoch,mean_loss\n", f);
    for (std::size_t i = 0; i < history.size(); ++i) {
        std::fprintf(f, "%zu,%.9g\n", i + 1, history[i]);
    }
    check(std::fclose(f) == 0, ErrorKind::io, "loss CSV write failed: " + path);
}

}  // namespace stcae
