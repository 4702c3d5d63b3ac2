#include "scoring.hpp"

#include <cmath>

namespace stcae {

ReconErrorMatrix recon_error_matrix(const std::string& video_id,
                                    const std::vector<Tensor>& inputs,
                                    const std::vector<Tensor>& outputs) {
    check_contract(inputs.size() == outputs.size() && !inputs.empty(),
                   "recon_error_matrix needs matching window lists");
    ReconErrorMatrix r;
    r.video_id = video_id;
    r.windows = static_cast<int>(inputs.size());
    r.length = inputs[0].dim(0);
    r.frames = r.windows + r.length - 1;
    r.values.resize(static_cast<std::size_t>(r.windows) * r.length);
    for (int i = 0; i < r.windows; ++i) {
        const Tensor& in = inputs[static_cast<std::size_t>(i)];
        const Tensor& out = outputs[static_cast<std::size_t>(i)];
        check_contract(in.same_shape(out), "window and reconstruction shapes differ");
        check_contract(in.dim(0) == r.length, "inconsistent window length");
        const std::int64_t frame_elems = in.size() / r.length;
        const float* ip = in.data();
        const float* op = out.data();
        for (int k = 0; k < r.length; ++k) {
            double acc = 0.0;
            const std::int64_t base = static_cast<std::int64_t>(k) * frame_elems;
            for (std::int64_t e = 0; e < frame_elems; ++e) {
                const double d = static_cast<double>(ip[base + e]) - static_cast<double>(op[base + e]);
                acc += d * d;
            }
            r.values[static_cast<std::size_t>(i) * r.length + k] = acc;
        }
    }
    return r;
}

namespace {

std::pair<double, double> mean_pop_std(const double* v, int n) {
    double mu = 0.0;
    for (int i = 0; i < n; ++i) mu += v[i];
    mu /= n;
    double var = 0.0;
    for (int i = 0; i < n; ++i) {
        const double d = v[i] - mu;
        var += d * d;
    }
    return {mu, std::sqrt(var / n)};
}

}  // namespace

FrameScoreSeries cross_context_scores(const ReconErrorMatrix& r) {
    FrameScoreSeries s;
    s.mu.resize(static_cast<std::size_t>(r.frames));
    s.sigma.resize(static_cast<std::size_t>(r.frames));
    std::vector<double> column;
    column.reserve(static_cast<std::size_t>(r.length));
    for (int j = 0; j < r.frames; ++j) {
        // windows containing frame j: i in [max(0, j-T+1), min(j, D-1)]
        const int first = j - r.length + 1 > 0 ? j - r.length + 1 : 0;
        const int last = j < r.windows - 1 ? j : r.windows - 1;
        column.clear();
        for (int i = first; i <= last; ++i) column.push_back(r.at(i, j));
        const auto [mu, sigma] = mean_pop_std(column.data(), static_cast<int>(column.size()));
        s.mu[static_cast<std::size_t>(j)] = mu;
        s.sigma[static_cast<std::size_t>(j)] = sigma;
    }
    return s;
}

WindowScoreSeries within_context_scores(const ReconErrorMatrix& r) {
    WindowScoreSeries s;
    s.mu.resize(static_cast<std::size_t>(r.windows));
    s.sigma.resize(static_cast<std::size_t>(r.windows));
    for (int i = 0; i < r.windows; ++i) {
        const auto [mu, sigma] =
            mean_pop_std(r.values.data() + static_cast<std::size_t>(i) * r.length, r.length);
        s.mu[static_cast<std::size_t>(i)] = mu;
        s.sigma[static_cast<std::size_t>(i)] = sigma;
    }
    return s;
}

WindowLabels label_windows(const std::vector<std::uint8_t>& frame_labels, int window_count,
                           int window_length, int alpha) {
    check_contract(alpha >= 1 && alpha <= window_length, "alpha must be in [1, T]");
    check_contract(static_cast<int>(frame_labels.size()) >= window_count + window_length - 1,
                   "frame labels shorter than windowed video");
    WindowLabels out;
    out.fall_frame_counts.resize(static_cast<std::size_t>(window_count));
    out.labels.resize(static_cast<std::size_t>(window_count));
    for (int i = 0; i < window_count; ++i) {
        int count = 0;
        for (int k = 0; k < window_length; ++k) count += frame_labels[static_cast<std::size_t>(i + k)] ? 1 : 0;
        out.fall_frame_counts[static_cast<std::size_t>(i)] = count;
        out.labels[static_cast<std::size_t>(i)] = count >= alpha ? 1 : 0;
    }
    return out;
}

}  // namespace stcae
