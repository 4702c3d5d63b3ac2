#include "eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <numeric>

#include <json.hpp>

namespace stcae {

double auc_rank(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels) {
    check_contract(scores.size() == labels.size(), "scores and labels differ in length");
    const std::size_t n = scores.size();
    std::size_t n_pos = 0;
    for (auto l : labels) n_pos += l ? 1 : 0;
    const std::size_t n_neg = n - n_pos;
    check(n_pos > 0 && n_neg > 0, ErrorKind::data, "degenerate labels: need both classes for AUC");

    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && scores[idx[j]] == scores[idx[i]]) ++j;
        const double midrank = 0.5 * static_cast<double>(i + 1 + j);  // ranks i+1 .. j
        for (std::size_t k = i; k < j; ++k) {
            if (labels[idx[k]]) rank_sum_pos += midrank;
        }
        i = j;
    }
    const double np = static_cast<double>(n_pos);
    return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * static_cast<double>(n_neg));
}

std::vector<std::array<double, 2>> roc_points(const std::vector<double>& scores,
                                              const std::vector<std::uint8_t>& labels) {
    check_contract(scores.size() == labels.size(), "scores and labels differ in length");
    std::size_t n_pos = 0;
    for (auto l : labels) n_pos += l ? 1 : 0;
    const std::size_t n_neg = scores.size() - n_pos;
    check(n_pos > 0 && n_neg > 0, ErrorKind::data, "degenerate labels: need both classes for ROC");

    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    std::vector<std::array<double, 2>> points;
    points.push_back({0.0, 0.0});
    std::size_t tp = 0, fp = 0, i = 0;
    while (i < idx.size()) {
        std::size_t j = i;
        while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) ++j;
        for (std::size_t k = i; k < j; ++k) {
            if (labels[idx[k]]) ++tp; else ++fp;
        }
        points.push_back({static_cast<double>(fp) / static_cast<double>(n_neg),
                          static_cast<double>(tp) / static_cast<double>(n_pos)});
        i = j;
    }
    return points;
}

double trapezoid_area(const std::vector<std::array<double, 2>>& points) {
    double area = 0.0;
    for (std::size_t k = 1; k < points.size(); ++k) {
        area += (points[k][0] - points[k - 1][0]) * (points[k][1] + points[k - 1][1]) * 0.5;
    }
    return area;
}

const char* score_kind_name(ScoreKind kind) {
    switch (kind) {
        case ScoreKind::c_mu: return "C_mu";
        case ScoreKind::c_sigma: return "C_sigma";
        case ScoreKind::w_mu: return "W_mu";
        case ScoreKind::w_sigma: return "W_sigma";
        case ScoreKind::frame_recon: return "frame_recon";
    }
    return "?";
}

namespace {

// Batched inference over a list of equally-shaped samples.
std::vector<Tensor> infer_batched(const ModelSpec& spec, const ModelParams& params,
                                  const std::vector<Tensor>& samples, int batch_size) {
    std::vector<Tensor> outputs;
    outputs.reserve(samples.size());
    Rng rng(0);  // inference mode: dropout is the identity, stream unused
    std::size_t at = 0;
    while (at < samples.size()) {
        const std::size_t take = std::min<std::size_t>(batch_size, samples.size() - at);
        std::vector<int> shape{static_cast<int>(take)};
        shape.insert(shape.end(), samples[at].shape().begin(), samples[at].shape().end());
        Tensor batch(shape);
        const std::int64_t stride = samples[at].size();
        for (std::size_t k = 0; k < take; ++k) {
            std::memcpy(batch.data() + static_cast<std::int64_t>(k) * stride,
                        samples[at + k].data(), sizeof(float) * static_cast<std::size_t>(stride));
        }
        auto [out, caches] = model_forward(spec, params, batch, false, rng);
        for (std::size_t k = 0; k < take; ++k) {
            Tensor one(samples[at].shape());
            std::memcpy(one.data(), out.data() + static_cast<std::int64_t>(k) * stride,
                        sizeof(float) * static_cast<std::size_t>(stride));
            outputs.push_back(std::move(one));
        }
        at += take;
    }
    return outputs;
}

}  // namespace

VideoScores score_video(const ModelSpec& spec, const ModelParams& params, const std::string& id,
                        const Tensor& video, const std::vector<std::uint8_t>& frame_labels,
                        const WindowConfig& wcfg, int batch_size) {
    check_contract(static_cast<int>(frame_labels.size()) == video.dim(0),
                   "frame labels do not match video length");
    if (batch_size < 1) batch_size = 16;
    VideoScores vs;
    vs.id = id;
    vs.frames = video.dim(0);
    vs.frame_labels = frame_labels;

    if (is_dstcae(spec.variant)) {
        WindowSet set = make_windows(id, video, wcfg);
        vs.windows = static_cast<int>(set.windows.size());
        vs.length = wcfg.length;
        const std::vector<Tensor> outputs = infer_batched(spec, params, set.windows, batch_size);
        vs.matrix = recon_error_matrix(id, set.windows, outputs);
        FrameScoreSeries fs = cross_context_scores(vs.matrix);
        vs.c_mu = std::move(fs.mu);
        vs.c_sigma = std::move(fs.sigma);
        WindowScoreSeries ws = within_context_scores(vs.matrix);
        vs.w_mu = std::move(ws.mu);
        vs.w_sigma = std::move(ws.sigma);
    } else {
        // 2D models score each frame by its own reconstruction error.
        std::vector<Tensor> frames;
        frames.reserve(static_cast<std::size_t>(video.dim(0)));
        std::vector<int> fshape(video.shape().begin() + 1, video.shape().end());
        const std::int64_t frame_elems = video.size() / video.dim(0);
        for (int j = 0; j < video.dim(0); ++j) {
            Tensor f(fshape);
            std::memcpy(f.data(), video.data() + static_cast<std::int64_t>(j) * frame_elems,
                        sizeof(float) * static_cast<std::size_t>(frame_elems));
            frames.push_back(std::move(f));
        }
        const std::vector<Tensor> outputs = infer_batched(spec, params, frames, batch_size);
        vs.frame_recon.resize(frames.size());
        for (std::size_t j = 0; j < frames.size(); ++j) {
            double acc = 0.0;
            const float* ip = frames[j].data();
            const float* op = outputs[j].data();
            for (std::int64_t e = 0; e < frames[j].size(); ++e) {
                const double d = static_cast<double>(ip[e]) - static_cast<double>(op[e]);
                acc += d * d;
            }
            vs.frame_recon[j] = acc;
        }
    }
    return vs;
}

namespace {

AggregateReport finalize(AggregateReport report) {
    check(!report.per_video.empty(), ErrorKind::data,
          "no evaluable videos: every test video had single-class labels");
    double mean = 0.0;
    for (const auto& r : report.per_video) mean += r.auc;
    mean /= static_cast<double>(report.per_video.size());
    double var = 0.0;
    for (const auto& r : report.per_video) {
        const double d = r.auc - mean;
        var += d * d;
    }
    report.mean_auc = mean;
    report.std_auc = std::sqrt(var / static_cast<double>(report.per_video.size()));
    return report;
}

void add_video(AggregateReport& report, const std::string& id, const std::vector<double>& scores,
               const std::vector<std::uint8_t>& labels) {
    bool has_pos = false, has_neg = false;
    for (auto l : labels) (l ? has_pos : has_neg) = true;
    if (!has_pos || !has_neg) {
        warn("video " + id + " skipped from aggregate: single-class labels");
        report.skipped.push_back(id);
        return;
    }
    RocResult r;
    r.video_id = id;
    r.points = roc_points(scores, labels);
    r.auc = auc_rank(scores, labels);
    report.per_video.push_back(std::move(r));
}

}  // namespace

AggregateReport aggregate_cross(const std::vector<VideoScores>& videos, const std::string& model,
                                ScoreKind kind) {
    check_contract(kind == ScoreKind::c_mu || kind == ScoreKind::c_sigma ||
                       kind == ScoreKind::frame_recon,
                   "cross-context aggregate needs a per-frame score kind");
    AggregateReport report;
    report.model = model;
    report.score_kind = score_kind_name(kind);
    for (const VideoScores& v : videos) {
        const std::vector<double>& s = kind == ScoreKind::c_mu      ? v.c_mu
                                       : kind == ScoreKind::c_sigma ? v.c_sigma
                                                                    : v.frame_recon;
        check_contract(s.size() == v.frame_labels.size(),
                       "score series does not match frame labels");
        add_video(report, v.id, s, v.frame_labels);
    }
    return finalize(std::move(report));
}

AggregateReport aggregate_within(const std::vector<VideoScores>& videos, const std::string& model,
                                 ScoreKind kind, int alpha) {
    check_contract(kind == ScoreKind::w_mu || kind == ScoreKind::w_sigma,
                   "within-context aggregate needs a per-window score kind");
    AggregateReport report;
    report.model = model;
    report.score_kind = score_kind_name(kind);
    report.alpha = alpha;
    for (const VideoScores& v : videos) {
        check_contract(v.windows > 0, "within-context scores need windowed videos");
        const WindowLabels wl = label_windows(v.frame_labels, v.windows, v.length, alpha);
        const std::vector<double>& s = kind == ScoreKind::w_mu ? v.w_mu : v.w_sigma;
        add_video(report, v.id, s, wl.labels);
    }
    return finalize(std::move(report));
}

std::string report_json(const AggregateReport& report) {
    nlohmann::ordered_json j;
    j["model"] = report.model;
    j["score_kind"] = report.score_kind;
    if (report.alpha > 0) j["alpha"] = report.alpha;
    j["per_video"] = nlohmann::ordered_json::array();
    for (const RocResult& r : report.per_video) {
        j["per_video"].push_back({{"id", r.video_id}, {"auc", r.auc}});
    }
    j["mean_auc"] = report.mean_auc;
    j["std_auc"] = report.std_auc;
    if (!report.skipped.empty()) j["skipped"] = report.skipped;
    return j.dump(2) + "\n";
}

namespace {

std::string report_tag(const AggregateReport& report) {
    std::string tag = report.score_kind;
    if (report.alpha > 0) tag += "_alpha" + std::to_string(report.alpha);
    return tag;
}

void write_text(const std::string& path, const std::string& text) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    check(f != nullptr, ErrorKind::io, "cannot open for writing: " + path);
    const bool ok = std::fwrite(text.data(), 1, text.size(), f) == text.size();
    check(std::fclose(f) == 0 && ok, ErrorKind::io, "write failed: " + path);
}

}  // namespace

void emit_report(const AggregateReport& report, const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    const std::string tag = report_tag(report);
    write_text(dir + "/summary_" + tag + ".json", report_json(report));
    for (const RocResult& r : report.per_video) {
        std::string csv = "fpr,tpr\n";
        for (const auto& p : r.points) {
            char line[80];
            std::snprintf(line, sizeof line, "%.9g,%.9g\n", p[0], p[1]);
            csv += line;
        }
        write_text(dir + "/roc_" + tag + "_" + r.video_id + ".csv", csv);
    }
}

void emit_score_series(const VideoScores& v, const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    char line[160];
    if (!v.c_mu.empty()) {
        std::string csv = "frame,c_mu,c_sigma,label\n";
        for (std::size_t j = 0; j < v.c_mu.size(); ++j) {
            std::snprintf(line, sizeof line, "%zu,%.9g,%.9g,%d\n", j + 1, v.c_mu[j], v.c_sigma[j],
                          v.frame_labels[j] ? 1 : 0);
            csv += line;
        }
        write_text(dir + "/scores_frames_" + v.id + ".csv", csv);

        std::string wcsv = "window,w_mu,w_sigma,fall_frames\n";
        WindowLabels wl = label_windows(v.frame_labels, v.windows, v.length, 1);
        for (std::size_t i = 0; i < v.w_mu.size(); ++i) {
            std::snprintf(line, sizeof line, "%zu,%.9g,%.9g,%d\n", i + 1, v.w_mu[i], v.w_sigma[i],
                          wl.fall_frame_counts[i]);
            wcsv += line;
        }
        write_text(dir + "/scores_windows_" + v.id + ".csv", wcsv);

        std::string mcsv = "window,frame,error\n";
        for (int i = 0; i < v.matrix.windows; ++i) {
            for (int k = 0; k < v.matrix.length; ++k) {
                std::snprintf(line, sizeof line, "%d,%d,%.9g\n", i + 1, i + k + 1,
                              v.matrix.values[static_cast<std::size_t>(i) * v.matrix.length + k]);
                mcsv += line;
            }
        }
        write_text(dir + "/recon_matrix_" + v.id + ".csv", mcsv);
    } else {
        std::string csv = "frame,recon_error,label\n";
        for (std::size_t j = 0; j < v.frame_recon.size(); ++j) {
            std::snprintf(line, sizeof line, "%zu,%.9g,%d\n", j + 1, v.frame_recon[j],
                          v.frame_labels[j] ? 1 : 0);
            csv += line;
        }
        write_text(dir + "/scores_frames_" + v.id + ".csv", csv);
    }
}

}  // namespace stcae
