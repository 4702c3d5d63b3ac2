#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "model.hpp"
#include "scoring.hpp"
#include "window.hpp"

namespace stcae {

// Probability that a random positive outscores a random negative, ties worth
// half; computed from midranks. Raises ErrorKind::data on single-class input.
double auc_rank(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels);

// ROC with one threshold per distinct score value, starting at (0,0) and
// ending at (1,1); (fpr, tpr) pairs.
std::vector<std::array<double, 2>> roc_points(const std::vector<double>& scores,
                                              const std::vector<std::uint8_t>& labels);

double trapezoid_area(const std::vector<std::array<double, 2>>& points);

enum class ScoreKind { c_mu, c_sigma, w_mu, w_sigma, frame_recon };
const char* score_kind_name(ScoreKind kind);

struct RocResult {
    std::string video_id;
    std::vector<std::array<double, 2>> points;
    double auc = 0.0;
};

struct AggregateReport {
    std::string model;
    std::string score_kind;
    int alpha = 0;  // > 0 only for within-context reports
    std::vector<RocResult> per_video;
    std::vector<std::string> skipped;  // single-class videos left out of the aggregate
    double mean_auc = 0.0;
    double std_auc = 0.0;  // population std across videos
};

// Everything score-like derived from one test video in a single inference
// pass; within-context reports for any alpha reuse it without re-running the
// model.
struct VideoScores {
    std::string id;
    int frames = 0;
    int windows = 0;
    int length = 0;
    std::vector<double> c_mu, c_sigma;    // DSTCAE variants
    std::vector<double> w_mu, w_sigma;    // DSTCAE variants
    std::vector<double> frame_recon;      // 2D models
    std::vector<std::uint8_t> frame_labels;
    ReconErrorMatrix matrix;              // DSTCAE variants
};

VideoScores score_video(const ModelSpec& spec, const ModelParams& params, const std::string& id,
                        const Tensor& video, const std::vector<std::uint8_t>& frame_labels,
                        const WindowConfig& wcfg, int batch_size);

AggregateReport aggregate_cross(const std::vector<VideoScores>& videos, const std::string& model,
                                ScoreKind kind);
AggregateReport aggregate_within(const std::vector<VideoScores>& videos, const std::string& model,
                                 ScoreKind kind, int alpha);

// Deterministic JSON per the report schema:
// {model, score_kind, alpha?, per_video:[{id,auc}], mean_auc, std_auc}
std::string report_json(const AggregateReport& report);

// summary_<kind>[_alphaN].json plus roc_<kind>[_alphaN]_<id>.csv per video.
void emit_report(const AggregateReport& report, const std::string& dir);

// scores_frames_<id>.csv / scores_windows_<id>.csv / recon_matrix_<id>.csv.
void emit_score_series(const VideoScores& v, const std::string& dir);

}  // namespace stcae
