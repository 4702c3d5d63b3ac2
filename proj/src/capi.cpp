#include "stcae.h"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>

#include <json.hpp>

#include "checkpoint.hpp"
#include "dataset.hpp"
#include "eval.hpp"
#include "model.hpp"
#include "parallel.hpp"
#include "pipeline.hpp"
#include "synth.hpp"
#include "train.hpp"
#include "window.hpp"

using nlohmann::ordered_json;

struct stcae_dataset {
    stcae::Dataset data;
};

struct stcae_model {
    stcae::ModelSpec spec;
    stcae::ModelParams params;
};

namespace {

thread_local std::string g_last_error;

stcae_status status_of(stcae::ErrorKind kind) {
    switch (kind) {
        case stcae::ErrorKind::contract: return STCAE_ERR_INVALID;
        case stcae::ErrorKind::data: return STCAE_ERR_DATA;
        case stcae::ErrorKind::io: return STCAE_ERR_IO;
        case stcae::ErrorKind::divergence: return STCAE_ERR_TRAIN_DIVERGED;
        case stcae::ErrorKind::checkpoint: return STCAE_ERR_CHECKPOINT;
    }
    return STCAE_ERR_INVALID;
}

template <typename Fn>
stcae_status guarded(Fn&& fn) {
    try {
        fn();
        return STCAE_OK;
    } catch (const stcae::Error& e) {
        g_last_error = e.what();
        return status_of(e.kind());
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return STCAE_ERR_INVALID;
    }
}

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out) std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

stcae::Variant require_variant(const char* name) {
    stcae::check_contract(name != nullptr, "variant name is null");
    const auto v = stcae::variant_from_name(name);
    stcae::check_contract(v.has_value(), std::string("unknown variant: ") + name);
    return *v;
}

}  // namespace

extern "C" {

const char* stcae_last_error(void) { return g_last_error.c_str(); }

void stcae_string_free(char* s) { std::free(s); }

void stcae_set_threads(int n) { stcae::set_threads(n); }

int stcae_threads(void) { return stcae::get_threads(); }

stcae_status stcae_synth_generate(const char* root, unsigned long long seed, int adl_videos,
                                  int adl_frames, int fall_videos, int fall_frames) {
    return guarded([&] {
        stcae::check_contract(root != nullptr, "root is null");
        stcae::SynthParams p;
        if (adl_videos > 0) p.adl_videos = adl_videos;
        if (adl_frames > 0) p.adl_frames = adl_frames;
        if (fall_videos > 0) p.fall_videos = fall_videos;
        if (fall_frames > 0) p.fall_frames = fall_frames;
        stcae::synth_generate(root, seed, p);
    });
}

stcae_status stcae_dataset_open(const char* root, int expect_filled, stcae_dataset** out) {
    return guarded([&] {
        stcae::check_contract(root != nullptr && out != nullptr, "null argument");
        stcae::DatasetOptions opts;
        opts.expect_filled = expect_filled != 0;
        auto* ds = new stcae_dataset{stcae::load_manifest(root, opts)};
        *out = ds;
    });
}

void stcae_dataset_close(stcae_dataset* ds) { delete ds; }

stcae_status stcae_dataset_inspect_json(const stcae_dataset* ds, int window_len,
                                        int window_stride, char** json_out) {
    return guarded([&] {
        stcae::check_contract(ds != nullptr && json_out != nullptr, "null argument");
        const stcae::WindowConfig cfg{window_len > 0 ? window_len : 8,
                                      window_stride > 0 ? window_stride : 1};
        ordered_json j;
        j["root"] = ds->data.root;
        j["window_length"] = cfg.length;
        j["window_stride"] = cfg.stride;
        j["videos"] = ordered_json::array();
        long long train_windows = 0, test_windows = 0, train_frames = 0, test_frames = 0;
        int train_videos = 0, test_videos = 0;
        for (const auto& m : ds->data.manifests) {
            const int frames = static_cast<int>(m.frame_paths.size());
            const bool train = m.role == stcae::VideoRole::train_adl;
            int windows = 0;
            if (frames >= cfg.length) windows = stcae::window_count(frames, cfg);
            j["videos"].push_back({{"id", m.id},
                                   {"role", train ? "train_adl" : "test_fall"},
                                   {"frames", frames},
                                   {"windows", windows}});
            (train ? train_frames : test_frames) += frames;
            (train ? train_windows : test_windows) += windows;
            (train ? train_videos : test_videos) += 1;
        }
        j["train_adl"] = {{"videos", train_videos}, {"frames", train_frames}, {"windows", train_windows}};
        j["test_fall"] = {{"videos", test_videos}, {"frames", test_frames}, {"windows", test_windows}};
        *json_out = dup_string(j.dump(2) + "\n");
    });
}

stcae_status stcae_model_create(const char* variant, unsigned long long seed, stcae_model** out) {
    return guarded([&] {
        stcae::check_contract(out != nullptr, "null argument");
        const stcae::Variant v = require_variant(variant);
        auto* m = new stcae_model;
        m->spec = stcae::build_model(v);
        m->params = stcae::init_params(m->spec, seed);
        *out = m;
    });
}

stcae_status stcae_model_open(const char* checkpoint_path, stcae_model** out) {
    return guarded([&] {
        stcae::check_contract(checkpoint_path != nullptr && out != nullptr, "null argument");
        auto [spec, params] = stcae::load_checkpoint(checkpoint_path);
        auto* m = new stcae_model;
        m->spec = std::move(spec);
        m->params = std::move(params);
        *out = m;
    });
}

stcae_status stcae_model_save(const stcae_model* model, const char* path) {
    return guarded([&] {
        stcae::check_contract(model != nullptr && path != nullptr, "null argument");
        stcae::save_checkpoint(path, model->spec, model->params);
    });
}

void stcae_model_close(stcae_model* model) { delete model; }

const char* stcae_model_variant(const stcae_model* model) {
    return model ? model->spec.name.c_str() : "";
}

stcae_status stcae_shape_table(const char* variant, char** text_out) {
    return guarded([&] {
        stcae::check_contract(text_out != nullptr, "null argument");
        const stcae::Variant v = require_variant(variant);
        const auto rows = stcae::shape_table(stcae::build_model(v));
        std::string text;
        for (const auto& [name, shape] : rows) {
            text += name + " - " + stcae::Tensor::shape_str(shape) + "\n";
        }
        *text_out = dup_string(text);
    });
}

stcae_status stcae_train(stcae_model* model, const stcae_dataset* ds,
                         const stcae_train_options* opts) {
    return guarded([&] {
        stcae::check_contract(model != nullptr && ds != nullptr && opts != nullptr,
                              "null argument");
        stcae::TrainConfig cfg;
        cfg.epochs = opts->epochs > 0 ? opts->epochs : 500;
        cfg.batch_size = opts->batch_size;
        cfg.augment = opts->augment;
        cfg.seed = opts->seed;
        if (opts->rho > 0) cfg.optimizer.rho = static_cast<float>(opts->rho);
        if (opts->epsilon > 0) cfg.optimizer.epsilon = static_cast<float>(opts->epsilon);
        if (opts->lr > 0) cfg.optimizer.lr = static_cast<float>(opts->lr);
        cfg.checkpoint_interval = opts->checkpoint_interval;
        if (opts->checkpoint_path) cfg.checkpoint_path = opts->checkpoint_path;
        if (opts->loss_csv_path) cfg.loss_csv_path = opts->loss_csv_path;
        if (opts->log_every > 0) {
            const int every = opts->log_every;
            const int total = cfg.epochs;
            cfg.on_epoch = [every, total](int epoch, double loss) {
                if (epoch % every == 0 || epoch == total) {
                    std::fprintf(stderr, "epoch %d/%d mean_loss=%.6g\n", epoch, total, loss);
                }
            };
        }
        const std::vector<stcae::Tensor> samples =
            stcae::collect_training_samples(model->spec, ds->data);
        stcae::fit(model->spec, model->params, samples, cfg);
    });
}

stcae_status stcae_evaluate(const stcae_model* model, const stcae_dataset* ds,
                            const stcae_eval_options* opts, char** json_out) {
    return guarded([&] {
        stcae::check_contract(model != nullptr && ds != nullptr && opts != nullptr,
                              "null argument");
        stcae::check_contract(opts->score != nullptr, "score kind is null");
        const std::string score = opts->score;
        const std::string stat = opts->stat ? opts->stat : "sigma";
        stcae::check_contract(score == "cross" || score == "within",
                              "score must be 'cross' or 'within'");
        stcae::check_contract(stat == "mu" || stat == "sigma", "stat must be 'mu' or 'sigma'");
        const bool three_d = stcae::is_dstcae(model->spec.variant);
        stcae::check_contract(score != "within" || three_d,
                              "within-context scoring requires a DSTCAE variant");

        const stcae::WindowConfig wcfg{opts->window_len > 0 ? opts->window_len
                                                            : (three_d ? model->spec.input_shape[0] : 8),
                                       1};
        stcae::check_contract(!three_d || wcfg.length == model->spec.input_shape[0],
                              "window length must match the model's temporal depth");
        const int batch = opts->batch_size > 0 ? opts->batch_size : 16;

        const std::vector<stcae::VideoScores> scored =
            stcae::score_test_videos(model->spec, model->params, ds->data, wcfg, batch);

        const std::string out_dir = opts->out_dir ? opts->out_dir : "";
        if (!out_dir.empty()) {
            for (const auto& v : scored) stcae::emit_score_series(v, out_dir);
        }

        std::vector<stcae::AggregateReport> reports;
        if (score == "cross") {
            const stcae::ScoreKind kind = !three_d            ? stcae::ScoreKind::frame_recon
                                          : stat == "mu"      ? stcae::ScoreKind::c_mu
                                                              : stcae::ScoreKind::c_sigma;
            reports.push_back(stcae::aggregate_cross(scored, model->spec.name, kind));
        } else {
            const stcae::ScoreKind kind =
                stat == "mu" ? stcae::ScoreKind::w_mu : stcae::ScoreKind::w_sigma;
            if (opts->alpha > 0) {
                reports.push_back(
                    stcae::aggregate_within(scored, model->spec.name, kind, opts->alpha));
            } else {
                for (int alpha = 1; alpha <= wcfg.length; ++alpha) {
                    reports.push_back(
                        stcae::aggregate_within(scored, model->spec.name, kind, alpha));
                }
            }
        }
        if (!out_dir.empty()) {
            for (const auto& r : reports) stcae::emit_report(r, out_dir);
        }
        if (json_out) {
            if (reports.size() == 1) {
                *json_out = dup_string(stcae::report_json(reports[0]));
            } else {
                std::string arr = "[\n";
                for (std::size_t i = 0; i < reports.size(); ++i) {
                    std::string one = stcae::report_json(reports[i]);
                    if (!one.empty() && one.back() == '\n') one.pop_back();
                    arr += one;
                    arr += i + 1 < reports.size() ? ",\n" : "\n";
                }
                arr += "]\n";
                *json_out = dup_string(arr);
            }
        }
    });
}

}  // extern "C"
