// Command-line front end. Links only the C API from include/stcae.h; the
// vendored headers used here (CLI11, nlohmann/json) are client-side
// conveniences for flag parsing and pretty-printing.
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "stcae.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int exit_code_for(stcae_status st) {
    switch (st) {
        case STCAE_OK: return 0;
        case STCAE_ERR_DATA: return 2;
        case STCAE_ERR_TRAIN_DIVERGED: return 3;
        case STCAE_ERR_CHECKPOINT: return 4;
        default: return 1;
    }
}

int report_failure(stcae_status st, const char* what) {
    std::fprintf(stderr, "error: %s: %s\n", what, stcae_last_error());
    return exit_code_for(st);
}

void apply_threads(int threads) {
    if (threads <= 0) {
        if (const char* env = std::getenv("STCAE_THREADS")) threads = std::atoi(env);
    }
    if (threads > 0) stcae_set_threads(threads);
}

void echo_config(CLI::App& app, const std::string& out_dir) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    std::ofstream f(out_dir + "/config.resolved.ini", std::ios::binary);
    f << app.config_to_str(true, true);
}

struct ModelCloser {
    stcae_model* m = nullptr;
    ~ModelCloser() { stcae_model_close(m); }
};

struct DatasetCloser {
    stcae_dataset* d = nullptr;
    ~DatasetCloser() { stcae_dataset_close(d); }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"spatio-temporal convolutional autoencoders for fall detection"};
    app.require_subcommand(1);
    app.set_config("--config", "", "read options from a key=value config file with sections");

    int threads = 0;
    app.add_option("--threads", threads,
                   "worker threads (default: STCAE_THREADS or hardware); results do not depend on it")
        ->capture_default_str();

    // --- synth ---------------------------------------------------------
    auto* synth = app.add_subcommand("synth", "generate the built-in synthetic dataset");
    std::string synth_out;
    unsigned long long synth_seed = 7;
    int adl_videos = 0, adl_frames = 0, fall_videos = 0, fall_frames = 0;
    synth->add_option("--out", synth_out, "output dataset root")->required();
    synth->add_option("--seed", synth_seed, "generator seed")->capture_default_str();
    synth->add_option("--adl-videos", adl_videos, "ADL video count");
    synth->add_option("--adl-frames", adl_frames, "frames per ADL video");
    synth->add_option("--fall-videos", fall_videos, "fall video count");
    synth->add_option("--fall-frames", fall_frames, "frames per fall video");

    // --- inspect -------------------------------------------------------
    auto* inspect = app.add_subcommand("inspect", "per-video frame and sliding-window counts");
    std::string inspect_root;
    int window_len = 8, window_stride = 1;
    bool inspect_json = false;
    inspect->add_option("--data", inspect_root, "dataset root")->required();
    inspect->add_option("--window-len", window_len, "window length T")->capture_default_str();
    inspect->add_option("--window-stride", window_stride, "window stride B")->capture_default_str();
    inspect->add_flag("--json", inspect_json, "print raw JSON");

    // --- shapes --------------------------------------------------------
    auto* shapes = app.add_subcommand("shapes", "layer-by-layer output shapes of a variant");
    std::string shapes_variant;
    shapes->add_option("--variant", shapes_variant, "model variant")->required();

    // --- train ---------------------------------------------------------
    auto* train = app.add_subcommand("train", "train a variant on the train_adl videos");
    std::string train_root, train_variant = "dstcae-c3d", train_out = "out";
    unsigned long long train_seed = 0;
    int epochs = 500, batch_size = 0, checkpoint_interval = 0, log_every = 25;
    int augment = -1;
    bool expect_filled = false;
    train->add_option("--data", train_root, "dataset root")->required();
    train->add_option("--variant", train_variant, "model variant")->capture_default_str();
    train->add_option("--out", train_out, "output directory")->capture_default_str();
    train->add_option("--epochs", epochs, "training epochs")->capture_default_str();
    train->add_option("--batch-size", batch_size, "0 = variant default (16 DSTCAE, 32 DAE/CAE)")
        ->capture_default_str();
    train->add_option("--seed", train_seed, "training seed")->capture_default_str();
    train->add_option("--checkpoint-interval", checkpoint_interval,
                      "epochs between checkpoints (0 = final only)")
        ->capture_default_str();
    train->add_option("--log-every", log_every, "epochs between progress lines")
        ->capture_default_str();
    train->add_flag("--augment,!--no-augment", augment,
                    "horizontal-flip augmentation (default: on for 2D models only)");
    train->add_flag("--expect-filled", expect_filled, "warn on depth frames with unfilled holes");

    // --- evaluate ------------------------------------------------------
    auto* eval = app.add_subcommand("evaluate", "score the test_fall videos with a checkpoint");
    std::string eval_root, eval_checkpoint, eval_out = "out", eval_score = "cross",
                eval_stat = "sigma", eval_variant;
    int eval_alpha = 0, eval_batch = 16;
    bool alpha_sweep = false, eval_expect_filled = false;
    eval->add_option("--data", eval_root, "dataset root")->required();
    eval->add_option("--checkpoint", eval_checkpoint, "model checkpoint")->required();
    eval->add_option("--out", eval_out, "output directory")->capture_default_str();
    eval->add_option("--score", eval_score, "cross | within")->capture_default_str();
    eval->add_option("--stat", eval_stat, "mu | sigma")->capture_default_str();
    eval->add_option("--alpha", eval_alpha, "within-context fall-frame threshold (1..T)");
    eval->add_flag("--alpha-sweep", alpha_sweep, "emit one within-context summary per alpha 1..T");
    eval->add_option("--batch-size", eval_batch, "inference batch size")->capture_default_str();
    eval->add_option("--variant", eval_variant, "assert the checkpoint holds this variant");
    eval->add_flag("--expect-filled", eval_expect_filled, "warn on depth frames with unfilled holes");

    CLI11_PARSE(app, argc, argv);
    apply_threads(threads);

    if (synth->parsed()) {
        const stcae_status st = stcae_synth_generate(synth_out.c_str(), synth_seed, adl_videos,
                                                     adl_frames, fall_videos, fall_frames);
        if (st != STCAE_OK) return report_failure(st, "synth");
        std::printf("synthetic dataset written to %s\n", synth_out.c_str());
        return 0;
    }

    if (inspect->parsed()) {
        DatasetCloser ds;
        stcae_status st = stcae_dataset_open(inspect_root.c_str(), 0, &ds.d);
        if (st != STCAE_OK) return report_failure(st, "inspect");
        char* text = nullptr;
        st = stcae_dataset_inspect_json(ds.d, window_len, window_stride, &text);
        if (st != STCAE_OK) return report_failure(st, "inspect");
        if (inspect_json) {
            std::fputs(text, stdout);
        } else {
            const json j = json::parse(text);
            std::printf("%-16s %-10s %8s %8s\n", "video", "role", "frames", "windows");
            for (const auto& v : j["videos"]) {
                std::printf("%-16s %-10s %8d %8d\n", v["id"].get<std::string>().c_str(),
                            v["role"].get<std::string>().c_str(), v["frames"].get<int>(),
                            v["windows"].get<int>());
            }
            std::printf("train_adl: %d videos, %lld frames, %lld windows (T=%d, B=%d)\n",
                        j["train_adl"]["videos"].get<int>(),
                        j["train_adl"]["frames"].get<long long>(),
                        j["train_adl"]["windows"].get<long long>(), window_len, window_stride);
            std::printf("test_fall: %d videos, %lld frames, %lld windows\n",
                        j["test_fall"]["videos"].get<int>(),
                        j["test_fall"]["frames"].get<long long>(),
                        j["test_fall"]["windows"].get<long long>());
        }
        stcae_string_free(text);
        return 0;
    }

    if (shapes->parsed()) {
        char* text = nullptr;
        const stcae_status st = stcae_shape_table(shapes_variant.c_str(), &text);
        if (st != STCAE_OK) return report_failure(st, "shapes");
        std::fputs(text, stdout);
        stcae_string_free(text);
        return 0;
    }

    if (train->parsed()) {
        DatasetCloser ds;
        stcae_status st = stcae_dataset_open(train_root.c_str(), expect_filled ? 1 : 0, &ds.d);
        if (st != STCAE_OK) return report_failure(st, "train");
        ModelCloser model;
        st = stcae_model_create(train_variant.c_str(), train_seed, &model.m);
        if (st != STCAE_OK) return report_failure(st, "train");
        echo_config(app, train_out);

        const bool two_d = train_variant.rfind("dstcae-", 0) != 0;
        if (augment < 0 && two_d) {
            std::fprintf(stderr, "horizontal-flip augmentation enabled (2D model default)\n");
        }
        const std::string checkpoint_path = train_out + "/checkpoint.stcae";
        const std::string loss_path = train_out + "/loss.csv";
        stcae_train_options opts{};
        opts.epochs = epochs;
        opts.batch_size = batch_size;
        opts.augment = augment;
        opts.seed = train_seed;
        opts.checkpoint_interval = checkpoint_interval;
        opts.checkpoint_path = checkpoint_path.c_str();
        opts.loss_csv_path = loss_path.c_str();
        opts.log_every = log_every;
        st = stcae_train(model.m, ds.d, &opts);
        if (st != STCAE_OK) return report_failure(st, "train");
        std::printf("checkpoint: %s\nloss history: %s\n", checkpoint_path.c_str(),
                    loss_path.c_str());
        return 0;
    }

    if (eval->parsed()) {
        ModelCloser model;
        stcae_status st = stcae_model_open(eval_checkpoint.c_str(), &model.m);
        if (st != STCAE_OK) return report_failure(st, "evaluate");
        if (!eval_variant.empty() && eval_variant != stcae_model_variant(model.m)) {
            std::fprintf(stderr, "error: checkpoint holds %s, expected %s\n",
                         stcae_model_variant(model.m), eval_variant.c_str());
            return 4;
        }
        DatasetCloser ds;
        st = stcae_dataset_open(eval_root.c_str(), eval_expect_filled ? 1 : 0, &ds.d);
        if (st != STCAE_OK) return report_failure(st, "evaluate");
        echo_config(app, eval_out);

        stcae_eval_options opts{};
        opts.score = eval_score.c_str();
        opts.stat = eval_stat.c_str();
        opts.alpha = alpha_sweep ? 0 : eval_alpha;
        if (eval_score == "within" && !alpha_sweep && eval_alpha <= 0) opts.alpha = 1;
        opts.batch_size = eval_batch;
        opts.out_dir = eval_out.c_str();
        char* summary = nullptr;
        st = stcae_evaluate(model.m, ds.d, &opts, &summary);
        if (st != STCAE_OK) return report_failure(st, "evaluate");

        const json j = json::parse(summary);
        const auto print_one = [](const json& r) {
            if (r.contains("alpha")) {
                std::printf("%s %s alpha=%d: mean AUC %.4f (std %.4f) over %zu videos\n",
                            r["model"].get<std::string>().c_str(),
                            r["score_kind"].get<std::string>().c_str(), r["alpha"].get<int>(),
                            r["mean_auc"].get<double>(), r["std_auc"].get<double>(),
                            r["per_video"].size());
            } else {
                std::printf("%s %s: mean AUC %.4f (std %.4f) over %zu videos\n",
                            r["model"].get<std::string>().c_str(),
                            r["score_kind"].get<std::string>().c_str(),
                            r["mean_auc"].get<double>(), r["std_auc"].get<double>(),
                            r["per_video"].size());
            }
        };
        if (j.is_array()) {
            for (const auto& r : j) print_one(r);
        } else {
            print_one(j);
        }
        std::printf("reports written to %s\n", eval_out.c_str());
        stcae_string_free(summary);
        return 0;
    }

    return 0;
}
