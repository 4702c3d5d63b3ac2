/* C interface to the spatio-temporal convolutional autoencoder library.
 *
 * All functions return stcae_status; on any failure stcae_last_error()
 * holds a thread-local message. Handles are opaque and freed with their
 * _close function; strings returned through char** are freed with
 * stcae_string_free.
 */
#ifndef STCAE_H
#define STCAE_H

#ifdef __cplusplus
extern "C" {
#endif

typedef enum stcae_status {
    STCAE_OK = 0,
    STCAE_ERR_INVALID = 1,        /* bad arguments / contract violation */
    STCAE_ERR_DATA = 2,           /* dataset layout or content problem */
    STCAE_ERR_TRAIN_DIVERGED = 3, /* non-finite loss or gradient */
    STCAE_ERR_CHECKPOINT = 4,     /* checkpoint does not match the model */
    STCAE_ERR_IO = 5              /* filesystem failure */
} stcae_status;

typedef struct stcae_dataset stcae_dataset;
typedef struct stcae_model stcae_model;

const char* stcae_last_error(void);
void stcae_string_free(char* s);

/* Worker threads for the compute kernels; results are identical for any
 * count. n <= 0 selects the hardware concurrency. */
void stcae_set_threads(int n);
int stcae_threads(void);

/* Writes the built-in synthetic dataset (walking-blob ADL videos plus
 * collapse-anomaly test videos) under root. Any count <= 0 takes the
 * built-in default. */
stcae_status stcae_synth_generate(const char* root, unsigned long long seed, int adl_videos,
                                  int adl_frames, int fall_videos, int fall_frames);

stcae_status stcae_dataset_open(const char* root, int expect_filled, stcae_dataset** out);
void stcae_dataset_close(stcae_dataset* ds);

/* Per-video frame counts and sliding-window counts as JSON. window_len /
 * window_stride <= 0 take the defaults T=8, B=1. */
stcae_status stcae_dataset_inspect_json(const stcae_dataset* ds, int window_len,
                                        int window_stride, char** json_out);

/* Variants: dstcae-upsampling, dstcae-deconv, dstcae-c3d, cae-upsampling,
 * cae-deconv, dae. */
stcae_status stcae_model_create(const char* variant, unsigned long long seed, stcae_model** out);
stcae_status stcae_model_open(const char* checkpoint_path, stcae_model** out);
stcae_status stcae_model_save(const stcae_model* model, const char* path);
void stcae_model_close(stcae_model* model);
const char* stcae_model_variant(const stcae_model* model);

/* Layer-by-layer output shapes, one "Name - (d0, d1, ...)" line each. */
stcae_status stcae_shape_table(const char* variant, char** text_out);

typedef struct stcae_train_options {
    int epochs;                   /* <= 0: 500 */
    int batch_size;               /* <= 0: 16 for DSTCAE, 32 for DAE/CAE */
    int augment;                  /* < 0: horizontal flip for 2D models only */
    unsigned long long seed;
    double rho;                   /* <= 0: 0.95 */
    double epsilon;               /* <= 0: 1e-6 */
    double lr;                    /* <= 0: 1.0 */
    int checkpoint_interval;      /* epochs between checkpoints; 0: final only */
    const char* checkpoint_path;  /* optional */
    const char* loss_csv_path;    /* optional */
    int log_every;                /* > 0: epoch progress on stderr */
} stcae_train_options;

/* Trains on the train_adl videos of the dataset (DSTCAE variants consume
 * sliding windows, 2D models single frames). */
stcae_status stcae_train(stcae_model* model, const stcae_dataset* ds,
                         const stcae_train_options* opts);

typedef struct stcae_eval_options {
    const char* score;   /* "cross" or "within" */
    const char* stat;    /* "mu" or "sigma"; ignored for 2D models */
    int alpha;           /* within-context: 1..T, or 0 to sweep 1..T */
    int batch_size;      /* <= 0: 16 */
    int window_len;      /* <= 0: 8 */
    const char* out_dir; /* optional: summary JSON + ROC/score CSVs */
} stcae_eval_options;

/* Evaluates on the test_fall videos; one ROC AUC per video, aggregated as
 * mean (std). json_out receives the summary object, or an array of
 * summaries for an alpha sweep. */
stcae_status stcae_evaluate(const stcae_model* model, const stcae_dataset* ds,
                            const stcae_eval_options* opts, char** json_out);

#ifdef __cplusplus
}
#endif

#endif /* STCAE_H */
