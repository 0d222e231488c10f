/* uclearn — cluster-wise unlearnable-example toolkit, C API.
 *
 * All functions return UCLEARN_OK or an error code; uclearn_last_error()
 * holds a human-readable message for the calling thread. Objects are opaque
 * handles; every *_free takes ownership back. Strings returned through
 * char** are heap-allocated and released with uclearn_string_free.
 * Rich configuration travels as JSON text; unknown fields are ignored,
 * missing fields take documented defaults.
 */
#ifndef UCLEARN_H
#define UCLEARN_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define UCLEARN_API __declspec(dllexport)
#else
#define UCLEARN_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum uclearn_status {
    UCLEARN_OK = 0,
    UCLEARN_ERR_PARAM = 1,    /* invalid argument values */
    UCLEARN_ERR_CONFIG = 2,   /* unknown method/encoder, bad configuration */
    UCLEARN_ERR_FORMAT = 3,   /* corrupt or mismatched file contents */
    UCLEARN_ERR_IO = 4,       /* filesystem failures */
    UCLEARN_ERR_NUMERIC = 5,  /* non-finite values */
    UCLEARN_ERR_TRAINING = 6, /* diverged or failed optimization */
    UCLEARN_ERR_INTERNAL = 7
} uclearn_status;

typedef struct uclearn_dataset uclearn_dataset;
typedef struct uclearn_model uclearn_model; /* classifier = encoder trunk + head */
typedef struct uclearn_perturbation uclearn_perturbation;
typedef struct uclearn_clusters uclearn_clusters;

UCLEARN_API const char* uclearn_version(void);
UCLEARN_API const char* uclearn_last_error(void);
UCLEARN_API void uclearn_string_free(char* s);

/* ---------------- datasets ---------------- */

UCLEARN_API uclearn_status uclearn_dataset_synth(int num_categories, int per_category, int side,
                                                 uint64_t seed, uclearn_dataset** out);
/* Held-out split of the same synthetic task (fresh noise draws). */
UCLEARN_API uclearn_status uclearn_dataset_synth_test(int num_categories, int per_category,
                                                      int side, uint64_t seed,
                                                      uclearn_dataset** out);
UCLEARN_API uclearn_status uclearn_dataset_load(const char* dir, uclearn_dataset** out);
UCLEARN_API uclearn_status uclearn_dataset_save(const uclearn_dataset* ds, const char* dir);
/* {"name":..., "num_categories":..., "size":..., "seed":...} */
UCLEARN_API uclearn_status uclearn_dataset_info(const uclearn_dataset* ds, char** json_out);
/* Balanced seeded grouping into target_categories, then relabel. */
UCLEARN_API uclearn_status uclearn_dataset_relabel(const uclearn_dataset* ds,
                                                   int target_categories, uint64_t seed,
                                                   uclearn_dataset** out);
UCLEARN_API uclearn_status uclearn_dataset_mix(const uclearn_dataset* clean,
                                               const uclearn_dataset* protected_ds,
                                               const int* clean_categories, size_t count,
                                               uclearn_dataset** out);
UCLEARN_API void uclearn_dataset_free(uclearn_dataset* ds);

/* ---------------- models ---------------- */

/* config: {"width1":12,"width2":24,"embed_dim":128,"epochs":10,
            "batch":64,"lr":0.002,"seed":0} */
UCLEARN_API uclearn_status uclearn_train_surrogate(const uclearn_dataset* ds,
                                                   const char* config_json, uclearn_model** out);
UCLEARN_API uclearn_status uclearn_model_save(const uclearn_model* model, const char* path);
UCLEARN_API uclearn_status uclearn_model_load(const char* path, uclearn_model** out);
UCLEARN_API uclearn_status uclearn_model_descriptor(const uclearn_model* model, char** out);
UCLEARN_API void uclearn_model_free(uclearn_model* model);

/* ---------------- protection ---------------- */

/* config: {"method":"uc|eminn|emaxn|synper","eps":0.0627451,"seed":0,
            "clusters":10,"epochs":50,"batch":64,"lr":0.001,
            "metric":"squared_euclidean|cosine_distance",
            "normalize_embeddings":false, ...method-specific fields} */
UCLEARN_API uclearn_status uclearn_protect(const uclearn_dataset* ds,
                                           const uclearn_model* surrogate,
                                           const char* config_json,
                                           uclearn_perturbation** out_noise,
                                           uclearn_clusters** out_clusters, /* NULL for baselines */
                                           uclearn_dataset** out_protected);
UCLEARN_API uclearn_status uclearn_perturbation_save(const uclearn_perturbation* noise,
                                                     const char* path);
UCLEARN_API uclearn_status uclearn_perturbation_load(const char* path,
                                                     uclearn_perturbation** out);
/* {"mode":...,"eps":...,"count":...,"loss_traces":[...],"config":{...}} */
UCLEARN_API uclearn_status uclearn_perturbation_info(const uclearn_perturbation* noise,
                                                     char** json_out);
/* Applies noise; ids absent from the stored assignment are resolved by
 * nearest cluster center (cluster-wise, needs clusters+surrogate) or by the
 * surrogate's predicted class (class-wise, needs surrogate). */
UCLEARN_API uclearn_status uclearn_apply(const uclearn_dataset* ds,
                                         const uclearn_perturbation* noise,
                                         const uclearn_clusters* clusters_or_null,
                                         const uclearn_model* surrogate_or_null,
                                         uclearn_dataset** out);
UCLEARN_API uclearn_status uclearn_clusters_save(const uclearn_clusters* clusters,
                                                 const char* json_path, const char* centers_path);
UCLEARN_API uclearn_status uclearn_clusters_load(const char* json_path, const char* centers_path,
                                                 uclearn_clusters** out);
UCLEARN_API void uclearn_perturbation_free(uclearn_perturbation* noise);
UCLEARN_API void uclearn_clusters_free(uclearn_clusters* clusters);

/* ---------------- evaluation ---------------- */

/* trainer: {"epochs":12,"batch":64,"lr":0.002,"seed":0,
             "augmentation":["random_crop","random_horizontal_flip"],
             "defense":"none|mixup|cutmix|cutout|gaussian_smooth", ...} */
UCLEARN_API uclearn_status uclearn_eval(const uclearn_dataset* train,
                                        const uclearn_dataset* test,
                                        const uclearn_dataset* perturbed_test_or_null,
                                        const char* trainer_json, char** report_json,
                                        uclearn_model** out_model /* nullable */);
/* config: {"n_values":[2,5,10],"grouping_seed":0,"trainer":{...}} */
UCLEARN_API uclearn_status uclearn_relabel_experiment(const uclearn_dataset* protected_train,
                                                      const uclearn_dataset* clean_test,
                                                      const char* config_json, char** table_json);
/* config: {"clean_counts":[0,5,10],"trainer":{...}} */
UCLEARN_API uclearn_status uclearn_mixture_experiment(const uclearn_dataset* clean_train,
                                                      const uclearn_dataset* protected_train,
                                                      const uclearn_dataset* clean_test,
                                                      const char* config_json, char** table_json);
/* config: {"p_values":[2,10,20],"generator":{...},"trainer":{...},
            "normalize_embeddings":false} */
UCLEARN_API uclearn_status uclearn_cluster_sweep(const uclearn_dataset* clean_train,
                                                 const uclearn_dataset* clean_test,
                                                 const uclearn_model* surrogate,
                                                 const char* config_json, char** table_json);

/* ---------------- analysis ---------------- */

/* CSV: id,label,c1,c2,c3 of the encoder's embeddings. */
UCLEARN_API uclearn_status uclearn_pca3(const uclearn_model* encoder_model,
                                        const uclearn_dataset* ds, int normalize, char** csv_out);
/* Discrepancy/uniformity/mean-shift report comparing two aligned datasets
 * through the same encoder. */
UCLEARN_API uclearn_status uclearn_geometry(const uclearn_model* encoder_model,
                                            const uclearn_dataset* clean,
                                            const uclearn_dataset* perturbed, int normalize,
                                            char** json_out);

#ifdef __cplusplus
}
#endif

#endif /* UCLEARN_H */
