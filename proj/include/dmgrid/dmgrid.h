#ifndef DMGRID_H
#define DMGRID_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define DMG_API __declspec(dllexport)
#else
#define DMG_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum dmg_status {
    DMG_OK = 0,
    DMG_ERR_INVALID_ARGUMENT = 1,
    DMG_ERR_CONFIG = 2,
    DMG_ERR_NUMERIC = 3,
    DMG_ERR_ROUTING_DEGENERATE = 4,
    DMG_ERR_INFEASIBLE_SEPARATION = 5,
    DMG_ERR_CALIBRATION = 6,
    DMG_ERR_IO = 7,
    DMG_ERR_INTERNAL = 99
} dmg_status;

typedef enum dmg_phase {
    DMG_PHASE_WARMUP = 0,
    DMG_PHASE_OPERATE = 1,
    DMG_PHASE_INTERFERE = 2,
    DMG_PHASE_RECONSTRUCT = 3
} dmg_phase;

typedef struct dmg_metrics {
    double r_mean;
    double firing_selectivity;
    double mutual_information;
    double content_mutual_information;
    double silhouette;
    double context_silhouette;
    double drift_estimate;
    double death_rate;
    int degenerate;
} dmg_metrics;

typedef struct dmg_sim dmg_sim;

DMG_API const char* dmg_version(void);
/* Message of the last failing call on this thread ("" if none). */
DMG_API const char* dmg_last_error(void);
DMG_API void dmg_free_string(char* s);

/* config_json may be NULL (all defaults); overrides are "dot.path=value" strings. */
DMG_API dmg_status dmg_validate_config(const char* config_json, const char* const* overrides, size_t n_overrides);
/* Resolved config as JSON plus its hash; both strings must be released with dmg_free_string. */
DMG_API dmg_status dmg_resolve_config(const char* config_json, const char* const* overrides, size_t n_overrides,
                              char** resolved_json, char** hash);

DMG_API dmg_status dmg_sim_create(const char* config_json, const char* const* overrides, size_t n_overrides,
                          uint64_t seed, dmg_sim** out);
DMG_API void dmg_sim_destroy(dmg_sim* sim);
/* One cycle with an explicit context; n_fired may be NULL. */
DMG_API dmg_status dmg_sim_step(dmg_sim* sim, int context, int* n_fired);
DMG_API dmg_status dmg_sim_run_phase(dmg_sim* sim, dmg_phase phase, int duration, dmg_metrics* out);
/* Runs the configured plan; `out` receives the last phase's report. */
DMG_API dmg_status dmg_sim_run_plan(dmg_sim* sim, dmg_metrics* out);
DMG_API int dmg_sim_unit_count(const dmg_sim* sim);
DMG_API int dmg_sim_dim(const dmg_sim* sim);
DMG_API dmg_status dmg_sim_unit_content(const dmg_sim* sim, int unit, double* out, size_t len);
DMG_API dmg_status dmg_sim_unit_energy(const dmg_sim* sim, int unit, double* out);

DMG_API size_t dmg_block_count(void);
/* NULL when index is out of range. */
DMG_API const char* dmg_block_id(size_t index);
/* Block definition (conditions, seeds, checks) as JSON; release with dmg_free_string. */
DMG_API dmg_status dmg_block_describe(const char* id, char** spec_json);

/* Runs the listed blocks and writes runs.csv, summary.json, plotdata/, manifest.json into out_dir.
 * seeds may be NULL (block defaults). *deviations is set to 1 when any hard check failed or a run
 * raised. summary_json (nullable) receives the summary; release with dmg_free_string. */
DMG_API dmg_status dmg_run_blocks(const char* const* ids, size_t n_ids, uint64_t master_seed, const uint64_t* seeds,
                          size_t n_seeds, const char* config_json, const char* const* overrides,
                          size_t n_overrides, const char* out_dir, int* deviations, char** summary_json);

/* (K, p, scheduler) sweep; writes sweep.csv (long) and sweep_pivot.csv into out_dir. */
DMG_API dmg_status dmg_sweep(const int* k_values, size_t n_k, const double* p_values, size_t n_p,
                     const char* const* schedulers, size_t n_sched, const uint64_t* seeds, size_t n_seeds,
                     uint64_t master_seed, const char* config_json, const char* const* overrides,
                     size_t n_overrides, const char* out_dir);

#ifdef __cplusplus
}
#endif

#endif
