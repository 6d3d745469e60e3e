/* Copyright (C) 2026 The panosplat Authors
 * SPDX-License-Identifier: Apache-2.0 */

/* C interface to panosplat. All objects are opaque handles owned by the
 * caller and released with the matching *_free function. Every fallible call
 * returns a ps_status; on failure ps_last_error() describes the problem.
 * Strings returned through char** out-parameters are allocated by the library
 * and released with ps_string_free. */

#ifndef PANOSPLAT_H
#define PANOSPLAT_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(PS_BUILDING_LIBRARY)
#define PS_API __declspec(dllexport)
#else
#define PS_API __declspec(dllimport)
#endif
#else
#define PS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ps_status {
    PS_OK = 0,
    PS_ERR_INVALID_ARGUMENT = 1,
    PS_ERR_DOMAIN = 2,
    PS_ERR_NOT_FOUND = 3,
    PS_ERR_IO = 4,
    PS_ERR_PARSE = 5,
    PS_ERR_PROTOCOL = 6,
    PS_ERR_TIMEOUT = 7,
    PS_ERR_PIPELINE = 8,
    PS_ERR_INTERNAL = 9
} ps_status;

PS_API const char* ps_version(void);
PS_API const char* ps_status_name(ps_status status);
/* Message of the last failed call on this thread; "" if none. */
PS_API const char* ps_last_error(void);
PS_API void ps_string_free(char* s);

typedef enum ps_log_level { PS_LOG_DEBUG = 0, PS_LOG_INFO = 1, PS_LOG_WARN = 2, PS_LOG_ERROR = 3 } ps_log_level;
typedef void (*ps_log_fn)(ps_log_level level, const char* message, void* user);
/* NULL disables logging. The callback may run on worker threads. */
PS_API void ps_set_log_callback(ps_log_fn fn, void* user);
/* Worker threads used by parallel stages (honours PANOSPLAT_THREADS). */
PS_API int ps_worker_count(void);

/* ---- configuration ---- */

typedef struct ps_config ps_config;

PS_API ps_status ps_config_new(ps_config** out);
PS_API ps_status ps_config_load(const char* path, ps_config** out);
PS_API ps_status ps_config_parse(const char* json, ps_config** out);
/* Dotted key ("plan.tau") set from a JSON literal; bare words are strings. */
PS_API ps_status ps_config_set(ps_config* cfg, const char* key, const char* value);
PS_API ps_status ps_config_set_seed(ps_config* cfg, uint64_t seed);
PS_API uint64_t ps_config_get_seed(const ps_config* cfg);
PS_API ps_status ps_config_to_json(const ps_config* cfg, char** out);
PS_API ps_status ps_config_save(const ps_config* cfg, const char* path);
PS_API void ps_config_free(ps_config* cfg);

/* ---- scenes ---- */

typedef struct ps_scene ps_scene;

PS_API ps_status ps_scene_load(const char* path, ps_scene** out);
PS_API ps_status ps_scene_save(const ps_scene* scene, const char* path);
/* kind: "box_room", "corridor" or "cluttered". */
PS_API ps_status ps_scene_fixture(const char* kind, uint64_t seed, ps_scene** out);
PS_API size_t ps_scene_size(const ps_scene* scene);
PS_API ps_status ps_scene_bounds(const ps_scene* scene, double min_out[3], double max_out[3]);
PS_API void ps_scene_free(ps_scene* scene);

/* ---- pipeline runs ---- */

typedef struct ps_run ps_run;

/* Opens (or creates) a run directory. The config is copied. */
PS_API ps_status ps_run_open(const char* dir, const ps_config* cfg, ps_run** out);
/* Stage calls. summary_out may be NULL; otherwise it receives a JSON object. */
PS_API ps_status ps_run_init(ps_run* run, const char* pano_png, const char* depth_pfm, char** summary_out);
PS_API ps_status ps_run_plan(ps_run* run, char** summary_out);
PS_API ps_status ps_run_render_degraded(ps_run* run, char** summary_out);
PS_API ps_status ps_run_restore(ps_run* run, char** summary_out);
PS_API ps_status ps_run_refine(ps_run* run, char** summary_out);
/* reference_scene may be NULL: views are rendered but not scored. */
PS_API ps_status ps_run_eval(ps_run* run, const char* reference_scene, char** summary_out);
PS_API void ps_run_free(ps_run* run);

/* ---- fixtures and datasets ---- */

/* Writes gt.gsb, pano.png and depth.pfm (rendered at the room origin) to out_dir.
 * cfg may be NULL for defaults. */
PS_API ps_status ps_fixture_write(const char* kind, uint64_t seed, int height, const ps_config* cfg,
                                  const char* out_dir);
/* Generates `count` samples (fixture seeds seed, seed+1, ...) under out_dir as
 * sample_%05d. Skipped samples are reported in the summary, not as errors. */
PS_API ps_status ps_dataset_generate(const char* kind, uint64_t seed, int count, const ps_config* cfg,
                                     const char* out_dir, char** summary_out);
/* *ok_out is 1 when the sample is consistent; problems_out (may be NULL)
 * receives one problem per line. */
PS_API ps_status ps_dataset_verify(const char* sample_dir, int* ok_out, char** problems_out);

#ifdef __cplusplus
}
#endif

#endif /* PANOSPLAT_H */
