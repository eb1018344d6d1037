#ifndef AIRBRAILLE_H
#define AIRBRAILLE_H

/*
 * C interface to the airbraille core: Braille encoding, stimulus schedules,
 * phased-array field simulation, study analysis and the session service.
 *
 * Every call returns an ab_status. On failure ab_last_error() gives a message
 * for the calling thread. Strings returned through char** are owned by the
 * caller and released with ab_free_string. Handles are not thread-safe
 * except ab_service, which serializes internally.
 */

#include <stddef.h>

#if defined(_WIN32)
#  if defined(AIRBRAILLE_BUILDING)
#    define AB_API __declspec(dllexport)
#  else
#    define AB_API __declspec(dllimport)
#  endif
#else
#  define AB_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ab_status {
    AB_OK = 0,
    AB_INVALID_ARGUMENT = 1,
    AB_UNKNOWN_CHARACTER = 2,
    AB_EMPTY_PATTERN = 3,
    AB_UNKNOWN_METHOD = 4,
    AB_INVALID_CELL = 5,
    AB_OUT_OF_RANGE = 6,
    AB_TOO_MANY_POINTS = 7,
    AB_PEAK_NOT_FOUND = 8,
    AB_UNDECODABLE_RESPONSE = 9,
    AB_EMPTY_INPUT = 10,
    AB_DEGENERATE_INPUT = 11,
    AB_OUT_OF_RANGE_ITEM = 12,
    AB_INVALID_CONFIG = 13,
    AB_UNKNOWN_SESSION = 14,
    AB_UNKNOWN_TRIAL = 15,
    AB_DUPLICATE_RESPONSE = 16,
    AB_TRIAL_NOT_PENDING = 17,
    AB_SESSION_INCOMPLETE = 18,
    AB_TRUTH_WITHHELD = 19,
    AB_IO = 20,
    AB_INTERNAL = 21
} ab_status;

typedef struct ab_config ab_config;
typedef struct ab_schedule ab_schedule;
typedef struct ab_simulation ab_simulation;
typedef struct ab_service ab_service;

AB_API const char* ab_version(void);
AB_API const char* ab_status_name(ab_status status);
/* 1 when the status is caused by bad input rather than a runtime failure. */
AB_API int ab_is_validation_error(ab_status status);
AB_API const char* ab_last_error(void);
AB_API void ab_free_string(char* s);

/* Run configuration: defaults overlaid with a JSON document (NULL or "" for
 * none). Unknown keys fail with AB_INVALID_CONFIG. */
AB_API ab_status ab_config_create(const char* overrides_json, ab_config** out);
AB_API ab_status ab_config_to_json(const ab_config* cfg, char** out);
AB_API void ab_config_destroy(ab_config* cfg);

/* "17" -> "1:{1} 7:{1,2,4,5}" */
AB_API ab_status ab_encode_text(const char* text, char** out);

AB_API ab_status ab_schedule_create(const ab_config* cfg, char character, const char* method,
                                    ab_schedule** out);
AB_API ab_status ab_schedule_from_json(const char* json, ab_schedule** out);
AB_API ab_status ab_schedule_to_json(const ab_schedule* schedule, char** out);
/* Active points at time t as a JSON array. */
AB_API ab_status ab_schedule_sample(const ab_schedule* schedule, double t, char** out);
/* *is_open is set to 1 for schedules without a total duration. */
AB_API ab_status ab_schedule_total(const ab_schedule* schedule, double* total_s, int* is_open);
AB_API void ab_schedule_destroy(ab_schedule* schedule);

/* Control frames over [t0, t1) as JSON lines. */
AB_API ab_status ab_frames_expand(const ab_config* cfg, const ab_schedule* schedule, double t0,
                                  double t1, char** out_jsonl);

/* Drives the array with the frame at time t and samples the field on a
 * plane around the active points. A silent instant still yields a handle
 * (zero field); its report then carries the error. */
AB_API ab_status ab_simulate(const ab_config* cfg, const ab_schedule* schedule, double t,
                             ab_simulation** out);
AB_API ab_status ab_simulation_field_csv(const ab_simulation* sim, char** out);
/* Writes the report and returns the status of the focal metrics. */
AB_API ab_status ab_simulation_report(const ab_simulation* sim, char** out);
AB_API void ab_simulation_destroy(ab_simulation* sim);

/* Runs the analysis suite over one or more session logs. Either output may
 * be NULL. */
AB_API ab_status ab_analyze_logs(const char* const* paths, size_t count, char** report_json,
                                 char** confusion_csv);
AB_API ab_status ab_analyze_text(const char* log_text, char** report_json, char** confusion_csv);

/* Session service; storage_dir NULL or "" keeps sessions in memory. */
AB_API ab_status ab_service_create(const ab_config* cfg, const char* storage_dir, ab_service** out);
/* Routes one /v1 request. Errors are reported through http_status and the
 * body, so the return value is AB_OK unless arguments are missing. */
AB_API ab_status ab_service_handle(ab_service* service, const char* method, const char* target,
                                   const char* body, int* http_status, char** response_body);
AB_API void ab_service_destroy(ab_service* service);

#ifdef __cplusplus
}
#endif

#endif
