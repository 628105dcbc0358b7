#ifndef GRIDMASK_GRIDMASK_H
#define GRIDMASK_GRIDMASK_H

#include <stddef.h>
#include <stdint.h>

#if defined(GRIDMASK_BUILDING_LIBRARY)
#define GM_API __attribute__((visibility("default")))
#else
#define GM_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes. Values 1..18 mirror the library's error kinds. */
typedef enum gm_status {
    GM_OK = 0,
    GM_ERR_INVALID_ARGUMENT = 1,
    GM_ERR_MALFORMED_FILE = 2,
    GM_ERR_DISCONNECTED_GRAPH = 3,
    GM_ERR_NO_SLACK_BUS = 4,
    GM_ERR_INVALID_BRANCH_ID = 5,
    GM_ERR_INVALID_BUS_ID = 6,
    GM_ERR_NON_CONVERGENCE = 7,
    GM_ERR_SINGULAR_MATRIX = 8,
    GM_ERR_ISLANDING_LINE = 9,
    GM_ERR_NO_CANDIDATE_LEFT = 10,
    GM_ERR_NO_PATH = 11,
    GM_ERR_EMPTY_REGION = 12,
    GM_ERR_INCONSISTENT_PLAN = 13,
    GM_ERR_INFEASIBLE = 14,
    GM_ERR_NUMERICAL_FAILURE = 15,
    GM_ERR_UNOBSERVABLE = 16,
    GM_ERR_DESCRIPTOR_MISMATCH = 17,
    GM_ERR_IO = 18,
    GM_ERR_INTERNAL = 99
} gm_status;

typedef enum gm_mode { GM_MODE_PAPER = 0, GM_MODE_PHYSICAL = 1 } gm_mode;
typedef enum gm_selection { GM_SELECT_PROPOSED = 0, GM_SELECT_RANDOM = 1, GM_SELECT_FIXED = 2 } gm_selection;

typedef struct gm_network gm_network;

typedef struct gm_config {
    double tau;
    double noise_variance;
    double threshold;
    gm_mode mode;
    gm_selection selection;
    int real_line;  /* 1-based, used with GM_SELECT_FIXED */
    int fake_line;  /* 1-based, used with GM_SELECT_FIXED */
    int trials;
    uint64_t seed;
    int add_noise;  /* single runs: draw noise from seed when nonzero */
    int threads;    /* 0 = all cores */
    double noise_draw_variance; /* 0 = draw noise with noise_variance */
} gm_config;

typedef struct gm_rates {
    int trials;
    double correct_rate;
    double success_rate;
    double false_alarm_rate;
    double incorrect_rate;
    double mean_fake_statistic; /* NaN when no trial was correct */
} gm_rates;

GM_API void gm_config_default(gm_config* cfg);

/* Message of the last failing call on this thread; never NULL. */
GM_API const char* gm_last_error(void);
GM_API const char* gm_status_name(gm_status s);

/* Strings returned through char** are owned by the caller. */
GM_API void gm_string_free(char* s);

GM_API gm_status gm_network_load(const char* path, gm_network** out);
GM_API gm_status gm_network_parse(const char* text, gm_network** out);
GM_API void gm_network_free(gm_network* net);
GM_API gm_status gm_network_size(const gm_network* net, int* buses, int* lines);
GM_API gm_status gm_network_set_protected(gm_network* net, const int* lines, int count);
GM_API gm_status gm_network_json(const gm_network* net, char** json);

GM_API gm_status gm_powerflow_csv(const gm_network* net, char** csv);
/* out receives one value per line (NaN where undefined); len must be >= line count. */
GM_API gm_status gm_influence_factors(const gm_network* net, double* out, int len);

GM_API gm_status gm_plan_json(const gm_network* net, const gm_config* cfg, char** json);
GM_API gm_status gm_forge_json(const gm_network* net, const gm_config* cfg, char** json);
GM_API gm_status gm_detect_json(const gm_network* net, const gm_config* cfg, char** json);
GM_API gm_status gm_scenario_json(const gm_network* net, const gm_config* cfg, char** json);

/* csv may be NULL; otherwise receives one row per trial. */
GM_API gm_status gm_monte_carlo(const gm_network* net, const gm_config* cfg, gm_rates* rates, char** csv);
GM_API gm_status gm_clean_false_alarm(const gm_network* net, const gm_config* cfg, gm_rates* rates);

#ifdef __cplusplus
}
#endif

#endif
