/* C API smoke test, compiled as C. */
#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "gridmask/gridmask.h"

static int failures = 0;

#define EXPECT(cond)                                                    \
    do {                                                                \
        if (!(cond)) {                                                  \
            fprintf(stderr, "%s:%d: expected %s\n", __FILE__, __LINE__, #cond); \
            ++failures;                                                 \
        }                                                               \
    } while (0)

static const char* case_file(const char* name) {
    static char buf[1024];
    snprintf(buf, sizeof buf, "%s/%s", GRIDMASK_DATA_DIR, name);
    return buf;
}

int main(void) {
    gm_network* net = NULL;
    gm_config cfg;
    gm_rates rates;
    char* s = NULL;
    double f[20];
    int nb = 0, nl = 0;
    int prot[1] = {17};

    EXPECT(gm_network_load("/nonexistent/case.m", &net) == GM_ERR_IO);
    EXPECT(net == NULL);
    EXPECT(strlen(gm_last_error()) > 0);
    EXPECT(gm_network_parse("mpc.bus = [1 3 0 0", &net) == GM_ERR_MALFORMED_FILE);
    EXPECT(gm_network_load(NULL, &net) == GM_ERR_INVALID_ARGUMENT);
    EXPECT(strcmp(gm_status_name(GM_ERR_UNOBSERVABLE), "unobservable") == 0);

    EXPECT(gm_network_load(case_file("case14_dispatch.m"), &net) == GM_OK);
    EXPECT(gm_network_size(net, &nb, &nl) == GM_OK);
    EXPECT(nb == 14 && nl == 20);

    EXPECT(gm_influence_factors(net, f, 5) == GM_ERR_INVALID_ARGUMENT);
    EXPECT(gm_influence_factors(net, f, 20) == GM_OK);
    EXPECT(fabs(f[2] - 53.23) < 0.05 * 53.23);
    EXPECT(isnan(f[13]));

    EXPECT(gm_powerflow_csv(net, &s) == GM_OK);
    EXPECT(s && strncmp(s, "line,from,to", 12) == 0);
    gm_string_free(s);

    gm_config_default(&cfg);
    EXPECT(gm_plan_json(net, &cfg, &s) == GM_OK);
    EXPECT(strstr(s, "\"real_line\": 13") != NULL);
    EXPECT(strstr(s, "\"fake_line\": 17") != NULL);
    gm_string_free(s);

    EXPECT(gm_forge_json(net, &cfg, &s) == GM_OK);
    EXPECT(strstr(s, "\"audit\"") != NULL);
    gm_string_free(s);

    EXPECT(gm_scenario_json(net, &cfg, &s) == GM_OK);
    EXPECT(strstr(s, "\"classification\": \"successful\"") != NULL);
    gm_string_free(s);

    cfg.trials = 5;
    s = NULL;
    EXPECT(gm_monte_carlo(net, &cfg, &rates, &s) == GM_OK);
    EXPECT(rates.trials == 5);
    EXPECT(rates.correct_rate >= 0.0 && rates.correct_rate <= 1.0);
    EXPECT(s != NULL);
    gm_string_free(s);

    cfg.selection = GM_SELECT_FIXED;
    cfg.real_line = 13;
    cfg.fake_line = 99;
    EXPECT(gm_plan_json(net, &cfg, &s) == GM_ERR_INVALID_BRANCH_ID);
    cfg.noise_variance = -1.0;
    EXPECT(gm_detect_json(net, &cfg, &s) == GM_ERR_INVALID_ARGUMENT);

    EXPECT(gm_network_set_protected(net, prot, 1) == GM_OK);
    gm_config_default(&cfg);
    EXPECT(gm_plan_json(net, &cfg, &s) == GM_OK);
    EXPECT(strstr(s, "line 17 protected") != NULL);
    gm_string_free(s);
    prot[0] = 0;
    EXPECT(gm_network_set_protected(net, prot, 1) == GM_ERR_INVALID_BRANCH_ID);

    gm_network_free(net);
    gm_network_free(NULL);

    if (failures) {
        fprintf(stderr, "%d C API check(s) failed\n", failures);
        return 1;
    }
    printf("C API checks passed\n");
    return 0;
}
