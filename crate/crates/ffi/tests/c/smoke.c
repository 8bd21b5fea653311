#include <math.h>
#include <stdio.h>
#include <string.h>

#include "rmstop.h"

#define CHECK(cond)                                                    \
    do {                                                               \
        if (!(cond)) {                                                 \
            fprintf(stderr, "%s:%d: %s (%s)\n", __FILE__, __LINE__,   \
                    #cond, rm_last_error());                           \
            return 1;                                                  \
        }                                                              \
    } while (0)

int main(void) {
    uint64_t n = 0;
    CHECK(rm_all_failure_threshold(0.05, 0.01, &n) == RM_STATUS_OK);
    CHECK(n == 299);
    CHECK(rm_all_failure_threshold(0.05, 1.5, &n) == RM_STATUS_DOMAIN);
    CHECK(strlen(rm_last_error()) > 0);
    CHECK(rm_all_failure_threshold(0.05, 0.01, NULL) == RM_STATUS_NULL_POINTER);

    double lo, hi;
    CHECK(rm_jeffreys_beta_interval(0, 125, 0.05, &lo, &hi) == RM_STATUS_OK);
    CHECK(hi - lo <= 0.02 && lo >= 0.0);

    RmScorecardConfig cfg = {0.005, 0.02, INFINITY, 30, 5000, 0.05};
    RmTracker *t = NULL;
    CHECK(rm_tracker_new(&cfg, &t) == RM_STATUS_OK);
    for (uint64_t k = 1; k <= 200; k++) {
        double m = 0.5 / (double)(k + 1);
        double r = k == 1 ? INFINITY : 0.0;
        CHECK(rm_jeffreys_beta_interval(0, k, 0.05, &lo, &hi) == RM_STATUS_OK);
        RmFiring f;
        CHECK(rm_tracker_observe(t, m, m, hi - lo, r, &f) == RM_STATUS_OK);
        CHECK(!f.rm || f.two_cond);
    }
    RmStopReport rep;
    CHECK(rm_tracker_report(t, RM_RULE_RM, &rep) == RM_STATUS_OK);
    CHECK(rep.stopped && rep.tau == 125);
    rm_tracker_free(t);

    RmSprt *s = NULL;
    CHECK(rm_sprt_new_bernoulli(0.01, 0.005, 0.05, 0.05, &s) == RM_STATUS_OK);
    bool decided = false;
    uint64_t steps = 0;
    while (!decided) {
        CHECK(rm_sprt_update(s, 0, &decided) == RM_STATUS_OK);
        steps++;
    }
    CHECK(steps == 585);
    rm_sprt_free(s);

    RmCusumSpec spec = {RM_CUSUM_KIND_NORMAL, 0.025, 0.0, 0.0};
    RmCusum *c = NULL;
    CHECK(rm_cusum_new(&spec, 1.0, &c) == RM_STATUS_OK);
    bool alarm = false;
    for (int k = 0; k < 11 && !alarm; k++) {
        CHECK(rm_cusum_update(c, 0.125, &alarm) == RM_STATUS_OK);
    }
    CHECK(alarm);
    rm_cusum_free(c);

    printf("rmstop %s ok\n", rm_version());
    return 0;
}
