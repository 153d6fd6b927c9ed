#include <stdio.h>
#include <string.h>
#include "nscascade.h"

int main(void) {
    NscPolicy *p = NULL;
    if (nsc_policy_new("{\"name\": \"cascade_swucb\", \"tau\": 20}", 5, 2, 100, 1, &p) != NSC_STATUS_OK) {
        fprintf(stderr, "%s\n", nsc_last_error());
        return 1;
    }
    uint32_t items[2];
    for (uint64_t t = 1; t <= 50; t++) {
        if (nsc_policy_select(p, t, items, 2) != NSC_STATUS_OK) return 2;
        if (nsc_policy_update(p, t, items, 2, 3) != NSC_STATUS_OK) return 3;
    }
    nsc_policy_free(p);

    double lb = 0.0;
    if (nsc_regret_lower_bound(2, 1, 0.25, 0.5, 10000, &lb) != NSC_STATUS_OK) return 4;
    if (nsc_regret_lower_bound(2, 1, 0.75, 0.5, 10000, &lb) != NSC_STATUS_BOUND_PRECONDITION) return 5;
    if (strlen(nsc_last_error()) == 0) return 6;
    printf("%.1f %llu\n", lb, (unsigned long long)nsc_tau_for_horizon(10000, -1));
    return 0;
}
