#include <stdio.h>
#include <string.h>

#include "persuasion.h"

static int fail(const char *what) {
    fprintf(stderr, "%s: %s\n", what, pm_last_error_message());
    return 1;
}

int main(void) {
    PmMeasure *mu = NULL;
    if (pm_measure_from_json("[[\"1/3\",\"1/7\"],[\"1/2\",\"2/7\"],[\"3/4\",\"4/7\"]]", &mu) != PM_STATUS_OK)
        return fail("from_json");
    char *mass = NULL;
    if (pm_greedy_mass(mu, "2/3", &mass) != PM_STATUS_OK)
        return fail("greedy_mass");
    printf("greedy %s\n", mass);
    pm_string_free(mass);
    pm_measure_free(mu);

    if (pm_measure_from_json("not json", &mu) != PM_STATUS_PARSE)
        return 1;
    printf("error %s\n", pm_last_error_message());
    return 0;
}
