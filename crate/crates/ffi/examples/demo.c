#include <stdio.h>
#include "nmmo.h"

int main(void) {
    const double ref[2] = {0.0, 0.0};
    const double pts[3][2] = {{3.0, 1.0}, {2.0, 2.0}, {1.0, 3.0}};
    NmmoFront *front = NULL;
    double hv = 0.0;
    int inserted = 0;

    if (nmmo_front_new(ref, 2, &front) != NMMO_STATUS_OK) {
        fprintf(stderr, "%s\n", nmmo_last_error());
        return 1;
    }
    for (int i = 0; i < 3; i++) {
        nmmo_front_insert(front, pts[i], 2, &inserted);
    }
    nmmo_front_hypervolume(front, &hv);
    nmmo_front_free(front);
    printf("%g\n", hv);
    return hv == 6.0 ? 0 : 2;
}
