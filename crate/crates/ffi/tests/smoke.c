#include <math.h>
#include <stdio.h>

#include "hypercircle.h"

int main(void) {
    HcAngleData *data = NULL;
    if (hc_angle_data_example("lawson-squares", &data) != HC_STATUS_OK) {
        fprintf(stderr, "example: %s\n", hc_last_error());
        return 1;
    }
    HcUniformization *u = NULL;
    if (hc_uniformize(data, 1e-10, 0, &u) != HC_STATUS_OK) {
        fprintf(stderr, "uniformize: %s\n", hc_last_error());
        return 1;
    }
    size_t iterations = 0;
    double grad_norm = 1.0;
    hc_uniformization_stats(u, &iterations, &grad_norm, NULL, NULL);
    double m[4];
    if (hc_uniformization_generator(u, 0, m) != HC_STATUS_OK || fabs(m[0] * m[3] - m[1] * m[2] - 1.0) > 1e-9) {
        return 1;
    }
    if (hc_uniformization_generator(u, 1000, m) != HC_STATUS_OUT_OF_RANGE || hc_last_error() == NULL) {
        return 1;
    }
    hc_uniformization_free(u);
    hc_angle_data_free(data);
    if (grad_norm > 1e-10) {
        return 1;
    }
    printf("ok\n");
    return 0;
}
