#include <math.h>
#include <stdio.h>
#include "bergman_lab.h"

#define CHECK(cond) do { if (!(cond)) { fprintf(stderr, "failed: %s\n", #cond); return 1; } } while (0)

int main(void) {
    BlConfig *cfg = NULL;
    BlEngine *eng = NULL;
    CHECK(bl_config_new("domain = \"ball\"\ndim = 2\n", &cfg) == BL_OK);
    CHECK(bl_engine_new(cfg, &eng) == BL_OK);
    CHECK(bl_engine_dim(eng) == 2);

    /* ball of C^2: B(z,z) = 2 / (pi^2 (1 - |z|^2)^3) */
    double z[4] = {0.3, 0.1, -0.2, 0.4};
    double b[2];
    CHECK(bl_kernel(eng, z, z, b) == BL_OK);
    double s = 1.0 - (0.09 + 0.01 + 0.04 + 0.16);
    double want = 2.0 / (M_PI * M_PI * s * s * s);
    CHECK(fabs(b[0] - want) < 1e-12 * want && b[1] == 0.0);

    double g[8], det;
    CHECK(bl_metric(eng, z, g, &det) == BL_OK);
    CHECK(fabs(det - 9.0 / (s * s * s)) < 1e-9 * det);

    double far[4] = {0.9, 0.0, 0.9, 0.0};
    CHECK(bl_kernel(eng, far, z, b) == 3);
    char msg[128];
    CHECK(bl_last_error(msg, sizeof msg) > 0);
    printf("last error: %s\n", msg);

    bl_engine_free(eng);
    bl_config_free(cfg);
    return 0;
}
