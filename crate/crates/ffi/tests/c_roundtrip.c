#include <stdio.h>
#include <string.h>
#include "unistoq.h"

#define CHECK(expr)                                                        \
    do {                                                                   \
        UnistoqStatus s_ = (expr);                                         \
        if (s_ != UNISTOQ_STATUS_OK) {                                     \
            char *msg = unistoq_last_error();                              \
            fprintf(stderr, "%s -> %d: %s\n", #expr, s_, msg ? msg : "");  \
            unistoq_string_free(msg);                                      \
            return 1;                                                      \
        }                                                                  \
    } while (0)

int main(void) {
    const char *doc =
        "{\"n\":2,\"times\":[0,1],"
        "\"gamma\":{\"0\":[[1,0],[0,1]],\"1\":[[0.75,0.5],[0.25,0.5]]},"
        "\"p0\":[0.5,0.5]}";
    UnistoqSystem *sys = NULL;
    CHECK(unistoq_system_from_json(doc, &sys));

    double p[2];
    CHECK(unistoq_system_evolve(sys, 1.0, p, 2));
    if (p[0] != 0.625 || p[1] != 0.375) {
        fprintf(stderr, "evolve gave %g %g\n", p[0], p[1]);
        return 1;
    }

    UnistoqDilated *d = NULL;
    CHECK(unistoq_system_dilate(sys, &d));
    size_t dim = 0;
    double residual = 1.0;
    CHECK(unistoq_dilated_total_dim(d, &dim));
    CHECK(unistoq_dilated_marginalization_residual(d, &residual));
    if (dim != 8 || residual > 1e-10) {
        fprintf(stderr, "dim %zu residual %g\n", dim, residual);
        return 1;
    }

    if (unistoq_system_evolve(sys, 0.5, p, 2) != UNISTOQ_STATUS_UNKNOWN_TIME) {
        return 1;
    }
    char *msg = unistoq_last_error();
    if (msg == NULL || strstr(msg, "0.5") == NULL) {
        return 1;
    }
    unistoq_string_free(msg);

    unistoq_dilated_free(d);
    unistoq_system_free(sys);
    printf("ok %s\n", unistoq_version());
    return 0;
}
