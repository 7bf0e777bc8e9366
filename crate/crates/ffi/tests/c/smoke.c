#include <stdio.h>
#include <string.h>
#include "copg.h"

#define CHECK(x) do { if (!(x)) { fprintf(stderr, "failed: %s (%s)\n", #x, copg_last_error() ? copg_last_error() : ""); return 1; } } while (0)

int main(void) {
    const uint32_t src[] = {0, 1, 2};
    const uint32_t dst[] = {1, 2, 0};
    CopgGraph *g = NULL;
    CHECK(copg_graph_from_edges(3, src, dst, 3, &g) == COPG_STATUS_OK);
    CHECK(copg_graph_num_nodes(g) == 3);
    CHECK(copg_graph_num_edges(g) == 3);

    CopgWalks *w = NULL;
    CHECK(copg_walks_compute(g, 200, 2, 2, 7, &w) == COPG_STATUS_OK);
    uint32_t ids[4];
    double weights[4];
    size_t len = 0;
    CHECK(copg_walks_neighbors(w, 0, ids, weights, 4, &len) == COPG_STATUS_OK);
    double total = 0.0;
    for (size_t i = 0; i < len; i++) total += weights[i];
    CHECK(len == 2 && total > 0.999999 && total < 1.000001);

    const double scores[] = {0.9, 0.1, 0.8, 0.3};
    const double labels[] = {1, 0, 1, 0};
    double auc = 0.0;
    CHECK(copg_auc(scores, labels, 4, &auc) == COPG_STATUS_OK && auc == 1.0);

    CHECK(copg_graph_from_edges(2, src, dst, 3, NULL) == COPG_STATUS_NULL_POINTER);
    CHECK(copg_last_error() != NULL);

    copg_walks_free(w);
    copg_graph_free(g);
    printf("ok %s\n", copg_version());
    return 0;
}
