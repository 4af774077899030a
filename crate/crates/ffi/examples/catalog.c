/* Prints the orbit catalog at c = -2.1 and the index of family (8,1). */
#include <stdio.h>

#include "kepler_cz.h"

int main(void) {
    KczCatalog *cat = NULL;
    if (kcz_catalog_new(-2.1, 3, 11, &cat) != KCZ_STATUS_OK) {
        fprintf(stderr, "catalog: %s\n", kcz_last_error());
        return 1;
    }
    size_t n = kcz_catalog_len(cat);
    for (size_t i = 0; i < n; i++) {
        KczOrbit o;
        kcz_catalog_get(cat, i, &o);
        printf("%d %llu %llu %u %.17g %lld\n", (int)o.kind, (unsigned long long)o.k, (unsigned long long)o.l, o.cover, o.kepler_energy,
               (long long)o.index_doubled);
    }
    kcz_catalog_free(cat);

    int64_t doubled = 0;
    kcz_rs_family(8, 1, &doubled);
    printf("family(8,1) %lld/2\n", (long long)doubled);

    KczStatus st = kcz_catalog_new(-1.4, 1, 5, &cat);
    printf("above critical: %d %s\n", (int)st, kcz_last_error());
    return 0;
}
