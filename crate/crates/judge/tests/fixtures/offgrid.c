/* Places the first factory one column past the grid. */
#include <stdio.h>

int main(void) {
    int w, h, k;
    if (scanf("%d %d %d", &w, &h, &k) != 3)
        return 1;
    printf("%d 0\n", w);
    for (int i = 1; i < k; i++)
        printf("0 0\n");
    return 0;
}
