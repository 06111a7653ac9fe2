#include <stdio.h>
#include <stdlib.h>

/* Writes exactly JUDGE_COUNT bytes. */
int main(void) {
    const char *count = getenv("JUDGE_COUNT");
    long n = count ? atol(count) : 0;
    for (long i = 0; i < n; i++)
        putchar('1');
    return 0;
}
