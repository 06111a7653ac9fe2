#include <stdio.h>

/* Prints one line per probe: the path and whether it was accessible. */
static void probe(const char *path, const char *mode) {
    FILE *f = fopen(path, mode);
    printf("%s %s %s\n", mode, path, f ? "open" : "denied");
    if (f)
        fclose(f);
}

int main(void) {
    probe("/etc/passwd", "r");
    probe("/etc/hostname", "r");
    probe("/root/.bashrc", "r");
    probe("/tmp/judge-escape-probe", "w");
    probe("inside.txt", "w");
    return 0;
}
