#include <stdio.h>

int judge_fixture_value(void);

int main(void) {
    printf("%d\n", judge_fixture_value());
    return 0;
}
