#include <stdio.h>

struct Item {
    int value;
    int index;
};

int main(void)
{
    struct Item best;
    int n, i, x;
    scanf("%d", &n);
    scanf("%d", &x);
    best.value = x;
    best.index = 0;
    for (i = 1; i < n; i++) {
        scanf("%d", &x);
        if (x > best.value) {
            best.value = x;
            best.index = i;
        }
    }
    printf("%d %d\n", best.value, best.index);
    return 0;
}
