#include <stdio.h>

int main(void)
{
    int n, i, x, max = 0, pos = 1;
    scanf("%d", &n);
    for (i = 1; i <= n; i++) {
        scanf("%d", &x);
        if (x >= max) {
            max = x;
            pos = i;
        }
    }
    printf("%d %d\n", max, pos);
    return 0;
}
