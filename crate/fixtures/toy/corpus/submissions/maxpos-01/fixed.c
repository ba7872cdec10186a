#include <stdio.h>

int main(void)
{
    int n, i, x;
    int max = 0, pos = 0;
    scanf("%d", &n);
    for (i = 1; i <= n; i++) {
        scanf("%d", &x);
        if (i == 1 || x > max) {
            max = x;
            pos = i;
        }
    }
    printf("%d %d\n", max, pos);
    return 0;
}
