#include <stdio.h>

int main(void)
{
    int a[100];
    int n, i, best = 0;
    scanf("%d", &n);
    for (i = 0; i < n; i++)
        scanf("%d", &a[i]);
    for (i = 1; i < n; i++)
        if (a[i] > a[best])
            best = i;
    printf("%d %d\n", a[best], best + 1);
    return 0;
}
