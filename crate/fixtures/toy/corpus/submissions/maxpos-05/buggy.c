#include <stdio.h>

int find_max(const int *a, int n, int *pos)
{
    int i, max = a[0];
    *pos = 1;
    for (i = 1; i < n; i++) {
        if (a[i] > max) {
            *pos = i + 1;
        }
    }
    return max;
}

int main(void)
{
    int a[100], n, i, pos;
    scanf("%d", &n);
    for (i = 0; i < n; i++)
        scanf("%d", &a[i]);
    int max = find_max(a, n, &pos);
    printf("%d %d\n", max, pos);
    return 0;
}
