#include <stdio.h>

int main(void)
{
    int a[10][10];
    int r, c, i, j, total = 0;
    scanf("%d%d", &r, &c);
    for (i = 0; i < r; i++) {
        for (j = 0; j < c; j++) {
            scanf("%d", &a[i][j]);
        }
    }
    for (i = 0; i < r; i++) {
        int sum = 0;
        for (j = 0; j < c; j++) {
            sum += a[i][j];
        }
        printf("%d\n", sum);
        total += sum;
    }
    printf("total: %d\n", total);
    return 0;
}
