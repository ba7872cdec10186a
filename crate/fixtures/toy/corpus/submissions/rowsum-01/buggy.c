#include <stdio.h>

int m[10][10];

int main(void)
{
    int r, c, i, j, sum = 0, total = 0;
    scanf("%d %d", &r, &c);
    for (i = 0; i < r; i++)
        for (j = 0; j < c; j++)
            scanf("%d", &m[i][j]);
    for (i = 0; i < r; i++) {
        for (j = 0; j < c; j++)
            sum += m[i][j];
        printf("%d\n", sum);
        total += sum;
    }
    printf("total: %d\n", total);
    return 0;
}
