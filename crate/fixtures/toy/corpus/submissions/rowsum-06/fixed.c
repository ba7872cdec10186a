#include <stdio.h>

int sum_row(int *row, int n)
{
    int s = 0;
    for (int k = 0; k < n; k++)
        s += row[k];
    return s;
}

int main(void)
{
    int m[10][10];
    int r, c, total = 0;
    scanf("%d %d", &r, &c);
    for (int i = 0; i < r; i++)
        for (int j = 0; j < c; j++)
            scanf("%d", &m[i][j]);
    for (int i = 0; i < r; i++) {
        int s = sum_row(m[i], c);
        printf("%d\n", s);
        total += s;
    }
    printf("total: %d\n", total);
    return 0;
}
