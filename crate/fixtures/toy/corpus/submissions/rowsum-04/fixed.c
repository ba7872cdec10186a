#include <stdio.h>

struct Matrix {
    int rows, cols;
    int cell[10][10];
};

int row_sum(const struct Matrix *m, int i)
{
    int j, s = 0;
    for (j = 0; j < m->cols; j++)
        s += m->cell[i][j];
    return s;
}

int main(void)
{
    static struct Matrix m;
    int i, j, total = 0;
    scanf("%d %d", &m.rows, &m.cols);
    for (i = 0; i < m.rows; i++)
        for (j = 0; j < m.cols; j++)
            scanf("%d", &m.cell[i][j]);
    for (i = 0; i < m.rows; i++) {
        int s = row_sum(&m, i);
        printf("%d\n", s);
        total += s;
    }
    printf("total: %d\n", total);
    return 0;
}
