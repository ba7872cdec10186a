#include <stdio.h>

int grid[10][11];

int main(void)
{
    int rows, cols, i, j, total = 0;
    scanf("%d %d", &rows, &cols);
    for (i = 0; i < rows; i++) {
        int s = 0;
        for (j = 0; j < cols; j++) {
            scanf("%d", &grid[i][j]);
            s += grid[i][j];
        }
        printf("%d\n", s);
        total += s;
    }
    printf("total: %d\n", total);
    return 0;
}
