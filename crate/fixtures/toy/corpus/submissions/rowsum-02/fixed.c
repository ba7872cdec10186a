#include <stdio.h>

int main(void)
{
    int r, c, i, j, x;
    int row;
    int total = 0;
    scanf("%d %d", &r, &c);
    for (i = 0; i < r; i++) {
        row = 0;
        for (j = 0; j < c; j++) {
            scanf("%d", &x);
            row += x;
        }
        printf("%d\n", row);
        total += row;
    }
    printf("total: %d\n", total);
    return 0;
}
