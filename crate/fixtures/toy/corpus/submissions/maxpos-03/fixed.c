#include <stdio.h>

int main(void)
{
    int values[100];
    int n, i, max, where;
    scanf("%d", &n);
    for (i = 0; i < n; i++)
        scanf("%d", &values[i]);
    max = values[0];
    where = 0;
    for (i = 1; i < n; i++) {
        if (values[i] > max) {
            max = values[i];
            where = i;
        }
    }
    printf("%d %d\n", max, where + 1);
    return 0;
}
