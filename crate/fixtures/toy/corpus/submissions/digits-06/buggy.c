#include <stdio.h>

int main(void)
{
    int n, sum = 0;
    scanf("%d", &n);
    if (n == 0) {
        printf("1\n");
        return 0;
    }
    while (n > 0) {
        sum = sum + n % 10;
        n = n / 10;
    }
    printf("%d\n", sum);
    return 0;
}
