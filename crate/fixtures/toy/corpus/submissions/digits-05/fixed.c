#include <stdio.h>

void add_digits(int n, int *sum)
{
    while (n > 0) {
        *sum += n % 10;
        n /= 10;
    }
}

int main(void)
{
    int n, sum = 0;
    scanf("%d", &n);
    add_digits(n, &sum);
    printf("%d\n", sum);
    return 0;
}
