#include <stdio.h>

int main(void)
{
    int n;
    int s = 0;
    scanf("%d", &n);
    for (; n > 0; n /= 10)
        s += n % 10;
    printf("%d\n", s);
    return 0;
}
