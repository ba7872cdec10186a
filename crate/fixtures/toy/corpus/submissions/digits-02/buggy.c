#include <stdio.h>

int main()
{
    int number;
    int total = 0;
    scanf("%d", &number);
    while (number != 0) {
        total = number % 10;
        number = number / 10;
    }
    printf("%d\n", total);
    return 0;
}
