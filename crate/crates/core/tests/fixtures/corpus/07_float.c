double sqrt_newton(double x) {
    double g = x / 2;
    int i;
    for (i = 0; i < 30; i++)
        g = (g + x / g) / 2;
    return g;
}

int main(void) {
    float f = 0.1f;
    double sum = 0;
    int i;
    for (i = 0; i < 1000; i++)
        sum += f;
    print_int(sum * 1000);
    putchar(' ');
    print_int(sqrt_newton(2.0) * 1000000);
    putchar(' ');
    print_int(-7.9);
    putchar(' ');
    print_int((float)3 / 2 * 100);
    putchar('\n');
    return 0;
}
