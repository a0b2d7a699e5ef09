char composite[200];

int main(void) {
    int i, j, n = 0;
    for (i = 2; i < 200; i++) {
        if (composite[i])
            continue;
        n++;
        print_int(i);
        if (n % 10 == 0)
            putchar('\n');
        else
            putchar(' ');
        for (j = i * i; j < 200; j += i)
            composite[j] = 1;
    }
    putchar('\n');
    return n;
}
