char line[256];

int readline(char *buf, int max) {
    int c, n = 0;
    while ((c = getchar()) != -1 && c != '\n')
        if (n < max - 1)
            buf[n++] = c;
    buf[n] = 0;
    if (c == -1 && n == 0)
        return -1;
    return n;
}

void reverse(char *s, int n) {
    char *e = s + n - 1;
    char t;
    while (s < e) {
        t = *s;
        *s++ = *e;
        *e-- = t;
    }
}

int main(void) {
    int n, lines = 0;
    while ((n = readline(line, sizeof line)) >= 0) {
        reverse(line, n);
        for (n = 0; line[n]; n++)
            putchar(line[n]);
        putchar('\n');
        lines++;
    }
    return lines;
}
