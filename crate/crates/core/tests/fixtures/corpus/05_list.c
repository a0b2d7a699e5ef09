struct cell { int value; struct cell *next; };

struct cell *push(struct cell *list, int v) {
    struct cell *c = malloc(sizeof (struct cell));
    c->value = v;
    c->next = list;
    return c;
}

struct cell *reverse(struct cell *list) {
    struct cell *out = 0, *next;
    while (list) {
        next = list->next;
        list->next = out;
        out = list;
        list = next;
    }
    return out;
}

int main(void) {
    struct cell *l = 0, *p;
    int i, sum = 0;
    for (i = 1; i <= 10; i++)
        l = push(l, i * 3);
    l = reverse(l);
    for (p = l; p; p = p->next) {
        sum += p->value;
        print_int(p->value);
        putchar(' ');
    }
    putchar('\n');
    print_int(sum);
    putchar('\n');
    return 0;
}
