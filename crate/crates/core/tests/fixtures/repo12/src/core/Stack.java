class Stack {
    private int[] items = new int[16];
    private int size;
    void push(int x) {
        if (size == items.length) {
            items = java.util.Arrays.copyOf(items, size * 2);
        }
        items[size++] = x;
    }
    int pop() {
        return items[--size];
    }
}
