package core
type Queue struct {
	items []int
}
func (q *Queue) Push(x int) {
	q.items = append(q.items, x)
}
func (q *Queue) Pop() int {
	x := q.items[0]
	q.items = q.items[1:]
	return x
}
