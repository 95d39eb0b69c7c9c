"""Max segment tree over integer keys with a per-leaf weight for capacity-aware queries."""

from __future__ import annotations

NEG = -(1 << 62)
INF = 1 << 62


class MaxSegmentTree:
    """Fixed-capacity array of ``(key, weight)`` leaves.

    ``top()`` reads the maximum key in O(1); ``set`` is O(log n).
    ``best_fitting(room, floor)`` finds the largest key above ``floor``
    among leaves whose weight is at most ``room``, pruning subtrees by
    their max key and min weight.
    """

    __slots__ = ("size", "key", "minw")

    def __init__(self, capacity: int):
        size = 1
        while size < capacity:
            size <<= 1
        self.size = size
        self.key = [NEG] * (2 * size)
        self.minw = [INF] * (2 * size)

    @classmethod
    def from_leaves(cls, capacity: int, leaves: list[tuple[int, int]]) -> MaxSegmentTree:
        t = cls(max(capacity, len(leaves)))
        key, minw, size = t.key, t.minw, t.size
        for i, (k, w) in enumerate(leaves):
            key[size + i] = k
            minw[size + i] = w
        for i in range(size - 1, 0, -1):
            l, r = key[2 * i], key[2 * i + 1]
            key[i] = l if l >= r else r
            l, r = minw[2 * i], minw[2 * i + 1]
            minw[i] = l if l <= r else r
        return t

    def leaves(self) -> list[tuple[int, int]]:
        s = self.size
        return list(zip(self.key[s:], self.minw[s:]))

    def set(self, slot: int, k: int, w: int) -> None:
        key, minw = self.key, self.minw
        i = slot + self.size
        key[i] = k
        minw[i] = w
        i >>= 1
        while i:
            a, b = key[2 * i], key[2 * i + 1]
            nk = a if a >= b else b
            a, b = minw[2 * i], minw[2 * i + 1]
            nw = a if a <= b else b
            if key[i] == nk and minw[i] == nw:
                break
            key[i] = nk
            minw[i] = nw
            i >>= 1

    def clear(self, slot: int) -> None:
        self.set(slot, NEG, INF)

    def get(self, slot: int) -> int:
        return self.key[slot + self.size]

    def top(self) -> int:
        return self.key[1]

    def best_fitting(self, room: int, floor: int = NEG) -> int:
        """Largest key > ``floor`` whose leaf weight <= ``room``; ``NEG`` if none."""
        key, minw, size = self.key, self.minw, self.size
        best = floor
        stack = [1]
        while stack:
            i = stack.pop()
            if key[i] <= best or minw[i] > room:
                continue
            if i >= size:
                best = key[i]
                continue
            l = 2 * i
            if key[l] >= key[l + 1]:
                stack.append(l + 1)
                stack.append(l)
            else:
                stack.append(l)
                stack.append(l + 1)
        return best if best > floor else NEG
