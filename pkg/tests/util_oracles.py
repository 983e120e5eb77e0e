"""Independent brute-force oracles used only by the tests.

These deliberately avoid the library's own algorithms: connectivity is
checked by flood fill over explicit subsets, and travel weights are
accumulated path by path.
"""

from itertools import combinations


def _l1_neighbors(cell):
    out = []
    for axis in range(len(cell)):
        for sign in (1, -1):
            nb = list(cell)
            nb[axis] += sign
            out.append(tuple(nb))
    return out


def flood_fill_connected(cells):
    cells = set(cells)
    start = next(iter(cells))
    seen = {start}
    frontier = [start]
    while frontier:
        cur = frontier.pop()
        for nb in _l1_neighbors(cur):
            if nb in cells and nb not in seen:
                seen.add(nb)
                frontier.append(nb)
    return seen == cells


def brute_force_fixed_animal_count(d, size):
    """Count translate-classes of connected site sets of the given size by
    exhausting subsets whose lexicographic minimum is the origin."""
    origin = (0,) * d
    if size == 1:
        return 1
    # every cell of such a set lies in the l1 ball of radius size-1 and is
    # lexicographically >= the origin
    radius = size - 1
    ball = []

    def grow(prefix, remaining):
        if not remaining:
            ball.append(tuple(prefix))
            return
        for v in range(-radius, radius + 1):
            if sum(abs(c) for c in prefix) + abs(v) <= radius:
                grow(prefix + [v], remaining - 1)

    grow([], d)
    candidates = [c for c in ball if c > origin]
    count = 0
    for extra in combinations(candidates, size - 1):
        cells = set(extra) | {origin}
        if flood_fill_connected(cells):
            count += 1
    return count
