"""Geometry of Z^d: norms, boxes, neighbor iteration, coarse-graining
indices, rotated-block rasterization and lattice-animal enumeration."""

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .errors import CapacityError, ParameterError

# Enumeration caps are configuration, not constants: animal counts explode
# combinatorially, so callers may raise them explicitly.
DEFAULT_ANIMAL_CAPS = {2: 8, 3: 5}


def as_point(p):
    """Coerce to a tuple of Python ints."""
    return tuple(int(c) for c in p)


def neighbors(p):
    """The 2d lattice neighbors of p, in axis order (+x1, -x1, +x2, -x2, ...)."""
    p = as_point(p)
    out = []
    for axis in range(len(p)):
        for sign in (1, -1):
            q = list(p)
            q[axis] += sign
            out.append(tuple(q))
    return out


def norms(p):
    """(l1, l2, linf) norms of the coordinate vector."""
    a = np.asarray(p, dtype=np.int64)
    ab = np.abs(a)
    return int(ab.sum()), float(np.sqrt((a.astype(float) ** 2).sum())), int(ab.max(initial=0))


@dataclass(frozen=True)
class BoxRegion:
    """Axis-aligned box of lattice sites: lo inclusive, hi exclusive per axis."""

    lo: tuple
    hi: tuple

    def __post_init__(self):
        object.__setattr__(self, "lo", as_point(self.lo))
        object.__setattr__(self, "hi", as_point(self.hi))
        if len(self.lo) != len(self.hi):
            raise ParameterError("lo and hi must have the same dimension")
        if not all(l < h for l, h in zip(self.lo, self.hi)):
            raise ParameterError("BoxRegion requires lo < hi componentwise")

    @property
    def dimension(self):
        return len(self.lo)

    @property
    def shape(self):
        return tuple(h - l for l, h in zip(self.lo, self.hi))

    @property
    def site_count(self):
        return int(np.prod(self.shape))

    def contains(self, p):
        return all(l <= c < h for c, l, h in zip(p, self.lo, self.hi))

    def sites(self):
        """All sites as an (n, d) int64 array, row-major order."""
        axes = [np.arange(l, h) for l, h in zip(self.lo, self.hi)]
        grid = np.meshgrid(*axes, indexing="ij")
        return np.stack([g.ravel() for g in grid], axis=1).astype(np.int64)

    @staticmethod
    def centered(radius, d):
        """The box [-radius, radius]^d (inclusive on both ends)."""
        r = int(radius)
        return BoxRegion((-r,) * d, (r + 1,) * d)


def coarse_index(p, scheme, scale):
    """Coarse-graining cell index of p.

    scheme "B": boxes M*q + [0, M)^d, scale = M >= 1.
    scheme "C": cubes l*q + [-l/2, l/2)^d, scale = l even and >= 2.
    """
    p = np.asarray(p, dtype=np.int64)
    scale = int(scale)
    if scheme == "B":
        if scale < 1:
            raise ParameterError("B-scheme requires M >= 1")
        return tuple(int(v) for v in np.floor_divide(p, scale))
    if scheme == "C":
        if scale < 2 or scale % 2:
            raise ParameterError("C-scheme requires l even and >= 2")
        return tuple(int(v) for v in np.floor_divide(p + scale // 2, scale))
    raise ParameterError(f"unknown coarse scheme {scheme!r}")


# ---------------------------------------------------------------------------
# Lattice animals


@dataclass(frozen=True)
class AnimalSpec:
    dimension: int
    size: int
    connectivity: str = "L1"  # "L1" or "Linf"
    anchored: bool = False

    def __post_init__(self):
        if self.size < 1:
            raise ParameterError("animal size must be >= 1")
        if self.connectivity not in ("L1", "Linf"):
            raise ParameterError("connectivity must be 'L1' or 'Linf'")


def _moves(d, connectivity):
    if connectivity == "L1":
        return [tuple(v) for v in np.vstack([np.eye(d, dtype=int), -np.eye(d, dtype=int)])]
    deltas = np.stack(np.meshgrid(*([[-1, 0, 1]] * d), indexing="ij"), axis=-1).reshape(-1, d)
    return [tuple(v) for v in deltas if any(v)]


def canonical_form(cells):
    """Sorted coordinate tuple translated so the lexicographic minimum is the origin."""
    cells = sorted(as_point(c) for c in cells)
    base = cells[0]
    return tuple(tuple(c - b for c, b in zip(cell, base)) for cell in cells)


def enumerate_animals(spec: AnimalSpec, cap=None):
    """Enumerate lattice animals of the given size exactly once.

    Unanchored animals are fixed-translate classes in canonical form;
    anchored enumeration yields every translate containing the origin.
    Returns (list of site-set tuples, count).
    """
    cap = DEFAULT_ANIMAL_CAPS.get(spec.dimension, 4) if cap is None else int(cap)
    if spec.size > cap:
        raise CapacityError(
            f"animal size {spec.size} exceeds cap {cap} for d={spec.dimension}"
        )
    moves = _moves(spec.dimension, spec.connectivity)
    origin = (0,) * spec.dimension
    current = {(origin,)}
    for _ in range(spec.size - 1):
        grown = set()
        for animal in current:
            cells = set(animal)
            for cell in animal:
                for mv in moves:
                    nb = tuple(c + m for c, m in zip(cell, mv))
                    if nb not in cells:
                        grown.add(canonical_form(cells | {nb}))
        current = grown
    fixed = sorted(current)
    if not spec.anchored:
        return fixed, len(fixed)
    anchored = set()
    for animal in fixed:
        for cell in animal:
            anchored.add(tuple(sorted(
                tuple(c - b for c, b in zip(other, cell)) for other in animal
            )))
    anchored = sorted(anchored)
    return anchored, len(anchored)


# ---------------------------------------------------------------------------
# Rotated blocks


def rotation_to_direction(xi):
    """An orthogonal matrix R with R @ e1 = xi/|xi|_2.

    Built by Gram-Schmidt from xi and the standard basis; the remaining
    columns are an arbitrary (but deterministic) completion.
    """
    xi = np.asarray(xi, dtype=float)
    d = xi.shape[0]
    n = np.linalg.norm(xi)
    if n == 0:
        raise ParameterError("direction must be nonzero")
    cols = [xi / n]
    for i in range(d):
        v = np.zeros(d)
        v[i] = 1.0
        for c in cols:
            v = v - (v @ c) * c
        nv = np.linalg.norm(v)
        if nv > 1e-12:
            cols.append(v / nv)
        if len(cols) == d:
            break
    return np.column_stack(cols)


def block_sites(xi, m, n, N, edge_tol=1e-9):
    """Rasterize the rotated block around the segment [m*xi, n*xi].

    A site z belongs to the block iff R^-1 z lies in
    [m|xi|_2 - N, n|xi|_2 + N] x [-N, N]^(d-1), with a small inclusive
    tolerance at the faces. Returns an (n_sites, d) int64 array.
    """
    xi = np.asarray(xi, dtype=np.int64)
    d = xi.shape[0]
    if n <= m or m < 0:
        raise ParameterError("block requires n > m >= 0")
    R = rotation_to_direction(xi)
    xi2 = float(np.linalg.norm(xi))
    lo_r = np.array([m * xi2 - N] + [-N] * (d - 1), dtype=float)
    hi_r = np.array([n * xi2 + N] + [N] * (d - 1), dtype=float)
    # Bounding box in lattice coordinates from the rotated corner images.
    corners = np.stack(np.meshgrid(*zip(lo_r, hi_r), indexing="ij"), axis=-1).reshape(-1, d)
    images = corners @ R.T
    lo = np.floor(images.min(axis=0) - edge_tol).astype(np.int64)
    hi = np.ceil(images.max(axis=0) + edge_tol).astype(np.int64) + 1
    cand = BoxRegion(tuple(lo), tuple(hi)).sites()
    back = cand.astype(float) @ R
    inside = np.all((back >= lo_r - edge_tol) & (back <= hi_r + edge_tol), axis=1)
    return cand[inside]
