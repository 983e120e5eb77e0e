"""Exact killed-walk functionals on finite site sets via substochastic
linear systems.

The walk pays exp(-omega) at every departure site and is killed on leaving
the region (or on a taboo site). All quantities here reduce to solves with
the matrix I - P, where P[z, z'] = exp(-omega(z))/(2d) for lattice neighbors
z, z' inside the active set; P is a substochastic M-matrix on any finite box,
so the systems are nonsingular and Gauss-Seidel converges.
"""

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import cg, splu, spsolve, spsolve_triangular

from .errors import DegenerateWeightError, DomainError, SolverError
from .lattice import BoxRegion, as_point, block_sites, norms
from .potential import PotentialField, sample_field, DistributionSpec

DIRECT_MAX_SITES = 200_000
GS_TOL = 1e-12
GS_MAX_SWEEPS = 100_000
RESIDUAL_TOL = 1e-9

# Test hook: when set to a float, the first transition-matrix entry is scaled
# by (1 + value). Used by the oracle battery's mutation sanity check only.
_MATRIX_CORRUPTION = None


class SiteSet:
    """Explicit set of lattice sites with O(1) vectorized index lookup."""

    def __init__(self, sites):
        sites = np.asarray(sites, dtype=np.int64)
        if sites.ndim != 2 or len(sites) == 0:
            raise DomainError("site set must be a nonempty (n, d) array")
        self.sites = sites
        self.d = sites.shape[1]
        self.lo = sites.min(axis=0)
        self.shape = tuple(sites.max(axis=0) - self.lo + 1)
        flat = np.full(int(np.prod(self.shape)), -1, dtype=np.int64)
        keys = np.ravel_multi_index((sites - self.lo).T, self.shape)
        if len(np.unique(keys)) != len(sites):
            raise DomainError("duplicate sites in region")
        flat[keys] = np.arange(len(sites))
        self._flat = flat

    def __len__(self):
        return len(self.sites)

    def index(self, points):
        """Indices of points in the set, -1 where absent. points: (m, d)."""
        pts = np.atleast_2d(np.asarray(points, dtype=np.int64))
        rel = pts - self.lo
        ok = np.all((rel >= 0) & (rel < np.asarray(self.shape)), axis=1)
        out = np.full(len(pts), -1, dtype=np.int64)
        if ok.any():
            keys = np.ravel_multi_index(rel[ok].T, self.shape)
            out[ok] = self._flat[keys]
        return out

    def index_one(self, p):
        return int(self.index(np.asarray(p, dtype=np.int64)[None, :])[0])


def region_sites(region):
    """Canonicalize a region (BoxRegion or explicit site array) to (n, d)."""
    if isinstance(region, BoxRegion):
        return region.sites()
    return np.asarray(region, dtype=np.int64)


def _axis_shifts(d):
    shifts = []
    for axis in range(d):
        for sign in (1, -1):
            v = np.zeros(d, dtype=np.int64)
            v[axis] = sign
            shifts.append(v)
    return shifts


def transition_matrix(ss: SiteSet, omega, fault_injection=True):
    """(P, outside_count): substochastic step matrix and per-site count of
    neighbors falling outside the active set.

    fault_injection controls the _MATRIX_CORRUPTION test hook: independent
    cross-checks (path enumeration) must build an uncorrupted matrix so a
    deliberately injected solver fault is actually detected."""
    n = len(ss)
    w = np.exp(-np.asarray(omega, dtype=float)) / (2.0 * ss.d)
    rows, cols = [], []
    outside = np.zeros(n, dtype=np.int64)
    for shift in _axis_shifts(ss.d):
        j = ss.index(ss.sites + shift)
        hit = j >= 0
        rows.append(np.nonzero(hit)[0])
        cols.append(j[hit])
        outside += ~hit
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    data = w[rows]
    if fault_injection and _MATRIX_CORRUPTION is not None and len(data):
        data = data * (1.0 + _MATRIX_CORRUPTION)
    P = sp.csr_matrix((data, (rows, cols)), shape=(n, n))
    return P, outside


def _gauss_seidel(A, b, tol=None, max_sweeps=None):
    tol = GS_TOL if tol is None else tol
    max_sweeps = GS_MAX_SWEEPS if max_sweeps is None else max_sweeps
    L = sp.tril(A, 0, format="csr")
    U = sp.triu(A, 1, format="csr")
    x = np.zeros_like(b)
    bscale = max(1.0, float(np.abs(b).max(initial=0.0)))
    for _ in range(max_sweeps):
        x = spsolve_triangular(L, b - U @ x, lower=True)
        resid = float(np.abs(A @ x - b).max(initial=0.0))
        if resid <= tol * bscale:
            return x, resid
    raise SolverError(f"Gauss-Seidel did not reach tol={tol} in {max_sweeps} sweeps")


def _solve(A, b, method):
    A = A.tocsc()
    if method == "DirectLU":
        x = spsolve(A, b)
        resid = float(np.abs(A @ x - b).max(initial=0.0))
        return x, resid
    if method == "GaussSeidel":
        return _gauss_seidel(A.tocsr(), b)
    raise DomainError(f"unknown method {method!r}")


def _pick_method(n, method):
    if method is not None:
        return method
    return "DirectLU" if n <= DIRECT_MAX_SITES else "GaussSeidel"


@dataclass(eq=False)
class SolveResult:
    """Travel-weight vector e_V(z, target) for every site z of the region."""

    target: tuple
    taboo: frozenset
    siteset: SiteSet
    e_values: np.ndarray
    log_e: np.ndarray
    residual: float
    method: str

    def e_at(self, p):
        i = self.siteset.index_one(as_point(p))
        if i < 0:
            raise DomainError(f"site {tuple(p)} not in solved region")
        return float(self.e_values[i])

    def cost_at(self, p):
        """a_V(p, target) = -log e_V(p, target)."""
        i = self.siteset.index_one(as_point(p))
        if i < 0:
            raise DomainError(f"site {tuple(p)} not in solved region")
        le = self.log_e[i]
        if not np.isfinite(le):
            raise DegenerateWeightError(
                f"travel weight underflowed at {tuple(p)}; no rescaled value available"
            )
        return float(-le)

    def iter_rows(self):
        for z, e in zip(self.siteset.sites, self.e_values):
            yield tuple(int(c) for c in z), float(e)


def _check_residual(resid, bscale):
    if resid > RESIDUAL_TOL * max(1.0, bscale):
        raise SolverError(f"residual {resid:.3e} exceeds tolerance {RESIDUAL_TOL:.0e}")


def travel_weight(field, region, source, target, taboo=(), method=None, rescale="auto"):
    """Solve for e_V(z, target) on the region, killed on exit and on taboo sites.

    Potential is paid at departure sites k = 0, ..., H-1 (source included,
    target excluded). Returns the full vector so e_V(z, target) is available
    for every z from one solve. When the weight underflows in double
    precision the solve is repeated with an exponential rescaling so that
    costs stay available in log space.
    """
    source = as_point(source)
    target = as_point(target)
    taboo = frozenset(as_point(t) for t in taboo)
    if target in taboo:
        raise DomainError("target may not be taboo")
    if source in taboo:
        raise DomainError("source may not be taboo")
    sites = region_sites(region)
    if taboo:
        keep = np.array([tuple(z) not in taboo for z in sites])
        sites = sites[keep]
    ss = SiteSet(sites)
    it = ss.index_one(target)
    if it < 0:
        raise DomainError(f"target {target} not in region")
    if ss.index_one(source) < 0:
        raise DomainError(f"source {source} not in region")

    field_omega = field.values_at(ss.sites)
    P, _ = transition_matrix(ss, field_omega)
    n = len(ss)
    keep = np.arange(n) != it
    Pzz = P[keep][:, keep]
    b = np.asarray(P[keep, it].todense()).ravel()
    method = _pick_method(n, method)
    A = sp.identity(n - 1, format="csr") - Pzz
    u, resid = _solve(A, b, method)
    _check_residual(resid, float(np.abs(b).max(initial=0.0)))

    e_values = np.empty(n)
    e_values[keep] = np.clip(u, 0.0, 1.0)
    e_values[it] = 1.0
    with np.errstate(divide="ignore"):
        log_e = np.log(e_values)

    isrc = ss.index_one(source)
    if rescale == "auto" and e_values[isrc] <= 0.0:
        log_e = _rescaled_log_solve(ss, field_omega, it, keep, P, method, log_e)
    return SolveResult(target, taboo, ss, e_values, log_e, resid, method)


def _rescaled_log_solve(ss, omega, it, keep, P, method, log_e):
    """Re-solve with conjugation by exp(c * l1-distance-to-target) so that the
    solution stays representable; fills log_e where the plain solve underflowed."""
    dist = np.abs(ss.sites - ss.sites[it]).sum(axis=1).astype(float)
    c = math.log(2.0 * ss.d) + float(np.mean(omega))
    Pc = P.tocoo()
    data = Pc.data * np.exp(c * (dist[Pc.row] - dist[Pc.col]))
    Ps = sp.csr_matrix((data, (Pc.row, Pc.col)), shape=Pc.shape)
    Pzz = Ps[keep][:, keep]
    b = np.asarray(Ps[keep, it].todense()).ravel()
    n1 = Pzz.shape[0]
    A = sp.identity(n1, format="csr") - Pzz
    w, resid = _solve(A, b, method)
    _check_residual(resid, float(np.abs(b).max(initial=0.0)))
    full = np.empty(len(ss))
    full[keep] = w
    full[it] = 1.0
    out = log_e.copy()
    with np.errstate(divide="ignore", invalid="ignore"):
        lw = np.log(full) - c * dist
    fill = ~np.isfinite(out) & np.isfinite(lw) & (full > 0)
    out[fill] = lw[fill]
    return out


def block_cost(field, xi, m, n, N):
    """Restricted cost between m*xi and n*xi inside the rotated block of
    half-width N around the segment. Subadditive in (m, n) on a common field."""
    xi = np.asarray(xi, dtype=np.int64)
    sites = block_sites(xi, m, n, N)
    ss_probe = SiteSet(sites)
    src = tuple(int(v) for v in m * xi)
    tgt = tuple(int(v) for v in n * xi)
    if ss_probe.index_one(src) < 0 or ss_probe.index_one(tgt) < 0:
        raise DomainError("block endpoints fall outside the rasterized block")
    res = travel_weight(field, sites, src, tgt)
    return res.cost_at(src)


def exit_functional(field, region, start, crossing=("exit",)):
    """E^start[exp(-sum_{k<tau} omega(S_k))] with tau the exit time of the
    region ("exit") or the first l-infinity crossing at radius r
    (("linf", r), relative to start). Value in (0, 1]."""
    start = as_point(start)
    sites = region_sites(region)
    ss_all = SiteSet(sites)
    if ss_all.index_one(start) < 0:
        raise DomainError("start not in region")
    if crossing[0] == "exit":
        active = sites
    elif crossing[0] == "linf":
        r = float(crossing[1])
        off = np.abs(sites - np.asarray(start, dtype=np.int64)).max(axis=1)
        active = sites[off < r]
        # every lattice site strictly inside the shell must carry a potential
        k = int(math.ceil(r)) - 1
        if len(active) != (2 * k + 1) ** ss_all.d:
            raise DomainError("crossing shell exits the region; enlarge the field")
    else:
        raise DomainError(f"unknown crossing {crossing!r}")
    ss = SiteSet(active)
    omega = field.values_at(ss.sites)
    P, outside = transition_matrix(ss, omega)
    rhs = np.exp(-omega) / (2.0 * ss.d) * outside
    n = len(ss)
    method = _pick_method(n, None)
    A = sp.identity(n, format="csr") - P
    v, resid = _solve(A, rhs, method)
    _check_residual(resid, float(np.abs(rhs).max(initial=0.0)))
    return float(min(max(v[ss.index_one(start)], 0.0), 1.0))


def return_probability(d, region):
    """Probability the zero-potential walk returns to 0 before exiting the
    region. Monotone increasing in the region; the d >= 3 limit is the
    classical transient return probability."""
    sites = region_sites(region)
    ss = SiteSet(sites)
    i0 = ss.index_one((0,) * d)
    if i0 < 0:
        raise DomainError("origin not in region")
    P, _ = transition_matrix(ss, np.zeros(len(ss)))
    n = len(ss)
    keep = np.arange(n) != i0
    Pzz = P[keep][:, keep]
    b = np.asarray(P[keep, i0].todense()).ravel()
    A = sp.identity(n - 1, format="csc") - Pzz
    if n - 1 <= 20_000:
        u = spsolve(A, b)
    else:
        # symmetric positive definite for zero potential
        u, info = cg(A, b, rtol=1e-12, atol=0.0, maxiter=10_000)
        if info != 0:
            raise SolverError(f"CG failed with info={info}")
    full = np.zeros(n)
    full[keep] = u
    total = 0.0
    origin = np.zeros(d, dtype=np.int64)
    for shift in _axis_shifts(d):
        j = ss.index_one(tuple(origin + shift))
        if j >= 0:
            total += full[j] if j != i0 else 1.0
    return total / (2.0 * d)


# ---------------------------------------------------------------------------
# Green-function machinery for taboo weights and the weighted measure Q.


class _GreenSystem:
    """LU factorization of I - P over the active sites, with x (optionally)
    removed so the walk is killed at x and on exit."""

    def __init__(self, field, region, kill=None):
        sites = region_sites(region)
        if kill is not None:
            kill = as_point(kill)
            keep = ~np.all(sites == np.asarray(kill, dtype=np.int64), axis=1)
            if keep.all():
                raise DomainError(f"kill site {kill} not in region")
            sites = sites[keep]
        self.ss = SiteSet(sites)
        self.omega = field.values_at(self.ss.sites)
        P, _ = transition_matrix(self.ss, self.omega)
        self.P = P
        n = len(self.ss)
        self.lu = splu(sp.identity(n, format="csc") - P.tocsc())

    def row(self, p):
        """G(p, .) for all active sites."""
        e = np.zeros(len(self.ss))
        e[self._idx(p)] = 1.0
        return self.lu.solve(e, trans="T")

    def column(self, p):
        """G(., p) for all active sites."""
        e = np.zeros(len(self.ss))
        e[self._idx(p)] = 1.0
        return self.lu.solve(e)

    def diagonal(self, ids=None):
        """G(y, y) for the given site indices (all active sites by default)."""
        n = len(self.ss)
        ids = np.arange(n) if ids is None else np.asarray(ids)
        if len(ids) > 1 and n <= 5000:
            cols = self.lu.solve(np.eye(n)[:, ids])
            return cols[ids, np.arange(len(ids))]
        out = np.empty(len(ids))
        e = np.zeros(n)
        for k, i in enumerate(ids):
            e[i] = 1.0
            out[k] = self.lu.solve(e)[i]
            e[i] = 0.0
        return out

    def hit_vector(self, target_point, target_omega=None):
        """e(z, target) for active z when target itself is the killed site."""
        tp = np.asarray(as_point(target_point), dtype=np.int64)
        b = np.zeros(len(self.ss))
        j = self.ss.index(tp + np.array(_axis_shifts(self.ss.d)))
        w = np.exp(-self.omega) / (2.0 * self.ss.d)
        for i in j[j >= 0]:
            b[i] = w[i]
        return self.lu.solve(b)

    def _idx(self, p):
        i = self.ss.index_one(as_point(p))
        if i < 0:
            raise DomainError(f"site {tuple(p)} not active in Green system")
        return i


@dataclass(eq=False)
class WeightedFunctionals:
    """Visit probabilities under the weighted path measure tilted by
    exp(-sum omega) and conditioned on hitting x before exiting."""

    x: tuple
    siteset: SiteSet  # active sites (x excluded)
    q_visit: np.ndarray
    expected_range: float

    def q_at(self, y):
        y = as_point(y)
        if y == self.x:
            return 0.0
        i = self.siteset.index_one(y)
        if i < 0:
            raise DomainError(f"site {y} not in region")
        return float(self.q_visit[i])


def weighted_functionals(field, region, x):
    """Full visit-probability vector q(y) = Q(H(y) < H(x)) and the expected
    range of the weighted walk, E_Q[#A] = sum_y q(y)."""
    x = as_point(x)
    d = len(x)
    origin = (0,) * d
    if x == origin:
        raise DomainError("x must differ from the origin")
    gs = _GreenSystem(field, region, kill=x)
    i0 = gs.ss.index_one(origin)
    if i0 < 0:
        raise DomainError("origin not in region")
    u = gs.hit_vector(x)  # e_V(z, x) for z != x
    e0x = u[i0]
    if e0x <= 0.0:
        raise DegenerateWeightError("e_V(0, x) underflowed; weighted measure undefined")
    g = gs.row(origin)  # G(0, y)
    diag = gs.diagonal()  # G(y, y)
    q = (g / diag) * u / e0x
    q[i0] = 1.0
    q = np.clip(q, 0.0, 1.0)
    return WeightedFunctionals(x, gs.ss, q, float(q.sum()))


def visit_probabilities(field, region, x, ys):
    """q(y) = Q(H(y) < H(x)) for selected sites y only (cheaper than the
    full diagonal when just a few sites matter)."""
    x = as_point(x)
    origin = (0,) * len(x)
    gs = _GreenSystem(field, region, kill=x)
    i0 = gs.ss.index_one(origin)
    u = gs.hit_vector(x)
    e0x = u[i0]
    if e0x <= 0.0:
        raise DegenerateWeightError("e_V(0, x) underflowed; weighted measure undefined")
    g = gs.row(origin)
    out = {}
    for y in ys:
        y = as_point(y)
        if y == x:
            out[y] = 0.0
            continue
        iy = gs.ss.index_one(y)
        if iy < 0:
            raise DomainError(f"site {y} not in region")
        if iy == i0:
            out[y] = 1.0
            continue
        gyy = gs.diagonal([iy])[0]
        out[y] = float(np.clip(g[iy] / gyy * u[iy] / e0x, 0.0, 1.0))
    return out


def maximal_distance(field, region, x, eta):
    """sup over the l1-ball {y : |x-y|_1 < eta*|x|_1} of
    max(a_V(x, y), a_V(y, x)), via one factorization plus per-target
    diagonal solves."""
    x = as_point(x)
    l1x = norms(x)[0]
    gs = _GreenSystem(field, region)
    ix = gs.ss.index_one(x)
    if ix < 0:
        raise DomainError("x not in region")
    radius = eta * l1x
    off = np.abs(gs.ss.sites - np.asarray(x, dtype=np.int64)).sum(axis=1)
    ball = np.nonzero(off < radius)[0]
    # the whole lattice ball must be present in the region
    expected = _l1_ball_count(gs.ss.d, radius)
    if len(ball) != expected:
        raise DomainError("l1 ball around x exits the region")
    row_x = gs.row(x)  # G(x, .)
    col_x = gs.column(x)  # G(., x)
    gxx = row_x[ix]
    diag = gs.diagonal(ball)
    best = 0.0
    for k, iy in enumerate(ball):
        if iy == ix:
            continue
        e_xy = row_x[iy] / diag[k]
        e_yx = col_x[iy] / gxx
        if e_xy <= 0 or e_yx <= 0:
            raise DegenerateWeightError("weight underflow inside maximal-distance ball")
        best = max(best, -math.log(e_xy), -math.log(e_yx))
    return best


def _l1_ball_count(d, radius):
    """Number of lattice points with |v|_1 < radius (radius real)."""
    rmax = int(math.ceil(radius)) - 1
    if rmax < 0:
        return 0
    count = 0
    for r in range(rmax + 1):
        count += _l1_sphere_count(d, r)
    return count


def _l1_sphere_count(d, r):
    if r == 0:
        return 1
    total = 0
    for k in range(1, min(d, r) + 1):
        total += math.comb(d, k) * (2 ** k) * math.comb(r - 1, k - 1)
    return total


def zero_field(d, region):
    """Convenience: omega = 0 on the bounding box of the region."""
    import warnings

    sites = region_sites(region)
    lo = tuple(int(v) for v in sites.min(axis=0))
    hi = tuple(int(v) + 1 for v in sites.max(axis=0))
    box = BoxRegion(lo, hi)
    with warnings.catch_warnings():
        # zero potential is intentional here (pure exit/return probabilities)
        warnings.simplefilter("ignore")
        spec = DistributionSpec.constant(0.0)
    return PotentialField(box, np.zeros(box.shape), spec, 0)
