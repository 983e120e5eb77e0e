"""Independent verification oracles for the linear solver.

Two independent routes to the travel weight e_V(0, x):

* exact summation over all walk paths of length <= L (with a rigorous
  remainder bound for the omitted longer paths), and
* Monte Carlo episodes of the actual walk with the exp(-sum omega) weight.

Neither route touches the linear-algebra solver, so agreement is evidence,
not tautology. The module also samples path-level coarse-graining statistics
(crossing times and visited-cube animals).
"""

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import CapacityError, DomainError, FeasibilityError, ParameterError
from .lattice import as_point, coarse_index
from .rng import counter_uniform, derive_seed
from .solver import SiteSet, region_sites, transition_matrix

ENUM_MAX_SITES = 49
ENUM_MAX_STEPS = 30


@dataclass(eq=False)
class PathEnumResult:
    """Exact weight of all paths of length <= L from 0 that hit x first.

    The true travel weight is sandwiched:
    partial_weight <= e_V(0, x) <= partial_weight + remainder_bound.
    """

    partial_weight: float
    remainder_bound: float
    L: int
    kappa_min: float
    per_step_weight: np.ndarray  # contribution of paths of exactly k steps


def enumerate_paths(field, region, x, taboo=(), L=ENUM_MAX_STEPS):
    """Sum exp(-sum omega) * (1/2d)^len over every path from 0 reaching x
    within L steps, before exiting the region or touching a taboo site.

    The sum over all paths of a fixed length k is propagated exactly as a
    vector recursion (one multiply-add per site and step), which equals the
    literal path-by-path accumulation but stays feasible at L = 30 where
    explicit enumeration (4^30 paths) would not.

    The remainder is bounded by the total weighted mass still alive after L
    steps: every omitted path extends an alive prefix by factors <= 1. When
    the potential is bounded below by kappa_min > 0 the geometric bound
    s^L / (1 - s), s = exp(-kappa_min), is also applied and the smaller of
    the two is reported.
    """
    x = as_point(x)
    taboo = frozenset(as_point(t) for t in taboo)
    sites = region_sites(region)
    if len(sites) > ENUM_MAX_SITES:
        raise CapacityError(
            f"enumeration limited to {ENUM_MAX_SITES} sites, got {len(sites)}"
        )
    if L > ENUM_MAX_STEPS or L < 0:
        raise CapacityError(f"enumeration limited to {ENUM_MAX_STEPS} steps, got {L}")
    if taboo:
        keep = np.array([tuple(z) not in taboo for z in sites])
        sites = sites[keep]
    ss = SiteSet(sites)
    ix = ss.index_one(x)
    i0 = ss.index_one((0,) * ss.d)
    if ix < 0 or i0 < 0:
        raise DomainError("0 and x must lie in the region (and off the taboo set)")
    omega = field.values_at(ss.sites)
    kappa_min = float(omega.min())
    P, _ = transition_matrix(ss, omega, fault_injection=False)
    # split the step matrix: transitions into x absorb, the rest continue
    n = len(ss)
    keep = np.arange(n) != ix
    to_x = np.asarray(P[:, ix].todense()).ravel()[keep]
    Pzz = P[keep][:, keep].T.tocsr()  # transposed: we push distributions

    v = np.zeros(n - 1)
    v[np.nonzero(np.nonzero(keep)[0] == i0)[0][0]] = 1.0
    if i0 == ix:
        raise DomainError("x must differ from the origin")
    per_step = np.zeros(L + 1)
    total = 0.0
    for k in range(1, L + 1):
        per_step[k] = float(v @ to_x)  # paths hitting x at exactly step k
        total += per_step[k]
        v = Pzz @ v
    alive = float(np.abs(v).sum())
    remainder = alive
    if kappa_min > 0.0:
        s = math.exp(-kappa_min)
        remainder = min(remainder, s ** L / (1.0 - s) if s < 1.0 else remainder)
    return PathEnumResult(total, remainder, L, kappa_min, per_step)


def enumerate_paths_dfs(field, region, x, taboo=(), L=12):
    """Literal recursive path enumeration. Exponential in L; only usable on
    tiny instances, where it cross-validates enumerate_paths path by path."""
    x = as_point(x)
    taboo = frozenset(as_point(t) for t in taboo)
    sites = region_sites(region)
    allowed = {tuple(int(c) for c in z) for z in sites} - taboo
    if x not in allowed:
        raise DomainError("x must lie in the region off the taboo set")
    d = len(x)
    if len(allowed) * (2 * d) ** L > 5 * 10 ** 8:
        raise CapacityError("DFS budget exceeded; use enumerate_paths")
    inv2d = 1.0 / (2 * d)
    total = 0.0
    origin = (0,) * d

    def walk(z, weight, steps_left):
        nonlocal total
        if steps_left == 0:
            return
        step_w = weight * math.exp(-field.value_at(z)) * inv2d
        for axis in range(d):
            for sign in (1, -1):
                nb = z[:axis] + (z[axis] + sign,) + z[axis + 1:]
                if nb == x:
                    total += step_w
                elif nb in allowed:
                    walk(nb, step_w, steps_left - 1)

    walk(origin, 1.0, L)
    return total


# ---------------------------------------------------------------------------
# Monte Carlo episodes


@dataclass(eq=False)
class WalkWeightResult:
    estimate: float
    std_error: float
    weights: np.ndarray
    n_hit: int
    n_exit: int

    def __iter__(self):  # allows (estimate, std_error) unpacking
        yield self.estimate
        yield self.std_error


def _step_directions(seed, episodes, t, d):
    u = counter_uniform(seed, np.stack(
        [episodes, np.full_like(episodes, t)], axis=-1))
    dirs = np.minimum((u * 2 * d).astype(np.int64), 2 * d - 1)
    axis, sign = dirs // 2, 1 - 2 * (dirs % 2)
    return axis, sign


def sample_walk_weight(field, region, x, n_samples, seed):
    """Direct Monte Carlo estimate of e_V(0, x).

    Each episode runs the simple walk from 0, multiplying exp(-omega) at
    every departure site, until it hits x (weight kept) or leaves the region
    (weight zero). Episode randomness is keyed by (seed, episode, step), so
    the result is identical however episodes are ordered or parallelized.
    """
    x = as_point(x)
    if n_samples < 1:
        raise ParameterError("n_samples must be >= 1")
    sites = region_sites(region)
    ss = SiteSet(sites)
    if ss.index_one(x) < 0 or ss.index_one((0,) * ss.d) < 0:
        raise DomainError("0 and x must lie in the region")
    d = ss.d
    xv = np.asarray(x, dtype=np.int64)

    weights = np.zeros(n_samples)
    episodes = np.arange(n_samples, dtype=np.int64)
    pos = np.zeros((n_samples, d), dtype=np.int64)
    logw = np.zeros(n_samples)
    n_hit = 0
    t = 0
    while len(episodes):
        logw -= field.values_at(pos)  # pay at the departure site
        axis, sign = _step_directions(seed, episodes, t, d)
        pos[np.arange(len(episodes)), axis] += sign
        t += 1
        hit = np.all(pos == xv, axis=1)
        inside = ss.index(pos) >= 0
        if hit.any():
            weights[episodes[hit]] = np.exp(logw[hit])
            n_hit += int(hit.sum())
        alive = inside & ~hit
        episodes, pos, logw = episodes[alive], pos[alive], logw[alive]
    mean = float(weights.mean())
    se = float(weights.std(ddof=1) / math.sqrt(n_samples)) if n_samples > 1 else 0.0
    return WalkWeightResult(mean, se, weights, n_hit, n_samples - n_hit)


@dataclass(eq=False)
class CrossingTrace:
    """Crossing-time skeleton and visited-cube animal of one episode."""

    accepted: bool
    weight: float  # exp(-sum omega) importance weight (0 if rejected)
    tau_times: tuple
    visited_cubes: tuple  # the animal: C-scheme cube indices at scale l
    range_size: int  # number of distinct sites visited
    l: int

    @property
    def animal_size(self):
        return len(self.visited_cubes)


def _trace_episode(field, ss, x, l, seed, episode):
    """Run one episode to completion, recording the full path."""
    d = ss.d
    xv = np.asarray(x, dtype=np.int64)
    pos = np.zeros(d, dtype=np.int64)
    path = [tuple(pos)]
    logw = 0.0
    t = 0
    while True:
        logw -= field.value_at(tuple(pos))
        axis, sign = _step_directions(seed, np.asarray([episode], dtype=np.int64), t, d)
        pos = pos.copy()
        pos[axis[0]] += sign[0]
        t += 1
        if np.all(pos == xv):
            path.append(tuple(pos))
            return True, logw, path
        if ss.index_one(tuple(pos)) < 0:
            return False, 0.0, path
        path.append(tuple(pos))


def _crossing_skeleton(path, l):
    """tau times: successive first exits of the l-infinity ball of radius
    3l/4 around the previous crossing point."""
    threshold = 3 * l / 4
    taus = [0]
    anchor = np.asarray(path[0])
    for k in range(1, len(path)):
        if np.abs(np.asarray(path[k]) - anchor).max() >= threshold:
            taus.append(k)
            anchor = np.asarray(path[k])
    return tuple(taus)


def sample_crossings(field, region, x, l, n_samples, seed,
                     include_rejected=False, max_attempts=None):
    """Episodes of the walk conditioned on hitting x before exiting the
    region, by plain rejection; each accepted trace carries the importance
    weight exp(-sum omega) so weighted means estimate expectations under the
    tilted-and-conditioned path measure."""
    if l < 4 or l % 2:
        raise ParameterError("l must be even and >= 4")
    x = as_point(x)
    sites = region_sites(region)
    ss = SiteSet(sites)
    if ss.index_one(x) < 0 or ss.index_one((0,) * ss.d) < 0:
        raise DomainError("0 and x must lie in the region")
    if max_attempts is None:
        max_attempts = max(200_000, 50 * n_samples)
    traces = []
    accepted = 0
    attempts = 0
    episode = 0
    while accepted < n_samples:
        if attempts >= max_attempts:
            rate = accepted / attempts
            if rate < 1e-6:
                raise FeasibilityError(
                    f"acceptance rate {rate:.2e} below 1e-6 after {attempts} attempts"
                )
            max_attempts *= 2
        ok, logw, path = _trace_episode(field, ss, x, l, seed, episode)
        episode += 1
        attempts += 1
        if ok:
            taus = _crossing_skeleton(path, l)
            # the range A = {S_k : 0 <= k < H(x)} excludes the endpoint x
            visited = set(path[:-1])
            cubes = tuple(sorted({coarse_index(p, "C", l) for p in visited}))
            rng = len(visited)
            tr = CrossingTrace(True, math.exp(logw), taus, cubes, rng, l)
            assert tr.range_size <= (3 * l) ** ss.d * tr.animal_size
            traces.append(tr)
            accepted += 1
        elif include_rejected:
            traces.append(CrossingTrace(False, 0.0, (), (), len(set(path)), l))
    return traces


def dump_traces(traces, path):
    """One JSON object per episode, one line each."""
    with open(str(path), "w") as fh:
        for tr in traces:
            fh.write(json.dumps({
                "accepted": tr.accepted,
                "weight": tr.weight,
                "range_size": tr.range_size,
                "animal_size": tr.animal_size,
                "tau_count": len(tr.tau_times),
            }, sort_keys=True))
            fh.write("\n")


def sample_walk_weight_seeded(field, region, x, n_samples, seed, trial):
    """Convenience wrapper deriving an independent per-trial substream."""
    return sample_walk_weight(field, region, x, n_samples, derive_seed(seed, trial))
