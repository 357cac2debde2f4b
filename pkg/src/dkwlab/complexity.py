"""Metric complexity of finite direction sets: greedy covers and packings,
admissible sequences from the farthest-point traversal, gamma-functional
upper bounds, entropy functionals, and the entropy-based lower-bound formula.

A single farthest-point traversal (ties broken by smallest index) is the
source of covers, packings and admissible-sequence levels, so all of them
are nested and deterministic.  Equilateral two-support sets ("uniform
spiked") take a closed-form shortcut that reproduces the generic traversal
output exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np

from .classes import DirectionSet

def level_size(s: int, n: int) -> int:
    if s == 0:
        return 1
    if s >= 6:  # 2^(2^6) exceeds any realizable set size
        return n
    return min(2 ** (2 ** s), n)


def terminal_level(n: int) -> int:
    """Smallest level index whose cardinality budget reaches n (level 0 is
    pinned to a single point)."""
    if n <= 1:
        return 0
    s = 1
    while level_size(s, n) < n:
        s += 1
    return s


@dataclass(frozen=True)
class Traversal:
    """Farthest-point ordering: `order[k]` is the k-th chosen index and
    `radii[k]` its distance to the previously chosen prefix (radii[0]=inf).
    `snapshots` maps prefix sizes to (nearest distance, nearest position)
    arrays over all points."""

    order: np.ndarray
    radii: np.ndarray
    snapshots: Dict[int, tuple]
    n: int
    full: bool  # whether the ordering covers every point


def _traverse(dirs: DirectionSet, kmax: int, snapshot_sizes=()) -> Traversal:
    n = dirs.n
    kmax = min(kmax, n)
    want = {s for s in snapshot_sizes if s <= kmax}
    order = np.empty(kmax, dtype=np.int64)
    radii = np.empty(kmax)
    dist = np.full(n, np.inf)
    assign = np.zeros(n, dtype=np.int64)
    snaps: Dict[int, tuple] = {}
    cur = 0
    for k in range(kmax):
        order[k] = cur
        radii[k] = dist[cur] if k else np.inf
        d_new = dirs.dist_from(cur)
        closer = d_new < dist
        dist[closer] = d_new[closer]
        assign[closer] = cur
        if (k + 1) in want:
            snaps[k + 1] = (dist.copy(), assign.copy())
        cur = int(np.argmax(dist))  # ties: first (smallest) index
    return Traversal(order=order, radii=radii, snapshots=snaps, n=n,
                     full=kmax == n)


def _traverse_uniform_spiked(dirs: DirectionSet, kmax: int,
                             snapshot_sizes=()) -> Traversal:
    # all pairwise distances equal b*sqrt(2); greedy order is index order
    n = dirs.n
    kmax = min(kmax, n)
    step = float(abs(dirs.sparse_b[0]) * math.sqrt(2.0))
    order = np.arange(kmax, dtype=np.int64)
    radii = np.full(kmax, step)
    if kmax:
        radii[0] = np.inf
    snaps: Dict[int, tuple] = {}
    for s in snapshot_sizes:
        if s <= kmax:
            dist = np.where(np.arange(n) < s, 0.0, step)
            assign = np.where(np.arange(n) < s, np.arange(n), 0)
            snaps[s] = (dist, assign.astype(np.int64))
    return Traversal(order=order, radii=radii, snapshots=snaps, n=n,
                     full=kmax == n)


def traversal(dirs: DirectionSet, kmax: Optional[int] = None,
              snapshot_sizes=()) -> Traversal:
    kmax = dirs.n if kmax is None else kmax
    # the full ordering is reused by covers, packings and scale grids
    if kmax == dirs.n and not snapshot_sizes:
        cached = getattr(dirs, "_full_traversal", None)
        if cached is not None:
            return cached
    if dirs.is_uniform_spiked:
        tr = _traverse_uniform_spiked(dirs, kmax, snapshot_sizes)
    else:
        tr = _traverse(dirs, kmax, snapshot_sizes)
    if kmax == dirs.n and not snapshot_sizes:
        object.__setattr__(dirs, "_full_traversal", tr)
    return tr


def covering_number(dirs: DirectionSet, delta: float):
    """Greedy internal cover: (count, center indices); every point is within
    CLOSED distance delta of a center chosen from the set."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    tr = traversal(dirs)
    # after k centers the covering radius is radii[k] (distance of the next
    # selection); keep selecting while it exceeds delta
    need = 1 + int(np.sum(tr.radii[1:] > delta))
    return need, tr.order[:need].copy()


def packing_number(dirs: DirectionSet, delta: float) -> int:
    """Size of the greedy maximal delta-separated subset (traversal prefix
    of insertion distances > delta)."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    tr = traversal(dirs)
    return 1 + int(np.sum(tr.radii[1:] > delta))


@dataclass(frozen=True)
class AdmissibleSequence:
    """Nested levels A_s (|A_0| = 1, |A_s| <= 2^(2^s)) with per-point nearest
    assignments; level S covers the set exactly unless `truncated`."""

    level_indices: list      # per level: array of member indices
    assign_dist: np.ndarray  # (S+1, n) nearest distance per level
    assign_idx: np.ndarray   # (S+1, n) nearest member index per level
    truncated: bool = False

    @property
    def n_levels(self) -> int:
        return len(self.level_indices)


def greedy_admissible_sequence(dirs: DirectionSet) -> AdmissibleSequence:
    """Levels are traversal prefixes of sizes min(2^(2^s), n)."""
    n = dirs.n
    if n < 1:
        raise ValueError("need at least one direction")
    S = terminal_level(n)
    sizes = [level_size(s, n) for s in range(S + 1)]
    tr = traversal(dirs, kmax=sizes[-2] if len(sizes) > 1 else 1,
                   snapshot_sizes=set(sizes[:-1]))
    dists = np.zeros((S + 1, n))
    idxs = np.zeros((S + 1, n), dtype=np.int64)
    levels = []
    for s, size in enumerate(sizes):
        if size == n:
            levels.append(np.arange(n, dtype=np.int64))
            dists[s] = 0.0
            idxs[s] = np.arange(n)
        else:
            levels.append(tr.order[:size].copy())
            d, a = tr.snapshots[size]
            dists[s] = d
            idxs[s] = a
    return AdmissibleSequence(level_indices=levels, assign_dist=dists,
                              assign_idx=idxs)


def gamma_upper(seq: AdmissibleSequence, alpha: int) -> float:
    """sup over points of sum_s 2^(s/alpha) * (distance to level s); an upper
    bound on the alpha-chaining functional by definition."""
    if alpha not in (1, 2):
        raise ValueError("alpha must be 1 or 2")
    weights = np.array([2.0 ** (s / alpha) for s in range(seq.n_levels)])
    totals = weights @ seq.assign_dist
    return float(totals.max())


def diameter(dirs: DirectionSet) -> float:
    if dirs.n < 2:
        return 0.0
    if dirs.is_uniform_spiked:
        return float(abs(dirs.sparse_b[0]) * math.sqrt(2.0))
    best = 0.0
    for i in range(dirs.n):
        best = max(best, float(dirs.dist_from(i).max()))
    return best


def min_positive_radius(tr: Traversal) -> float:
    r = tr.radii[1:]
    pos = r[r > 0]
    return float(pos.min()) if len(pos) else 0.0


def default_scale_grid(dirs: DirectionSet, n_scales: int = 64) -> np.ndarray:
    """Geometric grid from the diameter down to diameter/2^16, clipped below
    at the smallest positive greedy insertion distance."""
    diam = diameter(dirs)
    if diam == 0.0:
        return np.array([1.0])
    tr = traversal(dirs)
    lo = max(diam / 2.0 ** 16, min_positive_radius(tr) or diam / 2.0 ** 16)
    lo = min(lo, diam)
    return np.geomspace(lo, diam, n_scales)


def cover_counts(dirs: DirectionSet, scales: np.ndarray) -> np.ndarray:
    tr = traversal(dirs)
    r = np.sort(tr.radii[1:])
    # N(delta) = 1 + #{insertion distances > delta}
    return 1 + (len(r) - np.searchsorted(r, scales, side="right"))


def entropy_functionals(dirs: DirectionSet, scales) -> tuple:
    """(sup_delta delta*log N, integral of log N d delta) over the grid, with
    log N extended as a left-constant step function below and between grid
    points; natural logarithm."""
    scales = np.sort(np.asarray(scales, dtype=float))
    if len(scales) == 0:
        raise ValueError("empty scale grid")
    counts = cover_counts(dirs, scales)
    logs = np.log(counts.astype(float))
    sup = float(np.max(scales * logs))
    integral = float(scales[0] * logs[0])
    if len(scales) > 1:
        integral += float(np.sum(logs[:-1] * np.diff(scales)))
    return sup, integral


def sudakov_lower_formula(dirs: DirectionSet, delta: float, m: int) -> float:
    """sqrt(delta * log N(A, delta) / m): the entropy-based deviation floor
    with unit constant."""
    if delta <= 0 or m < 1:
        raise ValueError("need delta > 0 and m >= 1")
    count, _ = covering_number(dirs, delta)
    return math.sqrt(delta * math.log(count) / m)


@dataclass(frozen=True)
class ComplexityReport:
    gamma1_upper: float
    gamma2_upper: float
    gamma1_entropy_sup: float
    entropy_integral_1: float
    cover_sizes: Dict[float, int]
    diameter: float

    def as_dict(self) -> dict:
        return {
            "gamma1_upper": self.gamma1_upper,
            "gamma2_upper": self.gamma2_upper,
            "gamma1_entropy_sup": self.gamma1_entropy_sup,
            "entropy_integral_1": self.entropy_integral_1,
            "cover_sizes": {repr(k): v for k, v in self.cover_sizes.items()},
            "diameter": self.diameter,
        }


def complexity_report(dirs: DirectionSet, scales=None) -> ComplexityReport:
    seq = greedy_admissible_sequence(dirs)
    g1 = gamma_upper(seq, 1)
    g2 = gamma_upper(seq, 2)
    if scales is None:
        scales = default_scale_grid(dirs)
    scales = np.sort(np.asarray(scales, dtype=float))
    sup, integral = entropy_functionals(dirs, scales)
    counts = cover_counts(dirs, scales)
    return ComplexityReport(
        gamma1_upper=g1,
        gamma2_upper=g2,
        gamma1_entropy_sup=sup,
        entropy_integral_1=integral,
        cover_sizes={float(s): int(c) for s, c in zip(scales, counts)},
        diameter=diameter(dirs),
    )


def maximizing_scale(dirs: DirectionSet, scales=None):
    """(delta*, delta*·log N(delta*)) maximizing the entropy product."""
    if scales is None:
        scales = default_scale_grid(dirs)
    scales = np.sort(np.asarray(scales, dtype=float))
    counts = cover_counts(dirs, scales)
    prod = scales * np.log(counts.astype(float))
    j = int(np.argmax(prod))
    return float(scales[j]), float(prod[j])
