"""Finite classes of linear functionals indexed by direction sets:
projection evaluation, per-direction reference laws, and class-level sups of
CDF deviations.  Large products are streamed in direction chunks."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .ecdf import (DeviationReport, Ecdf, build_ecdf, ks_sup_deviation,
                   sorted_sup_deviation_rows, sup_distance_between_ecdfs)
from .laws import Law1D
from .models import BLOCK_ELEMS, ConfigurationError, LazySample, SampleBatch

Source = Union[SampleBatch, LazySample]

STREAM_ELEMS = BLOCK_ELEMS  # direction-chunk size for streamed evaluation


@dataclass(frozen=True)
class DirectionSet:
    """A finite A in S^{d-1}: dense (n, d) unit rows, or a two-support form
    with coefficient a on axis e_1 and b on axis e_k (2 <= k <= d).

    `unit=False` relaxes the norm check so that plain point sets can reuse
    the metric machinery (scaling/translation tests, complexity module).
    """

    d: int
    dense: Optional[np.ndarray] = None
    sparse_k: Optional[np.ndarray] = None
    sparse_a: Optional[np.ndarray] = None
    sparse_b: Optional[np.ndarray] = None
    unit: bool = True

    def __post_init__(self):
        if (self.dense is None) == (self.sparse_k is None):
            raise ValueError("exactly one of dense / sparse storage required")
        if self.is_sparse:
            k, a, b = self.sparse_k, self.sparse_a, self.sparse_b
            if not (len(k) == len(a) == len(b)):
                raise ValueError("sparse arrays must have equal length")
            if np.any(k < 2) or np.any(k > self.d):
                raise ValueError("sparse spike index k must satisfy 2 <= k <= d")
            if self.unit and np.any(np.abs(a**2 + b**2 - 1.0) > 1e-9):
                raise ValueError("sparse directions must satisfy a^2 + b^2 = 1")
        else:
            if self.dense.ndim != 2 or self.dense.shape[1] != self.d:
                raise ValueError("dense storage must be (n, d)")
            if self.unit:
                norms = np.linalg.norm(self.dense, axis=1)
                if np.any(np.abs(norms - 1.0) > 1e-9):
                    raise ValueError("dense directions must have unit norm")

    @property
    def is_sparse(self) -> bool:
        return self.sparse_k is not None

    @property
    def n(self) -> int:
        return len(self.sparse_k) if self.is_sparse else self.dense.shape[0]

    @property
    def is_uniform_spiked(self) -> bool:
        """Constant (a, b), pairwise-distinct spike axes: an equilateral set."""
        if not self.is_sparse or self.n < 2:
            return False
        a, b, k = self.sparse_a, self.sparse_b, self.sparse_k
        return (np.all(a == a[0]) and np.all(b == b[0])
                and len(np.unique(k)) == len(k))

    def densify(self) -> np.ndarray:
        if not self.is_sparse:
            return self.dense
        out = np.zeros((self.n, self.d))
        out[:, 0] = self.sparse_a
        out[np.arange(self.n), self.sparse_k - 1] = self.sparse_b
        return out

    def point(self, i: int) -> np.ndarray:
        if self.is_sparse:
            v = np.zeros(self.d)
            v[0] = self.sparse_a[i]
            v[self.sparse_k[i] - 1] = self.sparse_b[i]
            return v
        return self.dense[i]

    def dist_from(self, i: int) -> np.ndarray:
        """Euclidean distances from direction i to every direction."""
        if self.is_sparse:
            a, b, k = self.sparse_a, self.sparse_b, self.sparse_k
            sq = (a - a[i]) ** 2 + np.where(k == k[i],
                                            (b - b[i]) ** 2,
                                            b ** 2 + b[i] ** 2)
            return np.sqrt(np.maximum(sq, 0.0))
        diff = self.dense - self.dense[i]
        return np.linalg.norm(diff, axis=1)

    def subset(self, idx) -> "DirectionSet":
        if self.is_sparse:
            return DirectionSet(d=self.d, sparse_k=self.sparse_k[idx],
                                sparse_a=self.sparse_a[idx],
                                sparse_b=self.sparse_b[idx], unit=self.unit)
        return DirectionSet(d=self.d, dense=self.dense[idx], unit=self.unit)


def dense_directions(matrix, unit: bool = True) -> DirectionSet:
    mat = np.atleast_2d(np.asarray(matrix, dtype=float))
    return DirectionSet(d=mat.shape[1], dense=mat, unit=unit)


def sparse_directions(k, a, b, d: int, unit: bool = True) -> DirectionSet:
    return DirectionSet(d=d, sparse_k=np.asarray(k, dtype=np.int64),
                        sparse_a=np.asarray(a, dtype=float),
                        sparse_b=np.asarray(b, dtype=float), unit=unit)


def write_directions(dirs: DirectionSet, path: str) -> None:
    with open(path, "w") as fh:
        if dirs.is_sparse:
            for k, a, b in zip(dirs.sparse_k, dirs.sparse_a, dirs.sparse_b):
                fh.write("sparse %d %.17g %.17g\n" % (k, a, b))
        else:
            for row in dirs.dense:
                fh.write("dense " + " ".join("%.17g" % v for v in row) + "\n")


def read_directions(path: str, d: Optional[int] = None) -> DirectionSet:
    ks, as_, bs = [], [], []
    rows = []
    with open(path) as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "sparse":
                ks.append(int(parts[1]))
                as_.append(float(parts[2]))
                bs.append(float(parts[3]))
            elif parts[0] == "dense":
                rows.append([float(v) for v in parts[1:]])
            else:
                raise ValueError(f"unknown direction record: {parts[0]!r}")
    if rows and ks:
        raise ValueError("mixed dense/sparse direction files are not supported")
    if rows:
        return dense_directions(np.asarray(rows))
    if d is None:
        d = max(ks)
    return sparse_directions(ks, as_, bs, d=d)


# ---------------------------------------------------------------------------
# projections

def project_block(source: Source, dirs: DirectionSet, lo: int, hi: int,
                  first_col: Optional[np.ndarray] = None) -> np.ndarray:
    """Projections of the sample on directions [lo, hi) as a (hi-lo, m) array.

    `first_col` lets chunked callers reuse the sample's first coordinate for
    two-support direction sets instead of refetching it per chunk."""
    if source.d != dirs.d:
        raise ConfigurationError("sample/direction dimension mismatch")
    if dirs.is_sparse:
        k = dirs.sparse_k[lo:hi]
        a = dirs.sparse_a[lo:hi, None]
        b = dirs.sparse_b[lo:hi, None]
        first = source.column(0) if first_col is None else first_col
        cols = k - 1
        if len(cols) and np.all(np.diff(cols) == 1):
            block = source.col_block(int(cols[0]), int(cols[-1]) + 1)
        else:
            block = np.empty((hi - lo, source.m))
            for j, c in enumerate(cols):
                block[j] = source.column(int(c))
        out = np.multiply(block, b)
        if np.all(a == a[0, 0]):
            out += a[0, 0] * first  # broadcast over rows without a temp
        else:
            out += a * first[None, :]
        return out
    D = dirs.dense[lo:hi]
    if isinstance(source, SampleBatch):
        return np.ascontiguousarray(D @ source.values.T)
    out = np.zeros((hi - lo, source.m))
    from .models import _block_cols  # local: block layout of the lazy source
    bc = _block_cols(source.m)
    for c0 in range(0, source.d, bc):
        c1 = min(source.d, c0 + bc)
        out += D[:, c0:c1] @ source.col_block(c0, c1)
    return out


def project(source: Source, dirs: DirectionSet) -> np.ndarray:
    """Full (m, n) projection matrix; use the block form for large n*m."""
    return project_block(source, dirs, 0, dirs.n).T


@dataclass(frozen=True)
class ClassDeviationReport:
    sup_over_class: float
    argmax_direction: int
    per_direction: Optional[list] = None
    ref_kind: str = "exact"
    winner: Optional[DeviationReport] = None


def _ref_for(refs, j: int) -> Law1D:
    return refs if isinstance(refs, Law1D) else refs[j]


def _check_refs(refs, n: int) -> str:
    if isinstance(refs, Law1D):
        return "oracle" if refs.is_oracle else "exact"
    if refs is None or len(refs) != n:
        raise ConfigurationError("need one reference law per direction")
    return "oracle" if any(r.is_oracle for r in refs) else "exact"


def class_sup_ks(source: Source, dirs: DirectionSet, refs,
                 keep_per_direction: bool = False,
                 chunk_elems: int = STREAM_ELEMS) -> ClassDeviationReport:
    """sup over directions of the exact CDF sup-deviation of the projected
    sample; ties broken by the smallest direction index."""
    ref_kind = _check_refs(refs, dirs.n)
    m = source.m
    shared_cont = isinstance(refs, Law1D) and refs.is_continuous
    best = -1.0
    best_j = 0
    per: Optional[list] = [] if keep_per_direction else None
    chunk = max(1, chunk_elems // max(m, 1))
    first_col = source.column(0) if dirs.is_sparse else None
    for lo in range(0, dirs.n, chunk):
        hi = min(dirs.n, lo + chunk)
        block = project_block(source, dirs, lo, hi, first_col=first_col)
        if shared_cont and not keep_per_direction:
            block.sort(axis=1)
            devs = sorted_sup_deviation_rows(block, refs)
        else:
            devs = np.empty(hi - lo)
            for j in range(hi - lo):
                e = build_ecdf(block[j])
                ref = _ref_for(refs, lo + j)
                if ref.is_oracle:
                    other = Ecdf(sorted_values=ref.sample_values,
                                 m=len(ref.sample_values))
                    rep = None
                    devs[j] = sup_distance_between_ecdfs(e, other)
                else:
                    rep = ks_sup_deviation(e, ref)
                    devs[j] = rep.sup_deviation
                if per is not None:
                    per.append(rep if rep is not None else DeviationReport(
                        float(devs[j]), float("nan"), "right", float("nan")))
        jloc = int(np.argmax(devs))
        if devs[jloc] > best:
            best = float(devs[jloc])
            best_j = lo + jloc
    winner_ref = _ref_for(refs, best_j)
    winner = None
    if not winner_ref.is_oracle:
        proj = project_block(source, dirs, best_j, best_j + 1,
                             first_col=first_col)[0]
        winner = ks_sup_deviation(build_ecdf(proj), winner_ref)
        best = winner.sup_deviation if per is None else best
    return ClassDeviationReport(sup_over_class=best, argmax_direction=best_j,
                                per_direction=per, ref_kind=ref_kind,
                                winner=winner)


def pointwise_class_deviation(source: Source, dirs: DirectionSet, refs,
                              t: float,
                              chunk_elems: int = STREAM_ELEMS):
    """(sup_j |F_{m,j}(t) - F_j(t)|, argmax j) at the fixed abscissa t."""
    _check_refs(refs, dirs.n)
    m = source.m
    best = -1.0
    best_j = 0
    chunk = max(1, chunk_elems // max(m, 1))
    first_col = source.column(0) if dirs.is_sparse else None
    if isinstance(refs, Law1D):
        f_shared = float(refs.cdf(t))
    for lo in range(0, dirs.n, chunk):
        hi = min(dirs.n, lo + chunk)
        block = project_block(source, dirs, lo, hi, first_col=first_col)
        fm = (block <= t).sum(axis=1) / m
        if isinstance(refs, Law1D):
            devs = np.abs(fm - f_shared)
        else:
            fr = np.array([float(refs[lo + j].cdf(t)) for j in range(hi - lo)])
            devs = np.abs(fm - fr)
        jloc = int(np.argmax(devs))
        if devs[jloc] > best:
            best = float(devs[jloc])
            best_j = lo + jloc
    return best, best_j
