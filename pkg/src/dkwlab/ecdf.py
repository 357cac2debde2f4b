"""Exact empirical-CDF machinery: evaluation, quantiles, sup-deviation
statistics computed from order statistics, grid deviations and pointwise
variance-weighted deviations."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .laws import Law1D


@dataclass(frozen=True)
class Ecdf:
    sorted_values: np.ndarray
    m: int

    def eval(self, t):
        """F_m(t) = #{i : x_i <= t} / m (right-continuous)."""
        return np.searchsorted(self.sorted_values, t, side="right") / self.m

    def eval_left(self, t):
        return np.searchsorted(self.sorted_values, t, side="left") / self.m


@dataclass(frozen=True)
class DeviationReport:
    sup_deviation: float
    argmax_t: float
    left_or_right: str  # side at which the sup is attained
    sigma_at_argmax: float


def build_ecdf(values) -> Ecdf:
    vals = np.asarray(values, dtype=float)
    if vals.ndim != 1 or len(vals) == 0:
        raise ValueError("need a non-empty 1-d sample")
    if not np.all(np.isfinite(vals)):
        raise ValueError("sample contains non-finite values")
    return Ecdf(sorted_values=np.sort(vals), m=len(vals))


def ecdf_quantile(e: Ecdf, u: float) -> float:
    """Smallest order statistic x_(ceil(u*m)) with F_m(x) >= u."""
    if not (0.0 < u <= 1.0):
        raise ValueError("u must lie in (0, 1]")
    k = int(math.ceil(u * e.m - 1e-9))
    k = min(max(k, 1), e.m)
    return float(e.sorted_values[k - 1])


def deviation_candidates(e: Ecdf, ref: Law1D):
    """Signed candidate deviations at the order statistics.

    Returns (upper, lower): upper_i = i/m - F(x_(i)) is the deviation just at
    x_(i); lower_i = F(x_(i)^-) - (i-1)/m is the one approaching x_(i) from
    the left.  Their maxima give the exact sup-norm distance for any
    reference CDF, atomic or not, because F is monotone between sample points.
    """
    x = e.sorted_values
    i = np.arange(1, e.m + 1)
    fr = np.asarray(ref.cdf(x), dtype=float)
    fl = np.asarray(ref.cdf_left(x), dtype=float)
    return i / e.m - fr, fl - (i - 1) / e.m


def ks_sup_deviation(e: Ecdf, ref: Law1D) -> DeviationReport:
    """Exact sup_t |F_m(t) - F(t)| with the attaining location and side."""
    upper, lower = deviation_candidates(e, ref)
    iu = int(np.argmax(upper))
    il = int(np.argmax(lower))
    if upper[iu] >= lower[il]:
        sup = max(float(upper[iu]), 0.0)
        t = float(e.sorted_values[iu])
        side = "right"
        f = float(ref.cdf(t))
    else:
        sup = float(lower[il])
        t = float(e.sorted_values[il])
        side = "left"
        f = float(ref.cdf_left(t))
    sigma = math.sqrt(max(f * (1.0 - f), 0.0))
    return DeviationReport(sup_deviation=sup, argmax_t=t,
                           left_or_right=side, sigma_at_argmax=sigma)


def sup_distance_between_ecdfs(e1: Ecdf, e2: Ecdf) -> float:
    """Exact sup-norm distance between two empirical step functions."""
    bp = np.concatenate([e1.sorted_values, e2.sorted_values])
    right = np.abs(e1.eval(bp) - e2.eval(bp)).max()
    left = np.abs(e1.eval_left(bp) - e2.eval_left(bp)).max()
    return float(max(right, left))


def deviation_grid(delta: float) -> np.ndarray:
    """The level grid {l*delta : l integer >= 1, l*delta < 1}.

    The top index is ceil((1-delta)/delta): stopping at floor((1-delta)/delta)
    can leave a gap of width up to 2*delta below 1 and breaks the pathwise
    sup-deviation bound.
    """
    if not (0.0 < delta < 1.0):
        raise ValueError("delta must lie in (0, 1)")
    n_pts = max(int(math.ceil(1.0 / delta)) - 1, 1)
    while (n_pts + 1) * delta < 1.0:
        n_pts += 1
    while n_pts > 1 and n_pts * delta >= 1.0:
        n_pts -= 1
    return delta * np.arange(1, n_pts + 1)


def grid_deviation(e: Ecdf, ref: Law1D, delta: float) -> float:
    """max over the delta-grid of |F_m(F^{-1}(u)) - u|."""
    if not (0.0 < delta < 0.25):
        raise ValueError("delta must lie in (0, 1/4)")
    u = deviation_grid(delta)
    q = np.asarray(ref.quantile(u), dtype=float)
    return float(np.abs(e.eval(q) - u).max())


def pointwise_deviation(e: Ecdf, ref: Law1D, t: float):
    """(F_m(t), F(t), sigma(t)) with sigma^2 = F(t)(1 - F(t))."""
    fm = float(e.eval(t))
    f = float(ref.cdf(t))
    return fm, f, math.sqrt(max(f * (1.0 - f), 0.0))


def sorted_sup_deviation_rows(sorted_rows: np.ndarray, ref: Law1D) -> np.ndarray:
    """Row-wise exact sup deviation |F_m - F| for pre-sorted samples against a
    continuous reference law.

    Uses max_i max(i/m - u_i, u_i - (i-1)/m) = max_i |u_i - (i-1/2)/m| + 1/(2m),
    valid when the reference CDF has no atoms.
    """
    if not ref.is_continuous:
        raise ValueError("row kernel requires a continuous reference law")
    m = sorted_rows.shape[-1]
    u = np.asarray(ref.cdf_fn(sorted_rows), dtype=float)
    mids = (np.arange(1, m + 1) - 0.5) / m
    np.subtract(u, mids, out=u)
    np.abs(u, out=u)
    return u.max(axis=-1) + 0.5 / m
