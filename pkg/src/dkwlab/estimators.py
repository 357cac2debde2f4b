"""Robust functionals of empirical samples: trimmed means, quantile-domain
integration of monotone test functions, and one-dimensional Wasserstein-1
distances via quantile coupling."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .ecdf import Ecdf, build_ecdf
from .laws import Law1D


@dataclass(frozen=True)
class MonotonePhi:
    """A monotone test function with polynomial growth certificate
    |phi(t)| <= beta * (1 + |t|^p)."""

    name: str
    fn: Callable
    non_decreasing: bool
    p: float
    beta: float

    def __call__(self, t):
        return self.fn(np.asarray(t, dtype=float))

    def validate(self, lo: float = -50.0, hi: float = 50.0, n: int = 1000) -> None:
        grid = np.linspace(lo, hi, n)
        vals = self(grid)
        diffs = np.diff(vals)
        if self.non_decreasing:
            assert np.all(diffs >= -1e-12), f"{self.name}: not non-decreasing"
        else:
            assert np.all(diffs <= 1e-12), f"{self.name}: not non-increasing"
        bound = self.beta * (1.0 + np.abs(grid) ** self.p)
        assert np.all(np.abs(vals) <= bound + 1e-12), f"{self.name}: growth bound"


def _phi_identity(t):
    return t


def _phi_signed_square(t):
    return t * np.abs(t)


def _phi_relu_square(t):
    return np.maximum(t, 0.0) ** 2


class _Indicator:
    def __init__(self, tau):
        self.tau = tau

    def __call__(self, t):
        return (t <= self.tau).astype(float)


def phi_identity() -> MonotonePhi:
    return MonotonePhi("identity", _phi_identity, True, 1.0, 1.0)


def phi_signed_square() -> MonotonePhi:
    return MonotonePhi("signed-square", _phi_signed_square, True, 2.0, 1.0)


def phi_relu_square() -> MonotonePhi:
    return MonotonePhi("relu-square", _phi_relu_square, True, 2.0, 1.0)


def phi_indicator(tau: float) -> MonotonePhi:
    return MonotonePhi(f"indicator:{tau:g}", _Indicator(tau), False, 1.0, 1.0)


def make_phi(spec: str) -> MonotonePhi:
    if spec == "identity":
        return phi_identity()
    if spec == "signed-square":
        return phi_signed_square()
    if spec == "relu-square":
        return phi_relu_square()
    if spec.startswith("indicator:"):
        return phi_indicator(float(spec.split(":", 1)[1]))
    raise ValueError(f"unknown test function spec: {spec!r}")


@dataclass(frozen=True)
class EstimateRecord:
    direction_index: int
    phi_name: str
    estimate: float
    target: Optional[float]
    error: Optional[float]
    delta_used: float


# ---------------------------------------------------------------------------

def trimmed_mean(values, delta: float) -> float:
    """Sort, drop the ceil(delta*m) smallest and largest values, and divide
    the remaining sum by m (not by the retained count)."""
    vals = np.asarray(values, dtype=float)
    if vals.ndim != 1 or len(vals) == 0:
        raise ValueError("need a non-empty 1-d sample")
    if not (0.0 <= delta < 0.1):
        raise ValueError("delta must lie in [0, 1/10)")
    m = len(vals)
    g = int(math.ceil(delta * m - 1e-12))
    if 2 * g >= m:
        return 0.0
    s = np.sort(vals)
    return float(s[g:m - g].sum() / m)


def quantile_integral(e: Ecdf, phi: MonotonePhi, delta: float) -> float:
    """Exact integral of u -> phi(empirical quantile at u) over
    [sqrt(delta), 1 - sqrt(delta)]; the integrand is a step function, so the
    value is a finite sum with no quadrature error."""
    if not (0.0 < delta <= 0.01):
        raise ValueError("delta must lie in (0, 1/100]")
    root = math.sqrt(delta)
    m = e.m
    i = np.arange(1, m + 1)
    seg_lo = np.maximum((i - 1) / m, root)
    seg_hi = np.minimum(i / m, 1.0 - root)
    lengths = np.clip(seg_hi - seg_lo, 0.0, None)
    return float(np.dot(phi(e.sorted_values), lengths))


def inverse_shift_contained(e: Ecdf, ref: Law1D, delta: float) -> bool:
    """Whether the empirical quantile function lies inside the band
    [F^{-1}(u - sqrt(delta)), F^{-1}(u + sqrt(delta))] for every u in
    (sqrt(delta), 1 - sqrt(delta)); exact via segment endpoints."""
    root = math.sqrt(delta)
    m = e.m
    i = np.arange(1, m + 1)
    # empirical quantile equals x_(i) on ((i-1)/m, i/m]
    seg_lo = np.maximum((i - 1) / m, root)
    seg_hi = np.minimum(i / m, 1.0 - root)
    active = seg_lo < seg_hi
    x = e.sorted_values[active]
    hi_args = np.clip(seg_hi[active] - root, 1e-15, 1.0)
    lo_args = np.clip(seg_lo[active] + root, 1e-15, 1.0)
    lower_ok = x >= np.asarray(ref.quantile(hi_args)) - 1e-12
    upper_ok = x <= np.asarray(ref.quantile(lo_args)) + 1e-12
    return bool(np.all(lower_ok) and np.all(upper_ok))


def quantile_growth_ok(law: Law1D, u_grid=None) -> bool:
    """|F^{-1}(u)| <= L log(e / min(u, 1-u)) on a grid, for laws with a
    declared subexponential tail constant L."""
    if law.tail_constant is None:
        raise ValueError("law has no tail constant")
    if u_grid is None:
        u_grid = np.geomspace(1e-9, 0.5, 200)
        u_grid = np.concatenate([u_grid, 1.0 - u_grid])
    q = np.abs(np.asarray(law.quantile(u_grid)))
    bound = law.tail_constant * np.log(math.e / np.minimum(u_grid, 1.0 - u_grid))
    return bool(np.all(q <= bound + 1e-9))


# ---------------------------------------------------------------------------
# Wasserstein-1 via quantile coupling

def w1_empirical_vs_law(e: Ecdf, ref: Law1D, n_quad: int = 10_000):
    """W1 distance between an ECDF and a reference law: the integral over
    (0,1) of |empirical quantile - reference quantile|.

    The empirical quantile is piecewise constant, so the integrand is split
    at the i/m breakpoints and only the reference quantile is integrated by
    midpoint quadrature.  Returns (value, reported_error_bound) where the
    bound is the monotone-envelope estimate sum (Q(b)-Q(a)) * len / 2 over
    interior segments plus a crude boundary-cell term.
    """
    if n_quad < 10**3:
        raise ValueError("n_quad must be at least 1e3")
    m = e.m
    edges = np.union1d(np.linspace(0.0, 1.0, n_quad + 1),
                       np.arange(1, m) / m)
    a = edges[:-1]
    b = edges[1:]
    mid = 0.5 * (a + b)
    lengths = b - a
    idx = np.ceil(mid * m - 1e-9).astype(int)
    x = e.sorted_values[np.clip(idx - 1, 0, m - 1)]
    q_mid = np.asarray(ref.quantile(np.clip(mid, 1e-15, 1.0)))
    value = float(np.dot(np.abs(x - q_mid), lengths))
    interior = (a > 0.0) & (b < 1.0)
    qa = np.asarray(ref.quantile(np.clip(a[interior], 1e-15, 1.0)))
    qb = np.asarray(ref.quantile(np.clip(b[interior], 1e-15, 1.0)))
    err = float(np.dot(qb - qa, lengths[interior]) / 2.0)
    # boundary cells: compare their midpoint against the nearest interior node
    if np.any(~interior):
        first, last = 0, len(a) - 1
        err += abs(q_mid[first] - ref.quantile(max(b[first], 1e-15))) * lengths[first]
        err += abs(q_mid[last] - ref.quantile(max(a[last], 1e-15))) * lengths[last]
    return value, err


def w1_between_ecdfs(e1: Ecdf, e2: Ecdf) -> float:
    """Exact W1 distance between two empirical laws (quantile coupling)."""
    m1, m2 = e1.m, e2.m
    if m1 == m2:
        return float(np.abs(e1.sorted_values - e2.sorted_values).mean())
    levels = np.union1d(np.arange(1, m1 + 1) / m1, np.arange(1, m2 + 1) / m2)
    prev = np.concatenate([[0.0], levels[:-1]])
    widths = levels - prev
    i1 = np.clip(np.ceil(levels * m1 - 1e-9).astype(int) - 1, 0, m1 - 1)
    i2 = np.clip(np.ceil(levels * m2 - 1e-9).astype(int) - 1, 0, m2 - 1)
    return float(np.dot(np.abs(e1.sorted_values[i1] - e2.sorted_values[i2]),
                        widths))
