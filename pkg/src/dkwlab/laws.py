"""One-dimensional reference laws: exact CDFs, generalized quantiles, and
oracle (empirical) laws used as ground truth for projected samples.

All CDF / quantile callables accept scalars or numpy arrays and return the
same shape.  Laws are immutable and safe to share across workers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import partial
from typing import Callable, Optional

import numpy as np
from scipy import integrate, optimize, special

SQRT3 = math.sqrt(3.0)


def _maybe_item(x, scalar: bool):
    return float(np.asarray(x).ravel()[0]) if scalar else x


@dataclass(frozen=True)
class Law1D:
    """A one-dimensional law: CDF, generalized (left-continuous) inverse,
    density bound, subexponential tail constant and first two moments.

    ``density_bound is None`` means atomic or unbounded density;
    ``tail_constant is None`` means no subexponential tail decay.
    """

    name: str
    cdf_fn: Callable
    quantile_fn: Callable
    density_bound: Optional[float]
    tail_constant: Optional[float]
    mean: float
    var: float
    cdf_left_fn: Optional[Callable] = None
    atoms: Optional[np.ndarray] = None
    masses: Optional[np.ndarray] = None
    is_oracle: bool = False
    resolution: float = 0.0
    sample_values: Optional[np.ndarray] = None  # sorted, oracle laws only

    def cdf(self, t):
        scalar = np.ndim(t) == 0
        return _maybe_item(self.cdf_fn(np.asarray(t, dtype=float)), scalar)

    def cdf_left(self, t):
        """Left limit of the CDF, exact for atomic laws."""
        fn = self.cdf_left_fn if self.cdf_left_fn is not None else self.cdf_fn
        scalar = np.ndim(t) == 0
        return _maybe_item(fn(np.asarray(t, dtype=float)), scalar)

    def quantile(self, u):
        scalar = np.ndim(u) == 0
        u = np.asarray(u, dtype=float)
        if np.any(u <= 0.0) or np.any(u > 1.0):
            raise ValueError("quantile argument must lie in (0, 1]")
        return _maybe_item(self.quantile_fn(u), scalar)

    @property
    def is_discrete(self) -> bool:
        return self.atoms is not None

    @property
    def is_continuous(self) -> bool:
        return self.atoms is None and not self.is_oracle

    def tail_two_sided(self, s):
        """P(|Z| >= s), exact at atoms via the left limit."""
        scalar = np.ndim(s) == 0
        s = np.asarray(s, dtype=float)
        left = self.cdf_left_fn if self.cdf_left_fn is not None else self.cdf_fn
        val = 1.0 - left(s) + self.cdf_fn(-s)
        return _maybe_item(np.clip(val, 0.0, 1.0), scalar)


# ---------------------------------------------------------------------------
# standard normal

def std_normal_cdf(t):
    """Standard normal CDF, absolute error below 1e-12 on finite reals."""
    scalar = np.ndim(t) == 0
    return _maybe_item(special.ndtr(np.asarray(t, dtype=float)), scalar)


def _gauss_cdf(t):
    return special.ndtr(t)


def _gauss_quantile(u):
    return special.ndtri(u)


def std_normal_law() -> Law1D:
    # P(|Z| >= 1.7 t) <= 2 exp(-t) for all t >= 0: trivial for t <= log 2,
    # and 2 exp(-(1.7 t)^2 / 2) <= 2 exp(-t) once t >= 2/1.7^2 ~ 0.692.
    return Law1D(
        name="std_normal",
        cdf_fn=_gauss_cdf,
        quantile_fn=_gauss_quantile,
        density_bound=1.0 / math.sqrt(2.0 * math.pi),
        tail_constant=1.7,
        mean=0.0,
        var=1.0,
    )


# ---------------------------------------------------------------------------
# discrete laws

def _discrete_cdf(atoms, cum, t):
    idx = np.searchsorted(atoms, t, side="right")
    return np.where(idx > 0, cum[np.maximum(idx - 1, 0)], 0.0)


def _discrete_cdf_left(atoms, cum, t):
    idx = np.searchsorted(atoms, t, side="left")
    return np.where(idx > 0, cum[np.maximum(idx - 1, 0)], 0.0)


def _discrete_quantile(atoms, cum, u):
    idx = np.searchsorted(cum, u, side="left")
    return atoms[np.minimum(idx, len(atoms) - 1)]


def discrete_law(atoms, masses, name: str, tail_constant: Optional[float] = None) -> Law1D:
    atoms = np.asarray(atoms, dtype=float)
    masses = np.asarray(masses, dtype=float)
    if atoms.ndim != 1 or atoms.shape != masses.shape or len(atoms) == 0:
        raise ValueError("atoms and masses must be matching non-empty 1-d arrays")
    if np.any(masses < 0) or abs(masses.sum() - 1.0) > 1e-12:
        raise ValueError("masses must be non-negative and sum to 1")
    order = np.argsort(atoms)
    atoms = atoms[order]
    masses = masses[order]
    cum = np.cumsum(masses)
    cum[-1] = 1.0
    mean = float(np.dot(atoms, masses))
    var = float(np.dot((atoms - mean) ** 2, masses))
    return Law1D(
        name=name,
        cdf_fn=partial(_discrete_cdf, atoms, cum),
        quantile_fn=partial(_discrete_quantile, atoms, cum),
        density_bound=None,
        tail_constant=tail_constant,
        mean=mean,
        var=var,
        cdf_left_fn=partial(_discrete_cdf_left, atoms, cum),
        atoms=atoms,
        masses=masses,
    )


def rademacher_law() -> Law1D:
    # |w| = 1 a.s.; with L = 1.45, P(|w| >= L t) = 0 once t > 1/1.45 ~ 0.6897,
    # and 2 exp(-t) >= 1 for t <= log 2 ~ 0.6931.
    return discrete_law([-1.0, 1.0], [0.5, 0.5], "rademacher", tail_constant=1.45)


# ---------------------------------------------------------------------------
# uniform coordinate on [-sqrt(3), sqrt(3)] (variance 1)

def _uniform_cdf(h, t):
    return np.clip((t + h) / (2.0 * h), 0.0, 1.0)


def _uniform_quantile(h, u):
    return (2.0 * u - 1.0) * h


def uniform_coord_law() -> Law1D:
    h = SQRT3
    return Law1D(
        name="uniform_sqrt3",
        cdf_fn=partial(_uniform_cdf, h),
        quantile_fn=partial(_uniform_quantile, h),
        density_bound=1.0 / (2.0 * h),
        tail_constant=2.5,  # sqrt(3)/log(2) ~ 2.499 makes the tail bound vacuous-safe
        mean=0.0,
        var=1.0,
    )


# ---------------------------------------------------------------------------
# Laplace with variance 1 (scale 1/sqrt(2))

def _laplace_cdf(b, t):
    return np.where(t < 0, 0.5 * np.exp(t / b), 1.0 - 0.5 * np.exp(-t / b))


def _laplace_quantile(b, u):
    return np.where(u < 0.5, b * np.log(2.0 * u), -b * np.log(2.0 * (1.0 - u)))


def laplace_law() -> Law1D:
    b = 1.0 / math.sqrt(2.0)
    # P(|w| >= t) = exp(-sqrt(2) t) <= 2 exp(-t), so L = 1 works.
    return Law1D(
        name="laplace_var1",
        cdf_fn=partial(_laplace_cdf, b),
        quantile_fn=partial(_laplace_quantile, b),
        density_bound=1.0 / (2.0 * b),
        tail_constant=1.0,
        mean=0.0,
        var=1.0,
    )


# ---------------------------------------------------------------------------
# symmetric Pareto-type heavy tail: P(|w| > t) = (t/t_min)^(-kappa), t >= t_min

def _pareto_cdf(tmin, kappa, t):
    t = np.asarray(t, dtype=float)
    out = np.full(t.shape, 0.5)
    neg = t <= -tmin
    pos = t >= tmin
    out[neg] = 0.5 * np.power(-t[neg] / tmin, -kappa)
    out[pos] = 1.0 - 0.5 * np.power(t[pos] / tmin, -kappa)
    return out


def _pareto_quantile(tmin, kappa, u):
    u = np.asarray(u, dtype=float)
    out = np.empty(u.shape)
    lo = u <= 0.5
    out[lo] = -tmin * np.power(2.0 * u[lo], -1.0 / kappa)
    out[~lo] = tmin * np.power(2.0 * (1.0 - u[~lo]), -1.0 / kappa)
    return out


def pareto_law(kappa: float = 2.5) -> Law1D:
    if kappa <= 2.0:
        raise ValueError("kappa must exceed 2 for a finite variance")
    tmin = math.sqrt((kappa - 2.0) / kappa)  # makes the variance exactly 1
    return Law1D(
        name=f"sym_pareto_{kappa:g}",
        cdf_fn=partial(_pareto_cdf, tmin, kappa),
        quantile_fn=partial(_pareto_quantile, tmin, kappa),
        density_bound=kappa / (2.0 * tmin),
        tail_constant=None,  # polynomial tails: no subexponential decay
        mean=0.0,
        var=1.0,
    )


COORD_LAWS = {
    "rademacher": rademacher_law,
    "laplace": laplace_law,
    "pareto": pareto_law,
    "uniform": uniform_coord_law,
    "gaussian": std_normal_law,
}


# ---------------------------------------------------------------------------
# law of a*w' + b*w for iid coordinates w', w distributed as `coord`

def _trapezoid_cdf(A, B, t):
    # CDF of U[-A,A] + U[-B,B], A >= B > 0
    t = np.asarray(t, dtype=float)
    out = np.empty(t.shape)
    lo, hi = -(A + B), A + B
    out[t <= lo] = 0.0
    out[t >= hi] = 1.0
    ramp_l = (t > lo) & (t < -(A - B))
    out[ramp_l] = (t[ramp_l] + A + B) ** 2 / (8.0 * A * B)
    mid = (t >= -(A - B)) & (t <= (A - B))
    out[mid] = 0.5 + t[mid] / (2.0 * A)
    ramp_r = (t > (A - B)) & (t < hi)
    out[ramp_r] = 1.0 - (A + B - t[ramp_r]) ** 2 / (8.0 * A * B)
    return out


def _trapezoid_quantile(A, B, u):
    u = np.asarray(u, dtype=float)
    out = np.empty(u.shape)
    u_ramp = B / (2.0 * A)
    lo = u < u_ramp
    hi = u > 1.0 - u_ramp
    mid = ~(lo | hi)
    out[lo] = -(A + B) + np.sqrt(8.0 * A * B * u[lo])
    out[mid] = (u[mid] - 0.5) * 2.0 * A
    out[hi] = (A + B) - np.sqrt(8.0 * A * B * (1.0 - u[hi]))
    return out


def _quad_cdf(coord_cdf, coord_quantile, a, b, t):
    t = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.empty(t.shape)
    for i, ti in enumerate(t.ravel()):
        val, _ = integrate.quad(
            lambda v: coord_cdf((ti - b * coord_quantile(v)) / a),
            0.0, 1.0, epsabs=1e-8, limit=200,
        )
        out.ravel()[i] = min(max(val, 0.0), 1.0)
    return out


def _quad_quantile(cdf_fn, u):
    u = np.atleast_1d(np.asarray(u, dtype=float))
    out = np.empty(u.shape)
    for i, ui in enumerate(u.ravel()):
        lo, hi = -1.0, 1.0
        while cdf_fn(np.array([lo]))[0] > ui and lo > -1e9:
            lo *= 2.0
        while cdf_fn(np.array([hi]))[0] < ui and hi < 1e9:
            hi *= 2.0
        out.ravel()[i] = optimize.brentq(
            lambda t: cdf_fn(np.array([t]))[0] - ui, lo, hi, xtol=1e-10
        )
    return out


def two_sparse_projection_law(coord: Law1D, a: float, b: float) -> Law1D:
    """Exact law of a*w' + b*w for independent copies w', w of `coord`.

    Enumeration for discrete coordinates, closed trapezoid form for the
    uniform coordinate, the normal law for gaussian coordinates, and adaptive
    quadrature (abs. tol 1e-8) otherwise.
    """
    if abs(a * a + b * b - 1.0) > 1e-9:
        raise ValueError("direction coefficients must satisfy a^2 + b^2 = 1")
    if abs(b) < 1e-15:
        if a > 0:
            return coord
        # symmetric shipped coordinates are reflection-invariant
        return coord
    if coord.name == "std_normal":
        return std_normal_law()
    if coord.is_discrete:
        vals = (a * coord.atoms[:, None] + b * coord.atoms[None, :]).ravel()
        ms = (coord.masses[:, None] * coord.masses[None, :]).ravel()
        uniq, inv = np.unique(vals, return_inverse=True)
        agg = np.zeros(len(uniq))
        np.add.at(agg, inv, ms)
        return discrete_law(uniq, agg, f"proj2[{coord.name};{a:.6g},{b:.6g}]")
    if coord.name == "uniform_sqrt3":
        A, B = SQRT3 * max(abs(a), abs(b)), SQRT3 * min(abs(a), abs(b))
        return Law1D(
            name=f"proj2[{coord.name};{a:.6g},{b:.6g}]",
            cdf_fn=partial(_trapezoid_cdf, A, B),
            quantile_fn=partial(_trapezoid_quantile, A, B),
            density_bound=1.0 / (2.0 * A),
            tail_constant=None,
            mean=0.0,
            var=a * a * coord.var + b * b * coord.var,
        )
    cdf_fn = partial(_quad_cdf, coord.cdf_fn, coord.quantile_fn, abs(a), abs(b))
    dens = None if coord.density_bound is None else coord.density_bound / abs(a)
    return Law1D(
        name=f"proj2[{coord.name};{a:.6g},{b:.6g}]",
        cdf_fn=cdf_fn,
        quantile_fn=partial(_quad_quantile, cdf_fn),
        density_bound=dens,
        tail_constant=None,
        mean=0.0,
        var=a * a * coord.var + b * b * coord.var,
    )


# ---------------------------------------------------------------------------
# oracle (empirical) laws

def _ecdf_cdf(sorted_vals, t):
    return np.searchsorted(sorted_vals, t, side="right") / len(sorted_vals)


def _ecdf_cdf_left(sorted_vals, t):
    return np.searchsorted(sorted_vals, t, side="left") / len(sorted_vals)


def _ecdf_quantile(sorted_vals, u):
    n = len(sorted_vals)
    idx = np.ceil(np.asarray(u, dtype=float) * n - 1e-9).astype(int)
    return sorted_vals[np.clip(idx - 1, 0, n - 1)]


def ecdf_law(values, name: str) -> Law1D:
    """Empirical law of a sample, flagged as an oracle with resolution 1/n."""
    vals = np.sort(np.asarray(values, dtype=float))
    if len(vals) == 0:
        raise ValueError("empty sample")
    return Law1D(
        name=name,
        cdf_fn=partial(_ecdf_cdf, vals),
        quantile_fn=partial(_ecdf_quantile, vals),
        density_bound=None,
        tail_constant=None,
        mean=float(vals.mean()),
        var=float(vals.var()),
        cdf_left_fn=partial(_ecdf_cdf_left, vals),
        atoms=None,
        masses=None,
        is_oracle=True,
        resolution=1.0 / len(vals),
        sample_values=vals,
    )


def validate_law(law: Law1D, grid=None, u_grid=None) -> None:
    """Check the CDF/quantile contracts on a grid; raises AssertionError."""
    if grid is None:
        lo = float(law.quantile(1e-6)) - 1.0
        hi = float(law.quantile(1.0 - 1e-6)) + 1.0
        grid = np.linspace(lo, hi, 4001)
    cdf = law.cdf(grid)
    assert np.all(np.diff(cdf) >= -1e-15), f"{law.name}: cdf not monotone"
    assert cdf[0] <= 2e-6 and cdf[-1] >= 1 - 2e-6, f"{law.name}: cdf limits"
    if u_grid is None:
        u_grid = np.linspace(0.001, 0.999, 199)
    q = law.quantile(u_grid)
    cq = law.cdf(q)
    assert np.all(cq >= u_grid - 1e-9), f"{law.name}: cdf(quantile(u)) < u"
    # generalized-inverse contract: cdf(t) < u strictly below the quantile
    eps = 1e-9 + np.abs(q) * 1e-12
    below = law.cdf(q - np.maximum(eps, 1e-7))
    strict = law.cdf_left(q)
    assert np.all((below < u_grid + 1e-9) | (strict <= u_grid + 1e-9)), (
        f"{law.name}: quantile not minimal"
    )
