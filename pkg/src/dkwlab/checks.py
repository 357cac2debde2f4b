"""Pathwise and Monte Carlo inequality checks that turn distributional
stability facts into regression tests: perturbation stability of the CDF
sup-deviation, grid continuity, level-set symmetric differences, and
two-sided subexponential tail domination."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .ecdf import Ecdf, build_ecdf, grid_deviation, ks_sup_deviation
from .laws import Law1D, std_normal_law
from .models import ConfigurationError, SampleBatch, VectorModel, splitmix64


@dataclass(frozen=True)
class InequalityCheck:
    name: str
    lhs: float
    rhs: float
    holds: bool
    slack: float
    context: dict = field(default_factory=dict)


def _finish(name, lhs, rhs, tol, context) -> InequalityCheck:
    return InequalityCheck(name=name, lhs=float(lhs), rhs=float(rhs),
                           holds=bool(lhs <= rhs + tol),
                           slack=float(rhs - lhs), context=context)


def check_perturbation_stability(batch: SampleBatch, x: np.ndarray,
                                 y: np.ndarray, ref_x: Law1D, ref_y: Law1D,
                                 diff_law: Law1D, r: float) -> InequalityCheck:
    """sup|F_m,x - F_x| <= sup|F_m,y - F_y| + [P + P_m](|<X,x-y>| >= r) + 2rD.

    Requires exact laws for both projections and for the difference; D is
    the density bound of the y-projection law.  Deterministic: must hold on
    every sample."""
    for law in (ref_x, ref_y, diff_law):
        if law.is_oracle:
            raise ConfigurationError("perturbation check requires exact laws")
    if ref_y.density_bound is None:
        raise ConfigurationError("y-projection law needs a density bound")
    px = batch.values @ np.asarray(x, dtype=float)
    py = batch.values @ np.asarray(y, dtype=float)
    lhs = ks_sup_deviation(build_ecdf(px), ref_x).sup_deviation
    ks_y = ks_sup_deviation(build_ecdf(py), ref_y).sup_deviation
    p_diff = float(diff_law.tail_two_sided(r))
    pm_diff = float(np.mean(np.abs(px - py) >= r))
    rhs = ks_y + p_diff + pm_diff + 2.0 * r * ref_y.density_bound
    return _finish("perturbation_stability", lhs, rhs, 0.0,
                   {"r": r, "m": batch.m, "p_diff": p_diff,
                    "pm_diff": pm_diff, "ks_y": ks_y})


def check_grid_continuity(e: Ecdf, ref: Law1D, delta: float) -> InequalityCheck:
    """sup|F_m - F| <= delta + max over the delta-grid of the quantile-pulled
    deviations.  Deterministic for continuous invertible references."""
    if not ref.is_continuous:
        raise ConfigurationError("grid continuity check needs a continuous law")
    lhs = ks_sup_deviation(e, ref).sup_deviation
    rhs = delta + grid_deviation(e, ref, delta)
    return _finish("grid_continuity", lhs, rhs, 0.0,
                   {"delta": delta, "m": e.m})


def _bivariate_gaussian_pair(rho: float, n: int, rng) -> tuple:
    z1 = rng.standard_normal(n)
    z2 = rng.standard_normal(n)
    return z1, rho * z1 + math.sqrt(max(1.0 - rho * rho, 0.0)) * z2


def check_level_set_symmetric_difference(model: VectorModel, x, y, u: float,
                                         r: float, n_mc: int,
                                         seed: int) -> InequalityCheck:
    """MC estimate of P(exactly one of the u-level events occurs) against
    4*(P(|<X,x-y>| >= r) + r*D).  Gaussian models only (exact quantiles and
    difference law); the tolerance is a 3-sigma binomial band plus 3/n_mc."""
    if model.kind != "gaussian":
        raise ConfigurationError("symmetric-difference check is gaussian-only")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    law = std_normal_law()
    q = float(law.quantile(u))
    rho = float(np.clip(x @ y, -1.0, 1.0))
    rng = np.random.default_rng(splitmix64(seed, 0x53D1FF))
    px, py = _bivariate_gaussian_pair(rho, n_mc, rng)
    lhs = float(np.mean((px <= q) != (py <= q)))
    dist = float(np.linalg.norm(x - y))
    scale = max(dist, 1e-300)
    p_diff = float(law.tail_two_sided(r / scale))
    rhs = 4.0 * (p_diff + r * law.density_bound)
    tol = 3.0 * math.sqrt(lhs * (1.0 - lhs) / n_mc) + 3.0 / n_mc
    return _finish("level_set_symmetric_difference", lhs, rhs, tol,
                   {"u": u, "r": r, "n_mc": n_mc, "dist": dist,
                    "rho": rho, "mc_tolerance": tol})


def check_subexp_tail(law: Law1D, L: float, t_grid) -> InequalityCheck:
    """max over the grid of P(|Z| >= t*L) - 2*exp(-t); `holds` means the
    two-sided tail is dominated everywhere on the grid.  For violations the
    context reports a concrete violating t (refined by root-finding when the
    law is continuous)."""
    t_grid = np.asarray(t_grid, dtype=float)
    tails = np.asarray(law.tail_two_sided(t_grid * L), dtype=float)
    bound = 2.0 * np.exp(-t_grid)
    gaps = tails - bound
    j = int(np.argmax(gaps))
    lhs = float(gaps[j])
    ctx = {"L": L, "t_at_max": float(t_grid[j])}
    if lhs > 0.0:
        viol = np.nonzero(gaps > 0)[0]
        t_first = float(t_grid[viol[0]])
        if law.is_continuous and viol[0] > 0:
            t_prev = float(t_grid[viol[0] - 1])
            f = lambda t: float(law.tail_two_sided(t * L)) - 2.0 * math.exp(-t)
            try:
                t_first = float(optimize.brentq(f, t_prev, t_first, xtol=1e-9))
            except ValueError:
                pass
        ctx["violating_t"] = t_first
    return _finish("subexp_tail", lhs, 0.0, 0.0, ctx)


# ---------------------------------------------------------------------------
# campaigns

def campaign_grid_continuity(n_instances: int, seed: int,
                             m_range=(20, 1000)) -> list:
    out = []
    law = std_normal_law()
    rng = np.random.default_rng(splitmix64(seed, 0xC017))
    for i in range(n_instances):
        m = int(rng.integers(m_range[0], m_range[1] + 1))
        e = build_ecdf(rng.standard_normal(m))
        delta = float(rng.uniform(0.005, 0.24))
        chk = check_grid_continuity(e, law, delta)
        out.append(chk)
    return out


def campaign_perturbation(n_instances: int, seed: int, d: int = 8,
                          m_range=(50, 500)) -> list:
    from .models import sample
    out = []
    law = std_normal_law()
    rng = np.random.default_rng(splitmix64(seed, 0x9E27))
    for i in range(n_instances):
        m = int(rng.integers(m_range[0], m_range[1] + 1))
        x = rng.standard_normal(d)
        x /= np.linalg.norm(x)
        y = x + rng.standard_normal(d) * rng.uniform(0.01, 0.3)
        y /= np.linalg.norm(y)
        model = VectorModel(kind="gaussian", d=d)
        batch = sample(model, m, splitmix64(seed, 0xBA7C, i))
        scale = float(np.linalg.norm(x - y))
        diff = _scaled_normal_law(scale)
        r = float(rng.uniform(0.05, 1.0))
        out.append(check_perturbation_stability(batch, x, y, law, law, diff, r))
    return out


def _scaled_cdf(scale, t):
    from scipy.special import ndtr
    return ndtr(np.asarray(t, dtype=float) / scale) if scale > 0 else \
        (np.asarray(t, dtype=float) >= 0).astype(float)


def _scaled_quantile(scale, u):
    from scipy.special import ndtri
    return scale * ndtri(np.asarray(u, dtype=float))


def _scaled_normal_law(scale: float) -> Law1D:
    from functools import partial
    return Law1D(name=f"normal_scale_{scale:.6g}",
                 cdf_fn=partial(_scaled_cdf, scale),
                 quantile_fn=partial(_scaled_quantile, scale),
                 density_bound=(1.0 / (scale * math.sqrt(2 * math.pi))
                                if scale > 0 else None),
                 tail_constant=1.7 * scale if scale > 0 else None,
                 mean=0.0, var=scale * scale)


def campaign_symmetric_difference(n_mc: int, seed: int,
                                  dists=(0.05, 0.1, 0.2),
                                  levels=(0.1, 0.5, 0.9), d: int = 8) -> list:
    out = []
    model = VectorModel(kind="gaussian", d=d)
    for dist in dists:
        # unit pair at prescribed distance: <x,y> = 1 - dist^2/2
        x = np.zeros(d)
        x[0] = 1.0
        y = np.zeros(d)
        y[0] = 1.0 - dist**2 / 2.0
        y[1] = math.sqrt(max(1.0 - y[0]**2, 0.0))
        r = dist * math.log(math.e / dist)
        for u in levels:
            out.append(check_level_set_symmetric_difference(
                model, x, y, u, r, n_mc, splitmix64(seed, int(dist * 1e6),
                                                    int(u * 1e6))))
    return out


def campaign_subexp_tails(seed: int = 0) -> list:
    from .laws import laplace_law, pareto_law
    grid = np.linspace(0.05, 20.0, 400)
    return [
        check_subexp_tail(laplace_law(), 2.0, grid),
        check_subexp_tail(std_normal_law(), 1.1, grid),
        check_subexp_tail(pareto_law(2.5), 2.0, grid),
    ]


CAMPAIGNS = {
    "grid": lambda seed: campaign_grid_continuity(1000, seed),
    "perturbation": lambda seed: campaign_perturbation(1000, seed),
    "symdiff": lambda seed: campaign_symmetric_difference(10**6, seed),
    "tails": lambda seed: campaign_subexp_tails(seed),
}
