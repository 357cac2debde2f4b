"""Explicit counterexample geometries: spiked direction sets whose projected
samples provably misbehave (coordinate atoms, heavy coordinate tails, and a
variance-pointwise failure for the uniform cube), together with their exact
reference laws and predicted deviation floors."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import optimize

from .classes import DirectionSet, sparse_directions, pointwise_class_deviation
from .complexity import gamma_upper, greedy_admissible_sequence
from .laws import Law1D, pareto_law, rademacher_law, two_sparse_projection_law
from .models import (ConfigurationError, LazySample, VectorModel, sample,
                     splitmix64)

DIM_CAP = 1 << 22


def spiked_set(d: int, delta: float) -> DirectionSet:
    """The d-1 directions sqrt(1-delta^2)*e_1 + delta*e_k, k = 2..d."""
    if d < 2:
        raise ValueError("need d >= 2")
    if not (0.0 < delta < 1.0):
        raise ValueError("delta must lie in (0, 1)")
    a = math.sqrt(1.0 - delta * delta)
    ks = np.arange(2, d + 1, dtype=np.int64)
    return sparse_directions(ks, np.full(d - 1, a), np.full(d - 1, delta), d=d)


@dataclass(frozen=True)
class CounterexampleScenario:
    case: str
    model: VectorModel
    dirs: DirectionSet
    m: int
    t_probe: float
    predicted_floor: float
    projection_law: Law1D
    params: dict = field(default_factory=dict)


def scenario_gamma1_upper(scn: CounterexampleScenario) -> float:
    seq = greedy_admissible_sequence(scn.dirs)
    return gamma_upper(seq, 1)


def atom_scenario(m: int, delta: float = 0.05) -> CounterexampleScenario:
    """Product Rademacher model probed at the left atom t0 = -1.

    The spike dimension count is 4 * beta^(-|I|) for the index set
    I = {i : first coordinate <= t0} of typical size ceil(H(t0)*m*(1-eps)),
    which keeps the bad-coordinate event likely at desk scale."""
    if m < 8:
        raise ValueError("need m >= 8")
    if not (0.0 < delta < 0.1):
        raise ValueError("delta must lie in (0, 1/10)")
    eta = 0.5          # atom mass of the Rademacher coordinate
    t0 = -1.0          # left atom (one-sided probes stay uniform across cases)
    h_t0 = 0.5         # H(t0) = P(w <= -1)
    alpha = 0.1
    beta = 0.5         # P(w >= alpha)
    eps = beta * eta / (4.0 * h_t0)          # = 1/8
    size_i = int(math.ceil(h_t0 * m * (1.0 - eps)))
    d = int(math.ceil(4.0 * beta ** (-size_i)))
    if d > DIM_CAP:
        raise ConfigurationError(
            f"required dimension {d} exceeds the cap {DIM_CAP}; reduce m")
    a = math.sqrt(1.0 - delta * delta)
    # mirrored probe inequality: -sqrt(1-delta^2) - alpha*delta <= t0
    assert -a - alpha * delta <= t0 + 1e-12
    coord = rademacher_law()
    law = two_sparse_projection_law(coord, a, delta)
    model = VectorModel(kind="product", d=d, coord=coord)
    return CounterexampleScenario(
        case="atom", model=model, dirs=spiked_set(d, delta), m=m, t_probe=t0,
        predicted_floor=beta * eta / 4.0, projection_law=law,
        params={"delta": delta, "d": d, "eta": eta, "beta": beta,
                "alpha": alpha, "eps": eps, "size_I": size_i, "t0": t0,
                "H_t0": h_t0},
    )


def heavy_tail_scenario(m: int, coord: Optional[Law1D] = None) -> CounterexampleScenario:
    """Heavy-tailed product model probed at t = -2.

    Chooses tail depth t > 20 with P(w <= -t) >= exp(-5t/m), sets
    delta = 2/t, and asks for 4 * beta^(-m) spike dimensions.  That count is
    astronomical for polynomial tails, so it is clamped at the cap and the
    scenario records that the asymptotic regime is only partially realized.
    """
    if m < 8:
        raise ValueError("need m >= 8")
    if coord is None:
        coord = pareto_law(2.5)
    if coord.tail_constant is not None:
        raise ConfigurationError("heavy-tail scenario needs a law without "
                                 "subexponential decay")
    l_eff = m / 5.0

    def gap(t):
        return math.log(max(float(coord.tail_two_sided(t)) / 2.0, 1e-300)) + t / l_eff

    t_lo = 21.0
    if gap(t_lo) >= 0.0:
        t_star = t_lo
    else:
        t_hi = t_lo
        while gap(t_hi) < 0.0:
            t_hi *= 2.0
            if t_hi > 1e9:
                raise ConfigurationError("no admissible tail depth found")
        t_star = float(optimize.brentq(gap, t_lo, t_hi, xtol=1e-9))
        t_star = max(t_star, t_lo)
    beta = float(coord.tail_two_sided(t_star)) / 2.0  # P(w <= -t), symmetric
    delta = 2.0 / t_star
    d_raw = 4.0 * beta ** (-float(m))
    capped = not (d_raw <= DIM_CAP)
    d = DIM_CAP if capped else int(math.ceil(d_raw))
    a = math.sqrt(1.0 - delta * delta)
    law = two_sparse_projection_law(coord, a, delta)
    model = VectorModel(kind="product", d=d, coord=coord)
    return CounterexampleScenario(
        case="heavy_tail", model=model, dirs=spiked_set(d, delta), m=m,
        t_probe=-2.0, predicted_floor=0.1, projection_law=law,
        params={"delta": delta, "d": d, "t_tail": t_star, "beta": beta,
                "L_eff": l_eff, "cap_bound": capped},
    )


def variance_scenario(m: int, d: Optional[int] = None,
                      delta: Optional[float] = None) -> CounterexampleScenario:
    """Uniform cube on [-sqrt(3), sqrt(3)]^d probed at t0 = -sqrt(3) with
    delta = 1/sqrt(m); the probe CDF value is exact from the trapezoid form.
    """
    root = math.isqrt(m)
    if m < 100 or root * root != m:
        raise ValueError("m must be a perfect square >= 100")
    if delta is None:
        delta = 1.0 / root
    if d is None:
        d = min(10 ** math.ceil(root / 3.0), DIM_CAP)
    if d > DIM_CAP:
        raise ConfigurationError(f"dimension {d} exceeds the cap {DIM_CAP}")
    a = math.sqrt(1.0 - delta * delta)
    # deterministic inequality behind the construction, on the [-1,1] scale
    assert a * (-1.0 + 0.7 * delta) - 0.8 * delta <= -1.0 + 1e-12
    from .laws import uniform_coord_law
    coord = uniform_coord_law()
    law = two_sparse_projection_law(coord, a, delta)
    model = VectorModel(kind="uniform_cube", d=d)
    t0 = -math.sqrt(3.0)
    f_probe = float(law.cdf(t0))
    sigma2 = f_probe * (1.0 - f_probe)
    return CounterexampleScenario(
        case="variance", model=model, dirs=spiked_set(d, delta), m=m,
        t_probe=t0, predicted_floor=delta / 12.0, projection_law=law,
        params={"delta": delta, "d": d, "f_probe": f_probe,
                "sigma2_probe": sigma2, "t0": t0},
    )


def run_counterexample_trials(scn: CounterexampleScenario, trials: int,
                              base_seed: int):
    """Per-trial sup pointwise deviation at the scenario probe.

    Returns (sup_deviations, argmax_direction) arrays of length `trials`.
    Samples are streamed; reference laws are the exact projection laws."""
    sups = np.empty(trials)
    arg = np.empty(trials, dtype=np.int64)
    for t in range(trials):
        seed = splitmix64(base_seed, t)
        src = LazySample(scn.model, scn.m, seed)
        sups[t], arg[t] = pointwise_class_deviation(
            src, scn.dirs, scn.projection_law, scn.t_probe)
    return sups, arg
