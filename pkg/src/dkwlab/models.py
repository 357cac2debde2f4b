"""Isotropic random-vector models and reproducible sampling.

Samples are generated coordinate-block by coordinate-block from independent
per-block streams, so a full matrix and any column slice of it are
bit-identical for the same (model, m, seed).  This is what makes streamed
evaluation over huge dimension counts reproducible.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .laws import SQRT3, COORD_LAWS, Law1D, ecdf_law, std_normal_law

BLOCK_ELEMS = 1 << 24          # elements per generation block (~134 MB f64)
SAMPLE_ELEM_CAP = 1 << 27      # refuse to materialize bigger batches


class ConfigurationError(ValueError):
    pass


def splitmix64(*parts: int) -> int:
    """Deterministic 64-bit mix of integers (SplitMix64 finalizer chain)."""
    z = 0
    for p in parts:
        z = (z + (p & 0xFFFFFFFFFFFFFFFF) + 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF
        z ^= z >> 30
        z = (z * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
        z ^= z >> 27
        z = (z * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
        z ^= z >> 31
    return z


@dataclass(frozen=True)
class VectorModel:
    """gaussian | product (iid copies of `coord`) | uniform_cube."""

    kind: str
    d: int
    coord: Optional[Law1D] = None

    def __post_init__(self):
        if self.kind not in ("gaussian", "product", "uniform_cube"):
            raise ConfigurationError(f"unsupported model kind: {self.kind!r}")
        if self.d < 1:
            raise ConfigurationError("dimension must be >= 1")
        if self.kind == "product" and self.coord is None:
            raise ConfigurationError("product models need a coordinate law")

    def coordinate_law(self) -> Law1D:
        if self.kind == "gaussian":
            return std_normal_law()
        if self.kind == "uniform_cube":
            return COORD_LAWS["uniform"]()
        return self.coord


def model_from_spec(spec: dict) -> VectorModel:
    kind = spec.get("kind")
    d = spec.get("d")
    coord = None
    if kind == "product":
        cname = spec.get("coord")
        if cname not in COORD_LAWS:
            raise ConfigurationError(f"unknown coordinate law: {cname!r}")
        coord = COORD_LAWS[cname]()
    if not isinstance(d, int):
        raise ConfigurationError("model d must be an integer")
    return VectorModel(kind=kind, d=d, coord=coord)


def _block_cols(m: int) -> int:
    return max(1, BLOCK_ELEMS // max(m, 1))


def _fill_block(model: VectorModel, m: int, seed: int, block: int) -> np.ndarray:
    """Columns [block*bc, min(d, (block+1)*bc)) as a (cols, m) array."""
    bc = _block_cols(m)
    lo = block * bc
    hi = min(model.d, lo + bc)
    rng = np.random.default_rng(splitmix64(seed, 0xB10C, block))
    if model.kind == "gaussian":
        return rng.standard_normal((hi - lo, m))
    if model.kind == "uniform_cube":
        return SQRT3 * (2.0 * rng.random((hi - lo, m)) - 1.0)
    u = rng.random((hi - lo, m))
    np.clip(u, 1e-300, None, out=u)  # quantile domain is (0, 1]
    return model.coord.quantile_fn(u)


@dataclass(frozen=True)
class SampleBatch:
    """m rows of independent draws from `model`; bit-reproducible per seed."""

    values: np.ndarray  # (m, d)
    m: int
    seed: int
    model: VectorModel

    @property
    def d(self) -> int:
        return self.model.d

    def col_block(self, lo: int, hi: int) -> np.ndarray:
        return np.ascontiguousarray(self.values[:, lo:hi].T)

    def column(self, j: int) -> np.ndarray:
        return self.values[:, j]


@dataclass(frozen=True)
class LazySample:
    """Column-streamed view of the same sample `sample()` would produce.

    Keeps the two most recent generation blocks cached so that sequential
    chunked scans generate every block exactly once."""

    model: VectorModel
    m: int
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "_cache", {})

    @property
    def d(self) -> int:
        return self.model.d

    def _block(self, b: int) -> np.ndarray:
        cache = self._cache
        if b not in cache:
            if len(cache) > 1:
                cache.pop(min(cache))
            cache[b] = _fill_block(self.model, self.m, self.seed, b)
        return cache[b]

    def col_block(self, lo: int, hi: int) -> np.ndarray:
        bc = _block_cols(self.m)
        parts = []
        b = lo // bc
        while b * bc < hi:
            blk = self._block(b)
            s = max(lo - b * bc, 0)
            e = min(hi - b * bc, blk.shape[0])
            parts.append(blk[s:e])
            b += 1
        return parts[0] if len(parts) == 1 else np.vstack(parts)

    def column(self, j: int) -> np.ndarray:
        return self.col_block(j, j + 1)[0].copy()


def sample(model: VectorModel, m: int, seed: int,
           max_elems: int = SAMPLE_ELEM_CAP) -> SampleBatch:
    """Draw an m-by-d batch; identical (model, m, seed) is bit-identical."""
    if m < 1:
        raise ConfigurationError("m must be >= 1")
    if m * model.d > max_elems:
        raise ConfigurationError(
            f"batch of {m}x{model.d} exceeds the materialization cap; "
            "use LazySample for streamed evaluation"
        )
    bc = _block_cols(m)
    nblocks = (model.d + bc - 1) // bc
    cols = [_fill_block(model, m, seed, b) for b in range(nblocks)]
    values = (cols[0] if nblocks == 1 else np.vstack(cols)).T
    return SampleBatch(values=np.ascontiguousarray(values), m=m, seed=seed, model=model)


def oracle_projection_law(model: VectorModel, direction: np.ndarray,
                          n_oracle: int, seed: int) -> Law1D:
    """ECDF of n_oracle independent projections <X, direction>, flagged as
    an oracle law with resolution 1/n_oracle."""
    if n_oracle < 10**5:
        raise ValueError("oracle laws need n_oracle >= 1e5")
    direction = np.asarray(direction, dtype=float)
    if direction.shape != (model.d,):
        raise ConfigurationError("direction dimension mismatch")
    src = LazySample(model, n_oracle, splitmix64(seed, 0x0AC1E))
    proj = np.zeros(n_oracle)
    bc = _block_cols(n_oracle)
    for lo in range(0, model.d, bc):
        hi = min(model.d, lo + bc)
        blk = src.col_block(lo, hi)            # (cols, n)
        proj += direction[lo:hi] @ blk
    return ecdf_law(proj, name=f"oracle[{model.kind},n={n_oracle},seed={seed}]")
