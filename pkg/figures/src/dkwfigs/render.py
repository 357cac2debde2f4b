"""Batch plotting of experiment CSV outputs into publication-style raster
figures.  Strictly a consumer of the frozen CSV schemas; all numbers come
from the CSVs, nothing is recomputed here."""
from __future__ import annotations

import csv
import hashlib
import json
import math
import os
from dataclasses import dataclass, field
from typing import Optional

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

KINDS = ("scaling", "exceedance", "counterexample_hist", "estimator_error")

REQUIRED_COLUMNS = {
    "scaling": ("set_label", "m", "median_sup", "gamma1_upper"),
    "exceedance": ("m", "delta", "exceedance_freq"),
    "counterexample_hist": ("sup_pointwise_deviation", "predicted_floor"),
    "estimator_error": ("phi_name", "direction_index", "error"),
}

DPI = 200


class FigureError(ValueError):
    pass


@dataclass(frozen=True)
class FigureSpec:
    kind: str
    inputs: tuple
    output: str
    title: Optional[str] = None
    xlabel: Optional[str] = None
    ylabel: Optional[str] = None


def load_spec(path: str) -> FigureSpec:
    with open(path) as fh:
        raw = json.load(fh)
    return spec_from_dict(raw)


def spec_from_dict(raw: dict) -> FigureSpec:
    kind = raw.get("kind")
    if kind not in KINDS:
        raise FigureError(f"kind must be one of {KINDS}, got {kind!r}")
    inputs = raw.get("inputs") or raw.get("input")
    if isinstance(inputs, str):
        inputs = [inputs]
    if not inputs:
        raise FigureError("at least one input CSV is required")
    for p in inputs:
        if not os.path.exists(p):
            raise FigureError(f"input file not found: {p}")
    output = raw.get("output")
    if not output:
        raise FigureError("output image path is required")
    return FigureSpec(kind=kind, inputs=tuple(inputs), output=output,
                      title=raw.get("title"), xlabel=raw.get("xlabel"),
                      ylabel=raw.get("ylabel"))


def read_columns(path: str, wanted) -> dict:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in wanted if c not in header]
        if missing:
            raise FigureError(
                f"{path}: missing required columns {', '.join(missing)}")
        rows = [row for row in reader]
    if not rows:
        raise FigureError(f"{path}: no data rows")
    return {c: [r[c] for r in rows] for c in header}


def _floats(values) -> np.ndarray:
    return np.array([float(v) for v in values])


def _digest(arrays) -> str:
    h = hashlib.sha256()
    for a in arrays:
        a = np.asarray(a)
        h.update(repr(a.dtype).encode())
        h.update(a.tobytes() if a.dtype != object else str(list(a)).encode())
    return h.hexdigest()


def _style(ax, spec: FigureSpec, default_x: str, default_y: str) -> None:
    ax.set_xlabel(spec.xlabel or default_x)
    ax.set_ylabel(spec.ylabel or default_y)
    if spec.title:
        ax.set_title(spec.title)
    ax.grid(True, which="both", alpha=0.3)


def _render_scaling(spec: FigureSpec, ax):
    plotted = []
    for path in spec.inputs:
        cols = read_columns(path, REQUIRED_COLUMNS["scaling"])
        labels = np.array(cols["set_label"])
        m = _floats(cols["m"])
        med = _floats(cols["median_sup"])
        g1 = _floats(cols["gamma1_upper"])
        for lab in sorted(set(labels)):
            sel = labels == lab
            ms, meds = m[sel], med[sel]
            order = np.argsort(ms)
            ms, meds = ms[order], meds[order]
            slope = np.polyfit(np.log(ms), np.log(np.maximum(meds, 1e-300)),
                               1)[0]
            ax.loglog(ms, meds, "o-", label=f"{lab} (slope {slope:.2f})")
            g = max(float(g1[sel][0]), 1e-300)
            ax.loglog(ms, np.sqrt(g / ms), "--",
                      label=f"{lab} sqrt(gamma1_upper/m)")
            plotted += [ms, meds, np.array([g])]
    ax.legend(fontsize=7)
    _style(ax, spec, "m", "median sup deviation")
    return plotted


def _render_exceedance(spec: FigureSpec, ax):
    plotted = []
    for path in spec.inputs:
        cols = read_columns(path, REQUIRED_COLUMNS["exceedance"])
        m = _floats(cols["m"])
        delta = _floats(cols["delta"])
        freq = _floats(cols["exceedance_freq"])
        x = delta * m
        order = np.argsort(x)
        x, freq = x[order], freq[order]
        ax.semilogy(x, np.maximum(freq, 1e-12), "o", label=os.path.basename(path))
        plotted += [x, freq]
    xs = np.linspace(max(min(x) * 0.5, 1e-6), max(x) * 1.1, 200)
    ax.semilogy(xs, 2 * np.exp(-2 * xs), "k--", label="2 exp(-2 delta m)")
    ax.legend(fontsize=7)
    _style(ax, spec, "delta * m", "exceedance frequency")
    return plotted


def _render_counterexample_hist(spec: FigureSpec, ax):
    plotted = []
    floor = None
    for path in spec.inputs:
        cols = read_columns(path, REQUIRED_COLUMNS["counterexample_hist"])
        dev = _floats(cols["sup_pointwise_deviation"])
        floor = float(cols["predicted_floor"][0])
        ax.hist(dev, bins=20, alpha=0.7, label=os.path.basename(path))
        plotted += [dev, np.array([floor])]
    if floor is not None:
        ax.axvline(floor, color="red", linestyle="--",
                   label=f"predicted floor {floor:.4g}")
    ax.legend(fontsize=7)
    _style(ax, spec, "sup pointwise deviation", "trials")
    return plotted


def _render_estimator_error(spec: FigureSpec, ax):
    plotted = []
    by_name: dict = {}
    for path in spec.inputs:
        cols = read_columns(path, REQUIRED_COLUMNS["estimator_error"])
        errs = [float(v) if v not in ("n/a", "") else math.nan
                for v in cols["error"]]
        for name, err in zip(cols["phi_name"], errs):
            if not math.isnan(err):
                by_name.setdefault(name, []).append(err)
    labels = sorted(by_name)
    for j, name in enumerate(labels):
        vals = np.array(by_name[name])
        ax.scatter(np.full(len(vals), j), vals, s=8, label=name)
        plotted.append(vals)
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=20, fontsize=7)
    ax.legend(fontsize=7)
    _style(ax, spec, "test function", "absolute error")
    return plotted


_RENDERERS = {
    "scaling": _render_scaling,
    "exceedance": _render_exceedance,
    "counterexample_hist": _render_counterexample_hist,
    "estimator_error": _render_estimator_error,
}


def render(spec: FigureSpec) -> dict:
    """Renders the figure to `spec.output`; returns the output path and a
    sha256 digest of the plotted data arrays (deterministic given inputs)."""
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    try:
        plotted = _RENDERERS[spec.kind](spec, ax)
        fig.tight_layout()
        out_dir = os.path.dirname(os.path.abspath(spec.output))
        os.makedirs(out_dir, exist_ok=True)
        fig.savefig(spec.output, dpi=DPI)
    finally:
        plt.close(fig)
    return {"output": spec.output, "data_sha256": _digest(plotted)}
