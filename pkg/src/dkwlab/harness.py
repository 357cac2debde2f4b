"""Experiment orchestration: declarative JSON configs, deterministic seeded
trials (optionally thread-parallel; numpy kernels release the GIL), tail and
scaling experiments, and atomic CSV/JSON persistence with a frozen schema."""
from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import __version__
from .classes import (DirectionSet, class_sup_ks, dense_directions,
                      read_directions)
from .complexity import (complexity_report, gamma_upper,
                         greedy_admissible_sequence, maximizing_scale)
from .constructions import spiked_set
from .ecdf import build_ecdf
from .estimators import (EstimateRecord, inverse_shift_contained, make_phi,
                         quantile_integral, w1_empirical_vs_law)
from .laws import Law1D, std_normal_law, two_sparse_projection_law
from .models import (ConfigurationError, LazySample, VectorModel,
                     model_from_spec, oracle_projection_law, sample,
                     splitmix64)

WORK_BUDGET = 10**12
SET_SEED_TAG = 0x5E7D17

EXPERIMENTS = ("single_dkw", "class_sup", "scaling_sweep", "counterexample",
               "estimate", "w1", "check_campaign")

KNOWN_KEYS = {"experiment", "model", "set", "m", "delta", "trials",
              "base_seed", "oracle", "output", "workers", "phis", "case",
              "campaign"}


class ConfigValidationError(ValueError):
    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("invalid config:\n" + "\n".join(f"- {e}" for e in self.errors))


class BudgetError(RuntimeError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    model: VectorModel
    set_specs: tuple
    m_list: tuple
    delta_list: tuple
    trials: int
    base_seed: int
    oracle_n: int
    output: Optional[str]
    workers: int = 1
    phis: tuple = ()
    case: Optional[str] = None
    campaign: Optional[str] = None
    raw: str = "{}"


@dataclass(frozen=True)
class TrialRecord:
    trial_index: int
    seed_used: int
    m: int
    n_directions: int
    sup_deviation: float
    argmax_direction: int
    exceeded: tuple
    wall_time_ms: float


@dataclass(frozen=True)
class SummaryRecord:
    set_label: str
    m: int
    delta: Optional[float]
    trials: int
    n_directions: int
    exceedance_freq: Optional[float]
    ci_low: Optional[float]
    ci_high: Optional[float]
    median_sup: float
    mean_sup: float
    gamma1_upper: float
    predictor_sqrt_gamma1_over_m: float
    gamma_threshold: float
    sudakov_value: float
    slope_log_median_vs_log_m: Optional[float] = None


def _as_list(v):
    return list(v) if isinstance(v, (list, tuple)) else [v]


def validate_config(text: str) -> ExperimentConfig:
    """Parse and range-check a JSON config; unknown keys are rejected and
    every violated field is reported."""
    errors = []
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigValidationError([f"malformed JSON: {exc}"]) from exc
    if not isinstance(raw, dict):
        raise ConfigValidationError(["config must be a JSON object"])
    for key in raw:
        if key not in KNOWN_KEYS:
            errors.append(f"unknown key {key!r}")
    exp = raw.get("experiment")
    if exp not in EXPERIMENTS:
        errors.append(f"experiment must be one of {EXPERIMENTS}, got {exp!r}")
    model = None
    if "model" in raw:
        try:
            model = model_from_spec(raw["model"])
        except (ConfigurationError, TypeError, AttributeError) as exc:
            errors.append(f"model: {exc}")
    elif exp not in ("check_campaign",):
        errors.append("model is required")
    m_list = []
    for v in _as_list(raw.get("m", [])):
        if not isinstance(v, int) or v < 1:
            errors.append(f"m values must be positive integers, got {v!r}")
        else:
            m_list.append(v)
    if not m_list and exp not in ("check_campaign",):
        errors.append("m is required")
    delta_list = []
    for v in _as_list(raw.get("delta", [])):
        if not isinstance(v, (int, float)) or not (0.0 < float(v) < 1.0):
            errors.append(f"delta values must lie in (0, 1), got {v!r}")
        else:
            delta_list.append(float(v))
    trials = raw.get("trials", 1)
    if not isinstance(trials, int) or trials < 1:
        errors.append(f"trials must be a positive integer, got {trials!r}")
    base_seed = raw.get("base_seed", 0)
    if not isinstance(base_seed, int):
        errors.append("base_seed must be an integer")
    oracle_n = raw.get("oracle", 10**6)
    if not isinstance(oracle_n, int) or oracle_n < 10**5:
        errors.append("oracle must be an integer >= 1e5")
    workers = raw.get("workers", 1)
    if not isinstance(workers, int) or workers < 1:
        errors.append("workers must be a positive integer")
    set_specs = tuple(str(s) for s in _as_list(raw.get("set"))) \
        if raw.get("set") is not None else (None,)
    for spec in set_specs:
        if spec is None:
            continue
        try:
            _parse_set_spec(spec)
        except ValueError as exc:
            errors.append(f"set {spec!r}: {exc}")
    phis = tuple(str(p) for p in _as_list(raw.get("phis", [])))
    output = raw.get("output")
    if output is not None and not isinstance(output, str):
        errors.append("output must be a string path prefix")
    if errors:
        raise ConfigValidationError(errors)
    return ExperimentConfig(
        experiment=exp, model=model, set_specs=set_specs,
        m_list=tuple(m_list), delta_list=tuple(delta_list), trials=trials,
        base_seed=base_seed, oracle_n=oracle_n, output=output,
        workers=workers, phis=phis, case=raw.get("case"),
        campaign=raw.get("campaign"), raw=text,
    )


def _parse_set_spec(spec: str):
    kind, _, rest = spec.partition(":")
    if kind == "sphere_random":
        parts = rest.split(",")
        if len(parts) not in (2, 3):
            raise ValueError("expected sphere_random:n,d[,seed]")
        return ("sphere_random", int(parts[0]), int(parts[1]),
                int(parts[2]) if len(parts) == 3 else None)
    if kind == "spiked":
        d_str, delta_str = rest.split(",")
        d, delta = int(d_str), float(delta_str)
        if not (0 < delta < 1):
            raise ValueError("spiked delta must lie in (0, 1)")
        return ("spiked", d, delta)
    if kind == "basis_pm":
        return ("basis_pm", int(rest))
    if kind == "file":
        if not os.path.exists(rest):
            raise ValueError(f"direction file not found: {rest}")
        return ("file", rest)
    raise ValueError(f"unknown set spec kind {kind!r}")


def build_direction_set(spec: Optional[str], model: VectorModel,
                        base_seed: int) -> tuple:
    """Returns (DirectionSet, label)."""
    if spec is None:
        e1 = np.zeros(model.d)
        e1[0] = 1.0
        return dense_directions(e1[None, :]), "singleton_e1"
    parsed = _parse_set_spec(spec)
    if parsed[0] == "sphere_random":
        _, n, d, seed = parsed
        if d != model.d:
            raise ConfigurationError(
                f"set dimension {d} does not match model dimension {model.d}")
        rng = np.random.default_rng(
            splitmix64(base_seed if seed is None else seed, SET_SEED_TAG))
        mat = rng.standard_normal((n, d))
        mat /= np.linalg.norm(mat, axis=1, keepdims=True)
        return dense_directions(mat), spec
    if parsed[0] == "spiked":
        _, d, delta = parsed
        if d != model.d:
            raise ConfigurationError(
                f"set dimension {d} does not match model dimension {model.d}")
        return spiked_set(d, delta), spec
    if parsed[0] == "basis_pm":
        d = parsed[1]
        if d != model.d:
            raise ConfigurationError(
                f"set dimension {d} does not match model dimension {model.d}")
        mat = np.vstack([np.eye(d), -np.eye(d)])
        return dense_directions(mat), spec
    dirs = read_directions(parsed[1], d=model.d)
    return dirs, spec


def reference_laws(model: VectorModel, dirs: DirectionSet, oracle_n: int,
                   base_seed: int):
    """Exact shared law when available, per-direction oracle ECDFs otherwise."""
    if model.kind == "gaussian":
        return std_normal_law()
    coord = model.coordinate_law()
    if dirs.is_uniform_spiked:
        return two_sparse_projection_law(coord, float(dirs.sparse_a[0]),
                                         float(dirs.sparse_b[0]))
    if dirs.is_sparse:
        return [two_sparse_projection_law(coord, float(a), float(b))
                for a, b in zip(dirs.sparse_a, dirs.sparse_b)]
    if not dirs.is_sparse and dirs.n >= 1:
        dense = dirs.dense
        basis_like = np.all(np.sum(dense != 0.0, axis=1) == 1)
        if basis_like:
            return coord  # +/- a basis vector projects to the coordinate law
    return [oracle_projection_law(model, dirs.dense[j], oracle_n,
                                  splitmix64(base_seed, 0x0AC1E, j))
            for j in range(dirs.n)]


def projected_work(cfg: ExperimentConfig, n_dirs: int) -> float:
    return float(cfg.trials) * sum(cfg.m_list) * max(n_dirs, 1)


def ensure_budget(cfg: ExperimentConfig, n_dirs: int, force: bool) -> None:
    cost = projected_work(cfg, n_dirs)
    if cost > WORK_BUDGET and not force:
        raise BudgetError(
            f"projected work {cost:.3g} exceeds the budget {WORK_BUDGET:.0e}; "
            "re-run with --force to override")


def wilson_interval(successes: int, n: int, z: float = 1.959963984540054):
    if n == 0:
        return 0.0, 1.0
    p = successes / n
    denom = 1.0 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    lo = 0.0 if successes == 0 else max(center - half, 0.0)
    hi = 1.0 if successes == n else min(center + half, 1.0)
    return lo, hi


def gamma_threshold(gamma1_up: float, m: int) -> float:
    g = max(gamma1_up, 1e-300)
    return (g / m) * math.log(math.e * m / g) ** 2


def _one_trial(model, dirs, refs, m, seed):
    t0 = time.perf_counter()
    # two-support sets project fastest from the column-streamed layout
    if dirs.is_sparse or m * model.d > (1 << 27):
        src = LazySample(model, m, seed)
    else:
        src = sample(model, m, seed)
    rep = class_sup_ks(src, dirs, refs)
    ms = (time.perf_counter() - t0) * 1000.0
    return rep.sup_over_class, rep.argmax_direction, ms


_WORKER_CTX = {}


def _init_trial_worker(model, dirs, refs, m):
    _WORKER_CTX["ctx"] = (model, dirs, refs, m)


def _trial_by_seed(seed):
    model, dirs, refs, m = _WORKER_CTX["ctx"]
    return _one_trial(model, dirs, refs, m, seed)


def run_trials(cfg: ExperimentConfig, model, dirs, refs, m: int):
    seeds = [splitmix64(cfg.base_seed, i) for i in range(cfg.trials)]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers,
                                 initializer=_init_trial_worker,
                                 initargs=(model, dirs, refs, m)) as ex:
            results = list(ex.map(_trial_by_seed, seeds, chunksize=1))
    else:
        results = [_one_trial(model, dirs, refs, m, s) for s in seeds]
    records = []
    for i, (sup, arg, ms) in enumerate(results):
        exceeded = tuple(bool(sup > math.sqrt(dl)) for dl in cfg.delta_list)
        records.append(TrialRecord(trial_index=i, seed_used=seeds[i], m=m,
                                   n_directions=dirs.n, sup_deviation=sup,
                                   argmax_direction=arg, exceeded=exceeded,
                                   wall_time_ms=ms))
    return records


def _set_summary_stats(dirs: DirectionSet):
    seq = greedy_admissible_sequence(dirs)
    g1 = gamma_upper(seq, 1)
    _, prod = maximizing_scale(dirs)
    return g1, prod


def summarize(cfg, set_label, dirs, m, records, g1, entropy_prod,
              slope=None):
    sups = np.array([r.sup_deviation for r in records])
    out = []
    sudakov = math.sqrt(entropy_prod / m)
    deltas = cfg.delta_list if cfg.delta_list else (None,)
    for di, dl in enumerate(deltas):
        if dl is None:
            freq = lo = hi = None
        else:
            exc = sum(r.exceeded[di] for r in records)
            freq = exc / len(records)
            lo, hi = wilson_interval(exc, len(records))
        out.append(SummaryRecord(
            set_label=set_label, m=m, delta=dl, trials=len(records),
            n_directions=dirs.n, exceedance_freq=freq, ci_low=lo, ci_high=hi,
            median_sup=float(np.median(sups)), mean_sup=float(sups.mean()),
            gamma1_upper=g1,
            predictor_sqrt_gamma1_over_m=math.sqrt(g1 / m),
            gamma_threshold=gamma_threshold(g1, m),
            sudakov_value=sudakov, slope_log_median_vs_log_m=slope))
    return out


def run_experiment(cfg: ExperimentConfig, force: bool = False):
    """Runs the configured trials; returns (trial_records, summary_records)
    and writes <output>.trials.csv / .summary.csv / .meta.json when an
    output prefix is configured."""
    if cfg.experiment in ("single_dkw", "class_sup", "w1"):
        spec = None if cfg.experiment == "single_dkw" else cfg.set_specs[0]
        dirs, label = build_direction_set(spec, cfg.model, cfg.base_seed)
        ensure_budget(cfg, dirs.n, force)
        refs = reference_laws(cfg.model, dirs, cfg.oracle_n, cfg.base_seed)
        g1, prod = _set_summary_stats(dirs)
        trials, summaries = [], []
        if cfg.experiment == "w1":
            trials = _run_w1_trials(cfg, dirs, refs)
            sups = np.array([t.sup_deviation for t in trials])
            summaries = [SummaryRecord(
                set_label=label, m=m, delta=None, trials=cfg.trials,
                n_directions=dirs.n, exceedance_freq=None, ci_low=None,
                ci_high=None,
                median_sup=float(np.median(sups[[t.m == m for t in trials]])),
                mean_sup=float(sups[[t.m == m for t in trials]].mean()),
                gamma1_upper=g1,
                predictor_sqrt_gamma1_over_m=math.sqrt(g1 / m),
                gamma_threshold=gamma_threshold(g1, m),
                sudakov_value=math.sqrt(prod / m)) for m in cfg.m_list]
        else:
            for m in cfg.m_list:
                recs = run_trials(cfg, cfg.model, dirs, refs, m)
                trials.extend(recs)
                summaries.extend(summarize(cfg, label, dirs, m, recs, g1, prod))
        _persist(cfg, trials, summaries)
        return trials, summaries
    if cfg.experiment == "scaling_sweep":
        return scaling_sweep(cfg, force=force)
    if cfg.experiment == "estimate":
        return run_estimate(cfg, force=force)
    raise ConfigurationError(
        f"experiment {cfg.experiment!r} runs through its own CLI subcommand")


def _run_w1_trials(cfg: ExperimentConfig, dirs, refs):
    if isinstance(refs, list):
        refs = refs[0]
    records = []
    for m in cfg.m_list:
        for i in range(cfg.trials):
            seed = splitmix64(cfg.base_seed, m, i)
            t0 = time.perf_counter()
            src = sample(cfg.model, m, seed)
            proj = src.values @ dirs.point(0)
            w1, _err = w1_empirical_vs_law(build_ecdf(proj), refs)
            ms = (time.perf_counter() - t0) * 1000.0
            records.append(TrialRecord(trial_index=i, seed_used=seed, m=m,
                                       n_directions=dirs.n, sup_deviation=w1,
                                       argmax_direction=0, exceeded=(),
                                       wall_time_ms=ms))
    return records


def scaling_sweep(cfg: ExperimentConfig, force: bool = False):
    """Per (set, m): median sup deviation, sqrt(gamma1_upper/m) predictor and
    the entropy lower-bound value; least-squares slope of log median versus
    log m per set."""
    if len(cfg.m_list) < 3 or max(cfg.m_list) < 10 * min(cfg.m_list):
        raise ConfigValidationError(
            ["scaling sweeps need >= 3 values of m spanning >= one decade"])
    all_trials, all_summaries = [], []
    for spec in cfg.set_specs:
        dirs, label = build_direction_set(spec, cfg.model, cfg.base_seed)
        ensure_budget(cfg, dirs.n, force)
        refs = reference_laws(cfg.model, dirs, cfg.oracle_n, cfg.base_seed)
        g1, prod = _set_summary_stats(dirs)
        per_m = []
        for m in cfg.m_list:
            recs = run_trials(cfg, cfg.model, dirs, refs, m)
            all_trials.extend(recs)
            med = float(np.median([r.sup_deviation for r in recs]))
            per_m.append((m, med, recs))
        logs_m = np.log([p[0] for p in per_m])
        logs_med = np.log([max(p[1], 1e-300) for p in per_m])
        slope = float(np.polyfit(logs_m, logs_med, 1)[0])
        for m, med, recs in per_m:
            all_summaries.extend(
                summarize(cfg, label, dirs, m, recs, g1, prod, slope=slope))
    _persist(cfg, all_trials, all_summaries)
    return all_trials, all_summaries


def run_estimate(cfg: ExperimentConfig, force: bool = False):
    """One sample per configured m; per (direction, phi) quantile-integral
    estimates with analytic gaussian targets where known."""
    from .laws import std_normal_law
    dirs, label = build_direction_set(cfg.set_specs[0], cfg.model,
                                      cfg.base_seed)
    ensure_budget(cfg, dirs.n, force)
    if not cfg.delta_list:
        raise ConfigValidationError(["estimate needs a delta"])
    delta = cfg.delta_list[0]
    phis = [make_phi(p) for p in (cfg.phis or ("identity",))]
    law = std_normal_law()
    targets = {"identity": 0.0, "signed-square": 0.0, "relu-square": 0.5}
    records = []
    m = cfg.m_list[0]
    src = sample(cfg.model, m, splitmix64(cfg.base_seed, 0xE57))
    proj = src.values @ dirs.densify().T
    for j in range(dirs.n):
        e = build_ecdf(proj[:, j])
        for phi in phis:
            est = quantile_integral(e, phi, delta)
            target = None
            if cfg.model.kind == "gaussian":
                if phi.name in targets:
                    target = targets[phi.name]
                elif phi.name.startswith("indicator:"):
                    target = float(law.cdf(float(phi.name.split(":")[1])))
            err = abs(est - target) if target is not None else None
            records.append(EstimateRecord(direction_index=j,
                                          phi_name=phi.name, estimate=est,
                                          target=target, error=err,
                                          delta_used=delta))
    _persist_estimates(cfg, records)
    return records, []


# ---------------------------------------------------------------------------
# persistence

def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return str(int(v))
    return str(v)


def _csv_text(header, rows) -> str:
    # proper quoting: set labels may contain commas
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _atomic_write(path: str, text: str) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(os.path.abspath(path)))
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def trials_csv_text(cfg: ExperimentConfig, trials) -> str:
    cols = ["trial_index", "seed_used", "m", "n_directions", "sup_deviation",
            "argmax_direction"]
    cols += [f"exceeded_sqrt_delta_{i}" for i in range(len(cfg.delta_list))]
    cols += ["wall_time_ms"]
    n_delta = len(cfg.delta_list)
    rows = []
    for r in trials:
        row = [r.trial_index, r.seed_used, r.m, r.n_directions,
               r.sup_deviation, r.argmax_direction]
        exc = list(r.exceeded)
        row += exc + [None] * (n_delta - len(exc)) + [r.wall_time_ms]
        rows.append(row)
    return _csv_text(cols, rows)


SUMMARY_COLUMNS = ["set_label", "m", "delta", "trials", "n_directions",
                   "exceedance_freq", "ci_low", "ci_high", "median_sup",
                   "mean_sup", "gamma1_upper",
                   "predictor_sqrt_gamma1_over_m", "gamma_threshold",
                   "sudakov_value", "slope_log_median_vs_log_m"]


def summary_csv_text(summaries) -> str:
    rows = [[s.set_label, s.m, s.delta, s.trials, s.n_directions,
             s.exceedance_freq, s.ci_low, s.ci_high, s.median_sup,
             s.mean_sup, s.gamma1_upper, s.predictor_sqrt_gamma1_over_m,
             s.gamma_threshold, s.sudakov_value,
             s.slope_log_median_vs_log_m] for s in summaries]
    return _csv_text(SUMMARY_COLUMNS, rows)


def _meta_json(cfg: ExperimentConfig) -> str:
    meta = {
        "config": json.loads(cfg.raw) if cfg.raw else {},
        "package_version": __version__,
        "oracle_n": cfg.oracle_n,
        "log_base": "natural",
    }
    try:
        import numpy
        import scipy
        meta["numpy_version"] = numpy.__version__
        meta["scipy_version"] = scipy.__version__
    except Exception:
        pass
    return json.dumps(meta, indent=2, sort_keys=True) + "\n"


def _persist(cfg: ExperimentConfig, trials, summaries) -> None:
    if cfg.output is None:
        return
    _atomic_write(cfg.output + ".trials.csv", trials_csv_text(cfg, trials))
    _atomic_write(cfg.output + ".summary.csv", summary_csv_text(summaries))
    _atomic_write(cfg.output + ".meta.json", _meta_json(cfg))


ESTIMATE_COLUMNS = ["direction_index", "phi_name", "estimate", "target",
                    "error", "delta_used"]


def estimates_csv_text(records) -> str:
    rows = [[r.direction_index, r.phi_name, r.estimate,
             r.target if r.target is not None else "unknown",
             r.error if r.error is not None else "n/a", r.delta_used]
            for r in records]
    return _csv_text(ESTIMATE_COLUMNS, rows)


def _persist_estimates(cfg: ExperimentConfig, records) -> None:
    if cfg.output is None:
        return
    _atomic_write(cfg.output + ".estimates.csv", estimates_csv_text(records))
    _atomic_write(cfg.output + ".meta.json", _meta_json(cfg))
