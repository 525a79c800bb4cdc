"""Experiment drivers: dispatch a validated config, emit CSVs plus manifests.

Replicas are the parallel work unit.  Every replica draws from streams keyed
by (seed, replica, component), and results are merged in replica order, so
the output bytes are a function of (config, seed) alone -- the worker count
never shows.  Component streams also give the truncation-level coupling for
free: the jump set of a model truncated at N is exactly contained in the
jump set at any larger truncation, replica by replica.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .config import ExperimentConfig, validate
from .dynamics import (
    SpectralModel,
    ou_exact_update,
    simulate_field,
    simulate_noise_partial_sum,
)
from .errors import ParameterError
from .gaussian import HSIntegralSpec, gaussian_continuity_contrast, hs_integral
from .irregularity import (
    DEFAULT_PROBE_FRACTIONS,
    cadlag_failure_scan,
    coverage_scan,
    first_jump_times,
    question4_probe,
)
from .reports import write_csv, write_manifest
from .sampling import RngStreamKey, StableLaw, stable_tail_mass
from .spaces import (
    WeightedNormSpec,
    partial_sum_profile,
    predicted_median_slope,
    tail_exponent_via_medians,
)

__all__ = ["run", "RunResult", "build_model", "ValidationFailure"]


class ValidationFailure(ValueError):
    def __init__(self, diagnostics):
        super().__init__("; ".join(diagnostics))
        self.diagnostics = list(diagnostics)


@dataclass
class RunResult:
    files: list
    wall_time_s: float


def build_model(cfg: ExperimentConfig, n_components: int | None = None) -> SpectralModel:
    n = n_components if n_components is not None else cfg.n_components
    law = StableLaw(alpha=cfg.alpha, scale=cfg.sigma)
    beta = cfg.beta[:n] if isinstance(cfg.beta, list) else cfg.beta
    if cfg.lambda_rule == "squares":
        return SpectralModel.heat(n, law, beta=beta)
    lam = np.asarray(cfg.lambda_rule, dtype=float)[:n]
    beta_arr = np.full(n, float(beta)) if np.isscalar(beta) else np.asarray(beta, dtype=float)
    return SpectralModel(law=law, lam=lam, beta=beta_arr)


def _probe_times(cfg: ExperimentConfig) -> np.ndarray:
    if cfg.probe_times is not None:
        return np.asarray(cfg.probe_times, dtype=float)
    return np.asarray(DEFAULT_PROBE_FRACTIONS) * cfg.horizon


def _map_ordered(fn, tasks, workers: int):
    """Apply fn over tasks preserving order; results are schedule-independent."""
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    chunk = max(1, len(tasks) // (workers * 4))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks, chunksize=chunk))


# ---------------------------------------------------------------------------
# replica tasks (module level: they must pickle)


def _threshold_replica(args):
    cfg_dict, replica = args
    cfg = ExperimentConfig.from_dict(cfg_dict)
    model = build_model(cfg)
    gen = RngStreamKey(cfg.seed, replica, 0).generator()
    if cfg.target in ("noise", "L"):
        return simulate_noise_partial_sum(model, cfg.horizon, gen)
    j = np.arange(1, model.n_components + 1)
    return ou_exact_update(np.zeros(model.n_components), j, model, cfg.horizon, gen)


def _jump_density_replica(args):
    cfg_dict, replica = args
    cfg = ExperimentConfig.from_dict(cfg_dict)
    model = build_model(cfg)
    gen = RngStreamKey(cfg.seed, replica, 0).generator()
    taus = first_jump_times(model, cfg.r1, gen)
    width = cfg.width if cfg.width is not None else cfg.window
    rate = stable_tail_mass(model.law, cfg.r1)
    return coverage_scan(taus, cfg.horizon, width, rate).cell_hit


def _oscillation_task(args):
    cfg_dict, n, replica = args
    cfg = ExperimentConfig.from_dict(cfg_dict)
    model = build_model(cfg, n_components=n)
    report = cadlag_failure_scan(
        model,
        cfg.horizon,
        cfg.window,
        cfg.epsilon,
        _probe_times(cfg),
        RngStreamKey(cfg.seed, replica, 0),
        r1=cfg.r1,
        points_per_window=cfg.points_per_window,
        max_cells=cfg.max_cells,
    )
    return report.osc_lower_bounds, report.decay_correction


def _question4_task(args):
    cfg_dict, n, replica = args
    cfg = ExperimentConfig.from_dict(cfg_dict)
    model = build_model(cfg, n_components=n)
    report = question4_probe(
        model,
        cfg.delta,
        cfg.horizon,
        cfg.window,
        _probe_times(cfg),
        RngStreamKey(cfg.seed, replica, 0),
        r1=cfg.r1,
        epsilon=cfg.epsilon,
        points_per_window=cfg.points_per_window,
        max_cells=cfg.max_cells,
    )
    return report.osc_lower_bounds, report.decay_correction


def _modulus_replica(args):
    cfg_dict, replica = args
    cfg = ExperimentConfig.from_dict(cfg_dict)
    model_g = build_model_for_law(cfg, alpha=2.0)
    model_s = build_model_for_law(cfg, alpha=cfg.alpha)
    return gaussian_continuity_contrast(
        model_g,
        model_s,
        cfg.horizon,
        cfg.levels,
        cfg.delta,
        cfg.delta_stable,
        RngStreamKey(cfg.seed, 2 * replica, 0),
        r_resolve=cfg.r1 if cfg.r1 is not None else cfg.r_resolve,
        replicas=1,
        max_cells=cfg.max_cells,
    )


def build_model_for_law(cfg: ExperimentConfig, alpha: float) -> SpectralModel:
    law = StableLaw(alpha=alpha, scale=cfg.sigma)
    if cfg.lambda_rule == "squares":
        return SpectralModel.heat(cfg.n_components, law, beta=cfg.beta)
    lam = np.asarray(cfg.lambda_rule, dtype=float)
    beta = cfg.beta if isinstance(cfg.beta, list) else np.full(cfg.n_components, float(cfg.beta))
    return SpectralModel(law=law, lam=lam, beta=np.asarray(beta, dtype=float))


# ---------------------------------------------------------------------------
# experiment drivers


def _run_simulate(cfg: ExperimentConfig, outdir: Path) -> list:
    model = build_model(cfg)
    path = simulate_field(
        model,
        cfg.horizon,
        cfg.grid_step,
        cfg.mode,
        RngStreamKey(cfg.seed, 0, 0),
        cfg.r_resolve,
        max_cells=cfg.max_cells,
    )
    coeffs_csv = outdir / "field.csv"
    ledger_csv = outdir / "ledger.csv"
    path.write_csv(coeffs_csv, ledger_csv)
    return [coeffs_csv, ledger_csv]


def _run_threshold_scan(cfg: ExperimentConfig, outdir: Path) -> list:
    model = build_model(cfg)
    tasks = [(cfg.to_dict(), r) for r in range(cfg.replicas)]
    values = np.asarray(_map_ordered(_threshold_replica, tasks, cfg.workers))
    j = np.arange(1, model.n_components + 1)
    slope_rows, median_rows, profile_rows = [], [], []
    for delta in cfg.delta_grid:
        weighted = model.lam**delta * values**2
        fit = tail_exponent_via_medians(weighted, j)
        profile = partial_sum_profile(values, WeightedNormSpec(delta, model.lam))
        predicted = predicted_median_slope(delta, model.law, cfg.target)
        slope_rows.append(
            [delta, cfg.target, fit.slope, fit.se, fit.ci_low, fit.ci_high,
             predicted, profile.classification or "", profile.slope]
        )
        medians = np.exp(fit.log_medians)
        fitted = np.exp(fit.fitted)
        for idx in range(j.size):
            median_rows.append(
                [delta, int(j[idx]), medians[idx], fitted[idx],
                 fit.log_medians[idx] - fit.fitted[idx]]
            )
        for idx in range(j.size):
            profile_rows.append([delta, int(j[idx]), profile.partial_sums[idx]])
    files = [
        write_csv(outdir / "slopes.csv",
                  ["delta", "target", "slope", "se", "ci_low", "ci_high",
                   "predicted", "classification", "profile_slope"],
                  slope_rows),
        write_csv(outdir / "medians.csv",
                  ["delta", "j", "median", "fitted", "residual"], median_rows),
        write_csv(outdir / "profiles.csv", ["delta", "J", "S_J"], profile_rows),
    ]
    return files


def _run_jump_density(cfg: ExperimentConfig, outdir: Path) -> list:
    model = build_model(cfg)
    width = cfg.width if cfg.width is not None else cfg.window
    rate = stable_tail_mass(model.law, cfg.r1)
    tasks = [(cfg.to_dict(), r) for r in range(cfg.replicas)]
    hits = np.asarray(_map_ordered(_jump_density_replica, tasks, cfg.workers), dtype=float)
    empirical = hits.mean(axis=0)
    # cell edges/predictions are replica-independent
    probe = coverage_scan(np.empty(0), cfg.horizon, width, rate)
    n = model.n_components
    q = np.exp(-rate * probe.cell_edges[:-1]) - np.exp(-rate * probe.cell_edges[1:])
    predicted = 1.0 - (1.0 - q) ** n
    rows = [
        [probe.cell_edges[i], probe.cell_edges[i + 1], empirical[i], predicted[i], cfg.replicas]
        for i in range(empirical.size)
    ]
    return [
        write_csv(outdir / "coverage.csv",
                  ["cell_start", "cell_end", "empirical", "predicted", "replicas"],
                  rows)
    ]


def _scan_driver(cfg: ExperimentConfig, outdir: Path, task_fn, detail_name, extra_cols):
    n_list = cfg.n_grid if cfg.n_grid else [cfg.n_components]
    probes = _probe_times(cfg)
    tasks = [(cfg.to_dict(), n, r) for n in n_list for r in range(cfg.replicas)]
    results = _map_ordered(task_fn, tasks, cfg.workers)
    detail_rows, summary_rows = [], []
    idx = 0
    for n in n_list:
        exceed = 0
        total = 0
        for r in range(cfg.replicas):
            bounds, decay = results[idx]
            idx += 1
            for p, bound in zip(probes, bounds):
                detail_rows.append(
                    [p, cfg.window, bound, cfg.epsilon, bool(bound >= cfg.epsilon),
                     n, decay, r] + extra_cols
                )
            exceed += int(np.sum(bounds >= cfg.epsilon))
            total += bounds.size
        frac = exceed / total
        se = math.sqrt(max(frac * (1.0 - frac), 1e-12) / total)
        summary_rows.append([n, frac, se, cfg.replicas] + extra_cols)
    header = ["probe_t", "window", "bound", "epsilon", "exceeds", "N",
              "decay_correction", "replica"]
    sum_header = ["N", "fraction_exceeding", "se", "replicas"]
    if extra_cols:
        header += ["delta", "exploratory"]
        sum_header += ["delta", "exploratory"]
    return [
        write_csv(outdir / f"{detail_name}.csv", header, detail_rows),
        write_csv(outdir / f"{detail_name}_summary.csv", sum_header, summary_rows),
    ]


def _run_oscillation(cfg: ExperimentConfig, outdir: Path) -> list:
    return _scan_driver(cfg, outdir, _oscillation_task, "oscillation", [])


def _run_question4(cfg: ExperimentConfig, outdir: Path) -> list:
    return _scan_driver(cfg, outdir, _question4_task, "question4", [cfg.delta, True])


def _run_gaussian_check(cfg: ExperimentConfig, outdir: Path) -> list:
    hs_rows = []
    for delta in cfg.delta_grid:
        for beta_exp in cfg.beta_exp_grid:
            res = hs_integral(HSIntegralSpec(delta, beta_exp, cfg.horizon, cfg.jmax))
            predicted = max(0.0, 2.0 * delta + 2.0 * beta_exp - 1.0)
            hs_rows.append(
                [delta, beta_exp, cfg.jmax, res.value, res.slope, predicted, res.classification]
            )
    files = [
        write_csv(outdir / "hs_scan.csv",
                  ["delta", "beta_exp", "jmax", "value", "slope",
                   "predicted_exponent", "classification"],
                  hs_rows)
    ]
    tasks = [(cfg.to_dict(), r) for r in range(cfg.replicas)]
    results = _map_ordered(_modulus_replica, tasks, cfg.workers)
    mod_rows = []
    for replica, rows in enumerate(results):
        for row in rows:
            mod_rows.append(
                [replica, row.level, row.law_label, row.modulus, row.largest_ledger_jump]
            )
    files.append(
        write_csv(outdir / "modulus.csv",
                  ["replica", "level", "law", "modulus", "largest_ledger_jump"],
                  mod_rows)
    )
    return files


_DRIVERS = {
    "simulate": _run_simulate,
    "threshold-scan": _run_threshold_scan,
    "jump-density": _run_jump_density,
    "oscillation": _run_oscillation,
    "gaussian-check": _run_gaussian_check,
    "question4-probe": _run_question4,
}

_SCHEMAS = {
    "simulate": "fieldpath-v1",
    "threshold-scan": "threshold-scan-v1",
    "jump-density": "coverage-v1",
    "oscillation": "oscillation-v1",
    "gaussian-check": "gaussian-check-v1",
    "question4-probe": "question4-v1",
}


def run(cfg: ExperimentConfig, outdir=None) -> RunResult:
    """Validate, dispatch, and write a manifest next to every CSV."""
    diags = validate(cfg)
    if diags:
        raise ValidationFailure(diags)
    outdir = Path(outdir) if outdir is not None else Path(cfg.resolved_output_dir())
    outdir.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    files = _DRIVERS[cfg.kind](cfg, outdir)
    wall = time.perf_counter() - start
    for f in files:
        write_manifest(
            f,
            config=cfg.to_dict(),
            schema=_SCHEMAS[cfg.kind],
            version=__version__,
            wall_time_s=wall,
        )
    return RunResult(files=[Path(f) for f in files], wall_time_s=wall)
