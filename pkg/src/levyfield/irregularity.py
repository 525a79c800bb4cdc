"""Oscillation bounds, dense-jump statistics and cadlag-failure scans.

The mechanism under test: every component whose driver jumps by at least r1
while its weight stays at least r2 moves the field by at least r1*r2 in one
instant.  First-jump times are exponential with the tail-mass rate and,
across infinitely many components, their set is dense in time, so no point
has a one-sided limit.  At finite truncation the scan measures how the
fraction of probe windows exhibiting an oscillation lower bound >= epsilon
grows with the truncation level N.

Oscillation on discrete output is always reported as a certified LOWER
bound: the per-component max-min over the window grid (plus the stored
left-limit values at in-window ledger jumps), never an estimate of the
unobservable continuous-time supremum.  That is exactly the direction the
contradiction argument needs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import (
    DEFAULT_MAX_CELLS,
    FieldPath,
    SpectralModel,
    _draw_component_jumps,
    _propagate,
)
from .errors import ParameterError, ResourceCapError
from .sampling import RngStreamKey, stable_tail_mass
from .spaces import WeightedNormSpec

__all__ = [
    "OscillationReport",
    "CoverageReport",
    "oscillation_lower_bound",
    "weighted_window_oscillation",
    "first_jump_times",
    "coverage_scan",
    "cadlag_failure_scan",
    "question4_probe",
    "window_field",
    "DEFAULT_PROBE_FRACTIONS",
]

# Probe times default to this lattice of horizon fractions.
DEFAULT_PROBE_FRACTIONS = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)


@dataclass
class OscillationReport:
    """Per-probe oscillation lower bounds over windows (t, t + window)."""

    probe_times: np.ndarray
    window: float
    osc_lower_bounds: np.ndarray
    epsilon: float
    fraction_exceeding: float
    n_components: int
    decay_correction: float
    exploratory: bool = False
    delta: float | None = None
    trend: list = field(default_factory=list)

    def validate(self) -> None:
        if not 0.0 <= self.fraction_exceeding <= 1.0:
            raise ParameterError("fraction_exceeding must lie in [0, 1]")
        if np.any(self.osc_lower_bounds < 0.0):
            raise ParameterError("oscillation lower bounds are nonnegative")


@dataclass
class CoverageReport:
    """Which cells of a partition of (0, T) contain at least one first-jump time."""

    width: float
    horizon: float
    covered_fraction: float
    predictions: np.ndarray
    cell_edges: np.ndarray
    cell_hit: np.ndarray
    n_sources: int
    rate: float
    truncated_last: bool = False


def _window_minmax(path: FieldPath, a: float, b: float):
    """Per-component min and max over grid rows in (a, b), left limits included."""
    if not (0.0 <= a < b):
        raise ParameterError(f"window ({a}, {b}) is empty or negative")
    mask = (path.times > a) & (path.times < b)
    if int(mask.sum()) < 2:
        raise ParameterError("window must contain at least 2 grid points")
    sub = path.coeffs[mask]
    mn = sub.min(axis=0)
    mx = sub.max(axis=0)
    for ev in path.jumps:
        if a < ev.time < b and ev.pre_value is not None:
            c = ev.component - 1
            mn[c] = min(mn[c], ev.pre_value)
            mx[c] = max(mx[c], ev.pre_value)
    return mn, mx


def oscillation_lower_bound(path: FieldPath, window) -> float:
    """Certified lower bound for the oscillation of the field over ``window``.

    Returns max over components of (max - min of X^j at grid points inside
    the open window, including stored left limits at in-window jumps).  Any
    single coordinate difference bounds the full norm from below, so this
    is a true lower bound of the oscillation in every H_delta whose first
    weights are at least 1.
    """
    a, b = window
    mn, mx = _window_minmax(path, a, b)
    return float((mx - mn).max())


def weighted_window_oscillation(path: FieldPath, window, delta: float, lam) -> float:
    """Weighted-norm size of the per-component max-min vector over the window.

    Exploratory statistic for the open sub-zero-delta question: this is the
    lambda_j^delta-weighted norm of the coordinatewise oscillation vector,
    not a certified bound on the H_delta oscillation.
    """
    a, b = window
    mn, mx = _window_minmax(path, a, b)
    spec = WeightedNormSpec(delta=delta, lam=np.asarray(lam, dtype=float))
    v = mx - mn
    return float(np.sqrt(np.sum(spec.weights(v.size) * v * v)))


def first_jump_times(model: SpectralModel, r1: float, generator: np.random.Generator) -> np.ndarray:
    """First times each component's driver jumps by magnitude >= r1.

    i.i.d. exponential with the tail-mass rate, drawn directly rather than
    read off simulated paths; this is the raw material of the dense-jump
    statistics.
    """
    if model.law.is_gaussian:
        raise ParameterError("alpha = 2 has no jumps")
    rate = stable_tail_mass(model.law, r1)
    return generator.standard_exponential(model.n_components) / rate


def coverage_scan(taus, horizon: float, width: float, rate: float) -> CoverageReport:
    """Fraction of width-w cells of (0, horizon) containing at least one tau.

    The per-cell analytic prediction 1 - (1 - (e^{-rate*a} - e^{-rate*b}))^N
    uses only the rate, the number of sources and the cell endpoints.  A
    final short cell is kept and flagged when width does not divide the
    horizon.
    """
    if not width > 0.0 or not horizon > 0.0 or width > horizon * (1.0 + 1e-12):
        raise ParameterError("need 0 < width <= horizon")
    if rate < 0.0:
        raise ParameterError("rate must be nonnegative")
    taus = np.asarray(taus, dtype=float)
    n_full = int(math.floor(horizon / width + 1e-9))
    edges = np.arange(n_full + 1) * width
    truncated = horizon - edges[-1] > 1e-9 * horizon
    if truncated:
        edges = np.append(edges, horizon)
    inside = taus[(taus > 0.0) & (taus < horizon)]
    counts, _ = np.histogram(inside, bins=edges)
    hit = counts > 0
    n = taus.size
    a, b = edges[:-1], edges[1:]
    q = np.exp(-rate * a) - np.exp(-rate * b)
    predictions = 1.0 - (1.0 - q) ** n
    return CoverageReport(
        width=width,
        horizon=horizon,
        covered_fraction=float(hit.mean()) if hit.size else 0.0,
        predictions=predictions,
        cell_edges=edges,
        cell_hit=hit,
        n_sources=n,
        rate=rate,
        truncated_last=bool(truncated),
    )


def window_field(
    model: SpectralModel,
    horizon: float,
    probe_times,
    window: float,
    stream: RngStreamKey,
    r1: float,
    *,
    points_per_window: int = 8,
    include_residual: bool = True,
    forced_jumps=None,
    max_cells: int = DEFAULT_MAX_CELLS,
) -> FieldPath:
    """Jump-resolved field restricted to the probe windows.

    Distributionally identical to simulating the full field and windowing,
    but only probe-window grid points and in-window jump times become output
    rows; jumps elsewhere enter through their decayed contribution.  This is
    what keeps the scan feasible at truncation level 10^4.  ``forced_jumps``
    is a list of (component, time, size) triples replacing the random jump
    stream.
    """
    probe_times = np.asarray(probe_times, dtype=float)
    if probe_times.size == 0 or np.any(np.diff(probe_times) <= 0.0):
        raise ParameterError("probe times must be a nonempty increasing sequence")
    if probe_times[0] <= 0.0 or probe_times[-1] + window > horizon * (1.0 + 1e-12):
        raise ParameterError("every window (t, t + window) must lie inside (0, horizon]")
    if points_per_window < 2:
        raise ParameterError("need at least 2 grid points per window")

    interior = np.concatenate(
        [np.linspace(t, t + window, points_per_window + 2)[1:-1] for t in probe_times]
    )
    base = np.unique(interior)

    if forced_jumps is None:
        gens, comp_jumps = _draw_component_jumps(model, r1, horizon, stream)
    else:
        comp_jumps = [(np.empty(0), np.empty(0)) for _ in range(model.n_components)]
        for comp, tau, size in forced_jumps:
            taus, sizes = comp_jumps[comp - 1]
            comp_jumps[comp - 1] = (np.append(taus, tau), np.append(sizes, size))
        comp_jumps = [
            (t[np.argsort(t)], s[np.argsort(t)]) for t, s in comp_jumps
        ]
        gens = [stream.for_component(j).generator() for j in range(1, model.n_components + 1)]

    all_taus = np.concatenate([t for t, _ in comp_jumps])
    if all_taus.size:
        idx = np.searchsorted(probe_times, all_taus) - 1
        idx = np.clip(idx, 0, probe_times.size - 1)
        in_window = (probe_times[idx] < all_taus) & (all_taus < probe_times[idx] + window)
        times = np.union1d(base, all_taus[in_window])
    else:
        times = base
    cells = (times.size + 1) * model.n_components
    if cells > max_cells:
        raise ResourceCapError(
            f"window field needs {cells} cells > cap {max_cells}; reduce "
            "points_per_window, the probe count or the truncation level"
        )
    resid = None
    if include_residual:
        resid = np.empty((times.size, model.n_components))
        for j0, gen in enumerate(gens):
            resid[:, j0] = gen.standard_normal(times.size)
    coeffs, events = _propagate(model, times, comp_jumps, resid, r1)
    return FieldPath(
        times=np.concatenate(([0.0], times)),
        coeffs=coeffs,
        jumps=events,
        resolve_threshold=r1,
    )


def _check_scan_preconditions(model: SpectralModel, epsilon: float, r1: float) -> float:
    if model.law.is_gaussian:
        raise ParameterError("the scan needs a jump part: alpha must be < 2")
    if not r1 > 0.0:
        raise ParameterError("r1 must be positive")
    r2 = float(model.beta.min())
    if not r2 > 0.0:
        raise ParameterError("the mechanism needs a uniform weight bound: min beta_n > 0")
    if not 0.0 < epsilon < r1 * r2:
        raise ParameterError(
            f"epsilon must be a positive number strictly smaller than r1*r2 = {r1 * r2}; "
            f"got {epsilon} (the contradiction argument needs the strict inequality)"
        )
    return r2


def cadlag_failure_scan(
    model: SpectralModel,
    horizon: float,
    window: float,
    epsilon: float,
    probe_times,
    stream: RngStreamKey,
    *,
    r1: float,
    points_per_window: int = 8,
    include_residual: bool = True,
    forced_jumps=None,
    max_cells: int = DEFAULT_MAX_CELLS,
) -> OscillationReport:
    """Fraction of probe windows whose oscillation lower bound reaches epsilon.

    Simulates a jump-resolved field (ledger threshold r1) and evaluates the
    oscillation lower bound over each window (t, t + window).  Any in-window
    ledger jump contributes its full |beta * dL| >= r1 * min(beta) through
    the stored left-limit/post-jump pair, so with epsilon below r1*r2 the
    fraction tends to 1 as the truncation level grows; the next grid point's
    decay factor e^{-lambda_N * window} is reported alongside.
    """
    r2 = _check_scan_preconditions(model, epsilon, r1)
    del r2
    path = window_field(
        model,
        horizon,
        probe_times,
        window,
        stream,
        r1,
        points_per_window=points_per_window,
        include_residual=include_residual,
        forced_jumps=forced_jumps,
        max_cells=max_cells,
    )
    probe_times = np.asarray(probe_times, dtype=float)
    bounds = np.array(
        [oscillation_lower_bound(path, (t, t + window)) for t in probe_times]
    )
    report = OscillationReport(
        probe_times=probe_times,
        window=window,
        osc_lower_bounds=bounds,
        epsilon=epsilon,
        fraction_exceeding=float(np.mean(bounds >= epsilon)),
        n_components=model.n_components,
        decay_correction=math.exp(-model.lam[-1] * window),
    )
    report.validate()
    return report


def question4_probe(
    model: SpectralModel,
    delta: float,
    horizon: float,
    window: float,
    probe_times,
    stream: RngStreamKey,
    *,
    r1: float,
    epsilon: float,
    points_per_window: int = 8,
    include_residual: bool = True,
    n_trend=None,
    trend_replicas: int = 8,
    max_cells: int = DEFAULT_MAX_CELLS,
) -> OscillationReport:
    """EXPLORATORY window scan with the weighted-norm oscillation statistic.

    Probes the open negative-delta bracket [-1/alpha, 0): the statistic is
    the lambda_j^delta-weighted norm of the per-window coordinate max-min
    vector.  Nothing is asserted about the answer -- the report is labeled
    exploratory, and the optional N-trend table carries confidence bands
    only.
    """
    alpha = model.law.alpha
    if model.law.is_gaussian:
        raise ParameterError("the probe needs a jump part: alpha must be < 2")
    if not (-1.0 / alpha <= delta < 0.0):
        raise ParameterError(
            f"delta must lie in [-1/alpha, 0) = [{-1.0 / alpha}, 0), got {delta}"
        )
    _check_scan_preconditions(model, epsilon, r1)
    path = window_field(
        model,
        horizon,
        probe_times,
        window,
        stream,
        r1,
        points_per_window=points_per_window,
        include_residual=include_residual,
        max_cells=max_cells,
    )
    probe_times = np.asarray(probe_times, dtype=float)
    bounds = np.array(
        [
            weighted_window_oscillation(path, (t, t + window), delta, model.lam)
            for t in probe_times
        ]
    )
    trend = []
    if n_trend is not None:
        for n in n_trend:
            sub = model.truncate(int(n))
            fracs, pooled = [], []
            for rep in range(trend_replicas):
                rep_stream = RngStreamKey(
                    stream.experiment_id, stream.replica + 1 + rep, 0
                )
                rep_report = question4_probe(
                    sub,
                    delta,
                    horizon,
                    window,
                    probe_times,
                    rep_stream,
                    r1=r1,
                    epsilon=epsilon,
                    points_per_window=points_per_window,
                    include_residual=include_residual,
                    max_cells=max_cells,
                )
                fracs.append(rep_report.fraction_exceeding)
                pooled.extend(rep_report.osc_lower_bounds)
            pooled = np.asarray(pooled)
            f = float(np.mean(fracs))
            se = math.sqrt(max(f * (1.0 - f), 1e-12) / (trend_replicas * probe_times.size))
            trend.append(
                {
                    "n_components": int(n),
                    "fraction": f,
                    "fraction_low": max(f - 1.96 * se, 0.0),
                    "fraction_high": min(f + 1.96 * se, 1.0),
                    "bound_q25": float(np.quantile(pooled, 0.25)),
                    "bound_median": float(np.quantile(pooled, 0.5)),
                    "bound_q75": float(np.quantile(pooled, 0.75)),
                }
            )
    report = OscillationReport(
        probe_times=probe_times,
        window=window,
        osc_lower_bounds=bounds,
        epsilon=epsilon,
        fraction_exceeding=float(np.mean(bounds >= epsilon)),
        n_components=model.n_components,
        decay_correction=math.exp(-model.lam[-1] * window),
        exploratory=True,
        delta=delta,
        trend=trend,
    )
    report.validate()
    return report
