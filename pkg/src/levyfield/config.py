"""Experiment configuration: one flat record, validated before any work starts.

Configurations live in a single JSON file (schema documented in the README);
command-line flags may override any field.  ``validate`` is a pure check
returning field-prefixed diagnostics -- it never runs anything -- and a
config round-trips through ``to_dict``/``from_dict`` losslessly, which is
what makes manifests sufficient to re-run an experiment.
"""

from __future__ import annotations

import math
import os
from dataclasses import asdict, dataclass, field, fields

from .dynamics import DEFAULT_MAX_CELLS

KINDS = (
    "simulate",
    "threshold-scan",
    "jump-density",
    "oscillation",
    "gaussian-check",
    "question4-probe",
)

MODES = ("marginal-exact", "jump-resolved")

OUTPUT_DIR_ENV = "LEVYFIELD_OUTDIR"

# Fields that must be present in the raw mapping for each experiment kind
# (everything else has a usable default).
REQUIRED_BY_KIND = {
    "simulate": (),
    "threshold-scan": ("delta_grid",),
    "jump-density": ("r1",),
    "oscillation": ("r1", "epsilon"),
    "gaussian-check": ("delta_grid", "delta"),
    "question4-probe": ("r1", "epsilon", "delta"),
}


@dataclass
class ExperimentConfig:
    kind: str
    seed: int = 0
    output_dir: str | None = None
    workers: int = 1
    alpha: float = 1.0
    sigma: float = 1.0
    n_components: int = 100
    horizon: float = 1.0
    beta: float | list = 1.0
    lambda_rule: str | list = "squares"
    grid_step: float = 1e-2
    mode: str = "marginal-exact"
    r_resolve: float = 1e-2
    r1: float | None = None
    epsilon: float | None = None
    window: float = 1e-2
    replicas: int = 100
    delta: float | None = None
    delta_stable: float = 0.0
    delta_grid: list | None = None
    target: str = "solution"
    probe_times: list | None = None
    n_grid: list | None = None
    width: float | None = None
    jmax: int = 2000
    beta_exp_grid: list = field(default_factory=lambda: [0.05, 0.1, 0.2])
    levels: list = field(default_factory=lambda: [8, 10, 12])
    points_per_window: int = 8
    max_cells: int = DEFAULT_MAX_CELLS

    def __post_init__(self) -> None:
        # keep every sequence a plain list so serialization round-trips
        for name in ("beta", "delta_grid", "probe_times", "n_grid", "beta_exp_grid", "levels"):
            value = getattr(self, name)
            if isinstance(value, tuple):
                setattr(self, name, list(value))

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise KeyError(f"unknown config fields: {sorted(unknown)}")
        return cls(**raw)

    def resolved_output_dir(self) -> str:
        if self.output_dir:
            return self.output_dir
        return os.environ.get(OUTPUT_DIR_ENV, ".")


def _check_positive(diags, cfg, name) -> None:
    value = getattr(cfg, name)
    if value is None or not (isinstance(value, (int, float)) and value > 0 and math.isfinite(value)):
        diags.append(f"{name}: must be a positive finite number, got {value!r}")


def validate(cfg: ExperimentConfig) -> list[str]:
    """Pure field-level validation; the list of diagnostics is the output."""
    diags: list[str] = []
    if cfg.kind not in KINDS:
        diags.append(f"kind: must be one of {KINDS}, got {cfg.kind!r}")
        return diags

    if not (isinstance(cfg.seed, int) and 0 <= cfg.seed < 2**64):
        diags.append(f"seed: must be a 64-bit unsigned integer, got {cfg.seed!r}")
    if not (isinstance(cfg.workers, int) and cfg.workers >= 1):
        diags.append(f"workers: must be a positive integer, got {cfg.workers!r}")
    if not (isinstance(cfg.alpha, (int, float)) and 0.0 < cfg.alpha <= 2.0):
        diags.append(f"alpha: must lie in (0, 2], got {cfg.alpha!r}")
    for name in ("sigma", "horizon", "grid_step", "r_resolve", "window"):
        _check_positive(diags, cfg, name)
    if not (isinstance(cfg.n_components, int) and cfg.n_components >= 1):
        diags.append(f"n_components: must be a positive integer, got {cfg.n_components!r}")
    if not (isinstance(cfg.replicas, int) and cfg.replicas >= 1):
        diags.append(f"replicas: must be a positive integer, got {cfg.replicas!r}")
    if cfg.mode not in MODES:
        diags.append(f"mode: must be one of {MODES}, got {cfg.mode!r}")

    if isinstance(cfg.beta, list):
        if len(cfg.beta) != cfg.n_components or any(b < 0 for b in cfg.beta):
            diags.append("beta: explicit weights must be nonnegative and match n_components")
    elif not (isinstance(cfg.beta, (int, float)) and cfg.beta >= 0):
        diags.append(f"beta: must be a nonnegative weight or list, got {cfg.beta!r}")
    if isinstance(cfg.lambda_rule, list):
        if len(cfg.lambda_rule) != cfg.n_components or any(l <= 0 for l in cfg.lambda_rule):
            diags.append("lambda_rule: explicit eigenvalues must be positive and match n_components")
    elif cfg.lambda_rule != "squares":
        diags.append(f"lambda_rule: must be 'squares' or an explicit list, got {cfg.lambda_rule!r}")

    for name in REQUIRED_BY_KIND[cfg.kind]:
        if getattr(cfg, name) is None:
            diags.append(f"{name}: required for kind {cfg.kind!r}")

    jump_kinds = ("jump-density", "oscillation", "question4-probe")
    needs_jumps = cfg.kind in jump_kinds or (cfg.kind == "simulate" and cfg.mode == "jump-resolved")
    if needs_jumps and cfg.alpha == 2.0:
        diags.append("alpha: alpha = 2 has no jump part; jump experiments and "
                     "jump-resolved mode need alpha < 2")

    if cfg.kind in ("oscillation", "question4-probe") and cfg.r1 is not None and cfg.epsilon is not None:
        r2 = min(cfg.beta) if isinstance(cfg.beta, list) else cfg.beta
        if r2 <= 0:
            diags.append("beta: the oscillation mechanism needs min beta_n > 0")
        elif not 0.0 < cfg.epsilon < cfg.r1 * r2:
            diags.append(
                f"epsilon: must be strictly smaller than r1*r2 = {cfg.r1 * r2} "
                f"(strict inequality required), got {cfg.epsilon}"
            )
        if cfg.probe_times is not None:
            pts = cfg.probe_times
            if not pts or any(t <= 0 for t in pts) or any(
                pts[i] >= pts[i + 1] for i in range(len(pts) - 1)
            ):
                diags.append("probe_times: must be strictly increasing positive times")
            elif pts[-1] + cfg.window > cfg.horizon * (1 + 1e-12):
                diags.append("probe_times: last window (t, t + window) exceeds the horizon")

    if cfg.kind in ("oscillation", "question4-probe") and cfg.n_grid is not None:
        if not all(isinstance(n, int) and 1 <= n for n in cfg.n_grid):
            diags.append("n_grid: must be positive integers")

    if cfg.kind == "threshold-scan":
        if cfg.delta_grid is not None and not cfg.delta_grid:
            diags.append("delta_grid: must be nonempty")
        if cfg.target not in ("solution", "noise", "X", "L"):
            diags.append(f"target: must be 'solution' or 'noise', got {cfg.target!r}")
        if cfg.replicas < 1000:
            diags.append("replicas: median slope fits need at least 1000 replicas")

    if cfg.kind == "jump-density":
        width = cfg.width if cfg.width is not None else cfg.window
        if not (isinstance(width, (int, float)) and 0 < width <= cfg.horizon):
            diags.append(f"width: must lie in (0, horizon], got {width!r}")

    if cfg.kind == "question4-probe" and cfg.delta is not None and 0 < cfg.alpha <= 2:
        if not (-1.0 / cfg.alpha <= cfg.delta < 0.0):
            diags.append(
                f"delta: must lie in [-1/alpha, 0) = [{-1.0 / cfg.alpha}, 0), got {cfg.delta}"
            )

    if cfg.kind == "gaussian-check":
        if cfg.jmax < 100:
            diags.append(f"jmax: must be at least 100, got {cfg.jmax}")
        if any(not 0 < b < 1 for b in cfg.beta_exp_grid):
            diags.append("beta_exp_grid: every exponent must lie in (0, 1)")
        if not cfg.levels or any(not isinstance(k, int) or k < 1 for k in cfg.levels):
            diags.append("levels: must be positive dyadic exponents")

    if cfg.kind == "simulate" and cfg.mode == "marginal-exact":
        cells = (int(round(cfg.horizon / cfg.grid_step)) + 1) * cfg.n_components if cfg.grid_step else 0
        if cells > cfg.max_cells:
            diags.append(f"grid_step: output would need {cells} cells > max_cells {cfg.max_cells}")

    return diags


def validate_raw(raw: dict) -> list[str]:
    """Validate a raw mapping, reporting missing required fields by name."""
    diags: list[str] = []
    if "kind" not in raw:
        diags.append(f"kind: missing (one of {KINDS})")
        return diags
    kind = raw["kind"]
    if kind in REQUIRED_BY_KIND:
        for name in REQUIRED_BY_KIND[kind]:
            if name not in raw:
                diags.append(f"{name}: missing (required for kind {kind!r})")
    try:
        cfg = ExperimentConfig.from_dict(raw)
    except (KeyError, TypeError) as exc:
        diags.append(f"config: {exc}")
        return diags
    seen = {d.split(":", 1)[0] for d in diags}
    diags.extend(d for d in validate(cfg) if d.split(":", 1)[0] not in seen)
    return diags
