"""Weighted-l2 diagnostics: norms, membership thresholds, median slope fits.

The space H_delta is identified with the weighted sequence space whose norm
is (sum_j lambda_j**delta * |x_j|**2)**(1/2); delta = 0 gives the plain l2
norm and larger delta weights the high-frequency coordinates more heavily.

Empirical scale estimates in this module are medians, never means: for
stability index alpha < 2 the second moments of the coordinates are
infinite, so only quantiles carry usable scale information.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InsufficientReplicasError, ParameterError
from .sampling import StableLaw

__all__ = [
    "WeightedNormSpec",
    "MembershipVerdict",
    "SlopeFit",
    "PartialSumProfile",
    "h_delta_norm",
    "analytic_membership",
    "tail_exponent_via_medians",
    "partial_sum_profile",
    "predicted_median_slope",
    "SLOPE_TOLERANCE",
    "PLATEAU_SLOPE_CUT",
    "MIN_CLASSIFY_COMPONENTS",
    "MIN_REPLICAS",
]

# Default tolerance on fitted median slopes, and the |slope| cut separating a
# plateauing partial-sum profile from genuine growth.
SLOPE_TOLERANCE = 0.2
PLATEAU_SLOPE_CUT = 0.1
MIN_CLASSIFY_COMPONENTS = 1000
MIN_REPLICAS = 1000
# Guard band around the critical exponent -1 for the general-lambda heuristic.
HEURISTIC_GUARD = 0.05


@dataclass(frozen=True)
class WeightedNormSpec:
    """Weight exponent delta and the eigenvalue sequence carrying the weights."""

    delta: float
    lam: np.ndarray

    def __post_init__(self) -> None:
        lam = np.asarray(self.lam, dtype=float).copy()
        if lam.ndim != 1 or lam.size == 0 or not np.all(lam > 0.0):
            raise ParameterError("eigenvalues must be a nonempty positive sequence")
        lam.setflags(write=False)
        object.__setattr__(self, "lam", lam)

    def weights(self, n: int | None = None) -> np.ndarray:
        lam = self.lam if n is None else self.lam[:n]
        return lam**self.delta


@dataclass(frozen=True)
class MembershipVerdict:
    """Outcome of the series membership test.

    ``exponent`` is the power of j in the tested term sequence; membership
    means exponent < -1 strictly (a boundary value is not a member).  The
    heuristic flag marks the fitted-exponent path used for eigenvalue
    sequences other than j^2, with ``borderline`` set when the fit lands
    inside the guard band around -1.
    """

    member: bool
    exponent: float
    heuristic: bool = False
    borderline: bool = False


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    se: float
    ci_low: float
    ci_high: float
    j_values: np.ndarray
    log_medians: np.ndarray
    fitted: np.ndarray


@dataclass(frozen=True)
class PartialSumProfile:
    partial_sums: np.ndarray
    classification: str | None
    slope: float


def h_delta_norm(x, spec: WeightedNormSpec) -> float:
    """Weighted norm (sum_j lambda_j^delta |x_j|^2)^(1/2) of a coefficient vector."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size > spec.lam.size:
        raise ParameterError("coefficient vector longer than the eigenvalue sequence")
    if not np.all(np.isfinite(x)):
        raise ParameterError("coefficients must be finite")
    return float(np.sqrt(np.sum(spec.weights(x.size) * x * x)))


def _term_exponents(delta: float, law: StableLaw, target: str) -> float:
    """Exponent of j in the membership series for the heat eigenvalues j^2.

    Noise terms are lambda_j^(alpha*delta/2) = j^(alpha*delta); solution
    terms carry the extra stationary factor (alpha*lambda_j)^-1, one more
    power of j^-2.
    """
    if target in ("noise", "L"):
        return law.alpha * delta
    if target in ("solution", "X"):
        return law.alpha * delta - 2.0
    raise ParameterError(f"target must be 'noise' or 'solution', got {target!r}")


def analytic_membership(delta: float, law: StableLaw, target: str, lam=None) -> MembershipVerdict:
    """Does the noise (or the solution) take values in H_delta?

    For the heat eigenvalues the answer is exact: the defining series
    converges iff its term exponent is below -1, which reproduces the
    thresholds delta < -1/alpha (noise) and delta < 1/alpha (solution),
    including the Gaussian endpoints -1/2 and 1/2.  Boundary deltas are
    classified not-member (the thresholds are strict).

    An explicit ``lam`` sequence other than j^2 is handled by fitting the
    log-term exponent against log j and comparing with -1 under a small
    guard band; such verdicts are flagged heuristic.
    """
    if lam is not None:
        lam = np.asarray(lam, dtype=float)
        j = np.arange(1, lam.size + 1, dtype=float)
        if not np.array_equal(lam, j * j):
            return _membership_heuristic(delta, law, target, lam)
    exponent = _term_exponents(delta, law, target)
    return MembershipVerdict(member=exponent < -1.0, exponent=exponent)


def _membership_heuristic(delta, law, target, lam) -> MembershipVerdict:
    if lam.size < 8:
        raise ParameterError("need at least 8 eigenvalues for the heuristic series test")
    terms = lam ** (law.alpha * delta / 2.0)
    if target in ("solution", "X"):
        terms = terms / (law.alpha * lam)
    elif target not in ("noise", "L"):
        raise ParameterError(f"target must be 'noise' or 'solution', got {target!r}")
    j = np.arange(1, lam.size + 1, dtype=float)
    slope = _lsq_slope(np.log(j), np.log(terms))
    return MembershipVerdict(
        member=slope < -1.0,
        exponent=slope,
        heuristic=True,
        borderline=abs(slope + 1.0) <= HEURISTIC_GUARD,
    )


def _lsq_slope(x, y) -> float:
    x = x - x.mean()
    return float(np.dot(x, y - y.mean()) / np.dot(x, x))


def predicted_median_slope(delta: float, law: StableLaw, target: str) -> float:
    """Slope of log median(lambda_j^delta |Z^j|^2) against log j.

    Stationary solution coordinates scale like j^(-2/alpha), noise
    coordinates at fixed time like j^0, giving 2*delta - 4/alpha and
    2*delta respectively.
    """
    if target in ("solution", "X"):
        return 2.0 * delta - 4.0 / law.alpha
    if target in ("noise", "L"):
        return 2.0 * delta
    raise ParameterError(f"target must be 'noise' or 'solution', got {target!r}")


def tail_exponent_via_medians(samples, j_values, *, min_replicas: int = MIN_REPLICAS, z: float = 1.96) -> SlopeFit:
    """Weighted least-squares slope of log per-component medians against log j.

    ``samples`` is a (replicas, n_components) matrix of the already-weighted
    values lambda_j^delta |Z^j|^2.  Per-component median confidence intervals
    come from order statistics (distribution-free), and their log-widths set
    the weights of the fit.  Refuses below the replica floor and for
    component ranges narrower than 1.5 decades.
    """
    samples = np.asarray(samples, dtype=float)
    j_values = np.asarray(j_values, dtype=float)
    if samples.ndim != 2 or samples.shape[1] != j_values.size:
        raise ParameterError("samples must be (replicas, len(j_values))")
    r = samples.shape[0]
    if r < min_replicas:
        raise InsufficientReplicasError(
            f"got {r} replicas, need at least {min_replicas}: the slope "
            f"standard error scales as replicas**-0.5, so the confidence band "
            f"would be ~{math.sqrt(min_replicas / max(r, 1)):.1f}x wider than "
            f"at the floor"
        )
    if j_values.max() / j_values.min() < 10**1.5:
        raise ParameterError("component range must span at least 1.5 decades")

    ordered = np.sort(samples, axis=0)
    half_width = z * math.sqrt(r) / 2.0
    k_lo = max(int(math.floor(r / 2.0 - half_width)), 0)
    k_hi = min(int(math.ceil(r / 2.0 + half_width)), r - 1)
    medians = np.median(samples, axis=0)
    lo, hi = ordered[k_lo], ordered[k_hi]
    if np.any(medians <= 0.0) or np.any(lo <= 0.0):
        raise ParameterError("medians must be positive for a log-log fit")
    sigma_log = np.log(hi / lo) / (2.0 * z)
    sigma_log = np.maximum(sigma_log, 1e-12)

    x, y, w = np.log(j_values), np.log(medians), 1.0 / sigma_log**2
    sw = w.sum()
    xbar = np.dot(w, x) / sw
    ybar = np.dot(w, y) / sw
    sxx = np.dot(w, (x - xbar) ** 2)
    slope = float(np.dot(w, (x - xbar) * (y - ybar)) / sxx)
    se = float(math.sqrt(1.0 / sxx))
    intercept = ybar - slope * xbar
    return SlopeFit(
        slope=slope,
        se=se,
        ci_low=slope - z * se,
        ci_high=slope + z * se,
        j_values=j_values,
        log_medians=y,
        fitted=intercept + slope * x,
    )


def partial_sum_profile(samples, spec: WeightedNormSpec) -> PartialSumProfile:
    """Partial sums S_J = sum_{j<=J} lambda_j^delta |x_j|^2 with a drift verdict.

    ``samples`` is either one coefficient vector or a (replicas, N) matrix;
    matrices are reduced to the per-component median of the weighted terms,
    the typical profile of the ensemble.  Classification fits the slope of
    log S_J against log J over the upper half of the range in log scale
    (J >= sqrt(N)): |slope| below 0.1 is a plateau, anything else growth.
    Needs at least 1000 components to classify; shorter profiles report
    classification None.
    """
    arr = np.asarray(samples, dtype=float)
    if arr.ndim == 1:
        terms = spec.weights(arr.size) * arr * arr
    elif arr.ndim == 2:
        terms = np.median(spec.weights(arr.shape[1]) * arr * arr, axis=0)
    else:
        raise ParameterError("samples must be a vector or a (replicas, N) matrix")
    n = terms.size
    sums = np.cumsum(terms)
    if n < MIN_CLASSIFY_COMPONENTS:
        return PartialSumProfile(partial_sums=sums, classification=None, slope=float("nan"))
    if sums[-1] == 0.0:
        return PartialSumProfile(partial_sums=sums, classification="plateau", slope=0.0)
    j_from = max(int(math.ceil(math.sqrt(n))), 1)
    upper = np.arange(j_from, n + 1)
    s_upper = sums[j_from - 1 :]
    if np.any(s_upper <= 0.0):
        # leading zeros can push vanishing sums into the window; they cannot
        # grow, so call it a plateau
        return PartialSumProfile(partial_sums=sums, classification="plateau", slope=0.0)
    slope = _lsq_slope(np.log(upper), np.log(s_upper))
    label = "plateau" if abs(slope) < PLATEAU_SLOPE_CUT else "growth"
    return PartialSumProfile(partial_sums=sums, classification=label, slope=slope)
