"""Exact inverse normal combination test with dose selection.

The stage-1 p-value p1s is adjusted for the two-dose selection before
being combined with the stage-2 p-value:

    p1a = (1 - Phi2(q, q; rho)) w + Phi2(-q, -q; rho) (1 - w),
          q = Phi^-1(1 - p1s), rho = 1/(1+r)

(left unadjusted for w <= 0.5, keeping strong control), and

    p_c = 1 - Phi(sqrt(s) Phi^-1(1 - p1a) + sqrt(1-s) Phi^-1(1 - p2s)).

The null is rejected when p_c < alpha. ``alpha_c`` converts the
combination test into an equivalent single-test significance level by
averaging the combined statistic over the rejection boundary, weighting
by the density of the selected stage-1 statistic; Sidak and Dunnett
adjustments are provided as conventional comparators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np
from scipy.special import ndtr, ndtri

from .alpha_exact import TrialGeometry, solve_alpha_e
from .errors import BracketingError, InvalidParameterError
from .numerics import bvn_cdf, extreme_pair_density, find_root

__all__ = [
    "PValuePair",
    "adjust_p1",
    "invert_p1",
    "combination_p",
    "reject",
    "sidak_adjust",
    "dunnett_adjust",
    "alpha_c",
    "alpha_level_sweep",
    "AlphaLevels",
    "DEFAULT_W_GRID",
]

DEFAULT_W_GRID: tuple[float, ...] = tuple(round(0.5 + 0.05 * i, 10) for i in range(11))


@dataclass(frozen=True)
class PValuePair:
    """One-sided stage-wise p-values from the two individual stages."""

    p1s: float
    p2s: float

    def __post_init__(self):
        for name in ("p1s", "p2s"):
            v = getattr(self, name)
            if not (0.0 < v < 1.0):
                raise InvalidParameterError(f"{name} must lie in (0, 1), got {v!r}")


def _check_unit_open(name: str, value) -> None:
    arr = np.asarray(value, dtype=float)
    if np.any(arr <= 0.0) or np.any(arr >= 1.0):
        raise InvalidParameterError(f"{name} must lie in (0, 1), got {value!r}")


def _check_w_r(w: float, r: float) -> None:
    if not (0.0 <= w <= 1.0):
        raise InvalidParameterError(f"w must lie in [0, 1], got {w!r}")
    if not r > 0.0:
        raise InvalidParameterError(f"r must be positive, got {r!r}")


def adjust_p1(p1s, w: float, r: float):
    """Stage-1 p-value adjusted for two-dose selection; broadcasts over p1s.

    Identity for w <= 0.5; strictly increasing in p1s with range (0, 1);
    reduces to the Dunnett adjustment at w = 1.
    """
    _check_unit_open("p1s", p1s)
    _check_w_r(w, r)
    arr = np.asarray(p1s, dtype=float)
    if w <= 0.5:
        return float(arr[()]) if arr.ndim == 0 else arr.copy()
    q = ndtri(1.0 - arr)
    rho = 1.0 / (1.0 + r)
    out = (1.0 - bvn_cdf(q, q, rho)) * w + bvn_cdf(-q, -q, rho) * (1.0 - w)
    return float(out) if arr.ndim == 0 else np.asarray(out)


def sidak_adjust(p1s):
    """Independence-based selection adjustment 1 - (1 - p)^2."""
    _check_unit_open("p1s", p1s)
    arr = np.asarray(p1s, dtype=float)
    out = 1.0 - (1.0 - arr) ** 2
    return float(out[()]) if arr.ndim == 0 else out


def dunnett_adjust(p1s, r: float):
    """P(max of the two correlated stage-1 statistics exceeds Phi^-1(1-p)).

    Never exceeds the Sidak adjustment because the shared control makes
    the two statistics positively correlated.
    """
    _check_unit_open("p1s", p1s)
    if not r > 0.0:
        raise InvalidParameterError(f"r must be positive, got {r!r}")
    arr = np.asarray(p1s, dtype=float)
    q = ndtri(1.0 - arr)
    out = 1.0 - bvn_cdf(q, q, 1.0 / (1.0 + r))
    return float(out) if arr.ndim == 0 else np.asarray(out)


def invert_p1(p1a: float, w: float, r: float) -> float:
    """Stage-1 p-value whose adjustment equals ``p1a``.

    The root is bracketed by [1 - sqrt(1 - p1a), p1a]: the Sidak
    adjustment dominates the exact one, and adjustment can only increase
    a p-value. Identity for w <= 0.5.
    """
    _check_unit_open("p1a", p1a)
    _check_w_r(w, r)
    if w <= 0.5:
        return float(p1a)
    lo = 1.0 - math.sqrt(1.0 - p1a)
    hi = float(p1a)
    root = find_root(lambda p: float(adjust_p1(p, w, r)) - p1a, lo, hi, tol=1e-14)
    return root


def _invert_p1_grid(p1a: np.ndarray, w: float, r: float, iters: int = 90) -> np.ndarray:
    """Vectorised bisection inverse of adjust_p1 on a grid of p1a values."""
    if w <= 0.5:
        return p1a.copy()
    lo = 1.0 - np.sqrt(1.0 - p1a)
    hi = p1a.copy()
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        below = adjust_p1(mid, w, r) <= p1a
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    mid = 0.5 * (lo + hi)
    residual = np.abs(adjust_p1(mid, w, r) - p1a)
    bad = residual > 1e-8
    if np.any(bad):
        i = int(np.argmax(residual))
        raise BracketingError(
            f"inversion failed at boundary point p1a={p1a[i]!r} (residual {residual[i]:.3e})")
    return mid


def combination_p(p1a, p2s, s: float):
    """Inverse normal combination p-value with weights sqrt(s), sqrt(1-s).

    Symmetric under swapping the stages together with s <-> 1-s; the
    weight collapse s=0 (s=1) returns p2s (p1a) exactly. Broadcasts.
    """
    _check_unit_open("p1a", p1a)
    _check_unit_open("p2s", p2s)
    if not (0.0 <= s <= 1.0):
        raise InvalidParameterError(f"s must lie in [0, 1], got {s!r}")
    a1 = np.asarray(p1a, dtype=float)
    a2 = np.asarray(p2s, dtype=float)
    if s == 0.0:
        out = np.broadcast_arrays(a1, a2)[1].astype(float)
    elif s == 1.0:
        out = np.broadcast_arrays(a1, a2)[0].astype(float)
    else:
        z = math.sqrt(s) * ndtri(1.0 - a1) + math.sqrt(1.0 - s) * ndtri(1.0 - a2)
        out = 1.0 - ndtr(z)
    scalar = np.ndim(p1a) == 0 and np.ndim(p2s) == 0
    return float(out[()]) if scalar else np.asarray(out)


def reject(pair: PValuePair, w: float, r: float, s: float, alpha: float) -> bool:
    """Combination-test decision: adjusted-and-combined p-value < alpha."""
    p1a = adjust_p1(pair.p1s, w, r)
    return bool(combination_p(p1a, pair.p2s, s) < alpha)


def alpha_c(w: float, geom: TrialGeometry, grid_n: int = 10_000,
            method: Literal["exact", "sidak", "dunnett"] = "exact") -> float:
    """Single-test significance level equivalent to the combination test.

    Averages the unadjusted combined statistic over the rejection
    boundary p_c = alpha:

    1. grid of stage-2 p-values at midpoints (k - 0.5)/grid_n;
    2. boundary stage-1 adjusted values p1a solving p_c = alpha;
    3. points with p1a or p2 <= 1e-6 are dropped;
    4. the stage-1 p-value is recovered by the method's inverse
       adjustment (exact inversion, Sidak closed form, or Dunnett
       inversion);
    5. each boundary point is weighted by the density of the selected
       stage-1 statistic, a w-mixture of the max/min extreme-pair
       densities at correlation 1/(1+r) (w = 1 for the Sidak and
       Dunnett comparators, which assume the winner is always picked);
    6. the weighted mean combined statistic is mapped back to a level.

    Summation is compensated (math.fsum) so the result does not depend
    on evaluation order.
    """
    if grid_n < 1000:
        raise InvalidParameterError(f"grid_n must be >= 1000, got {grid_n!r}")
    if method not in ("exact", "sidak", "dunnett"):
        raise InvalidParameterError(f"unknown method {method!r}")
    if not (0.0 <= w <= 1.0):
        raise InvalidParameterError(f"w must lie in [0, 1], got {w!r}")
    s, r, alpha = geom.s, geom.r, geom.alpha

    p2 = (np.arange(1, grid_n + 1) - 0.5) / grid_n
    q_alpha = ndtri(1.0 - alpha)
    p1a = 1.0 - ndtr((q_alpha - math.sqrt(1.0 - s) * ndtri(1.0 - p2)) / math.sqrt(s))
    keep = (p1a > 1e-6) & (p2 > 1e-6)
    p1a, p2 = p1a[keep], p2[keep]

    if method == "exact":
        p1s = _invert_p1_grid(p1a, w, r)
        w_density = w
    elif method == "sidak":
        p1s = 1.0 - np.sqrt(1.0 - p1a)
        w_density = 1.0
    else:
        p1s = _invert_p1_grid(p1a, 1.0, r)
        w_density = 1.0

    q1 = ndtri(1.0 - p1s)
    z = math.sqrt(s) * q1 + math.sqrt(1.0 - s) * ndtri(1.0 - p2)
    rho = geom.rho_pair
    dens = (extreme_pair_density(q1, rho, "max") * w_density
            + extreme_pair_density(q1, rho, "min") * (1.0 - w_density))
    num = math.fsum((z * dens).tolist())
    den = math.fsum(dens.tolist())
    return float(1.0 - ndtr(num / den))


@dataclass(frozen=True)
class AlphaLevels:
    """Adjusted levels at one winner probability."""

    w: float
    alpha_e: float
    alpha_c: float
    alpha_c_dunnett: float
    alpha_c_sidak: float


def alpha_level_sweep(geom: TrialGeometry,
                      w_grid: Sequence[float] = DEFAULT_W_GRID,
                      grid_n: int = 10_000) -> list[AlphaLevels]:
    """Both exact adjusted levels plus the Dunnett/Sidak comparators per w.

    The comparator columns do not depend on w (they assume w = 1) and
    are computed once.
    """
    if not len(w_grid):
        raise InvalidParameterError("w_grid must be nonempty")
    if any(not (0.5 <= w <= 1.0) for w in w_grid):
        raise InvalidParameterError("w_grid entries must lie in [0.5, 1]")
    ac_dunnett = alpha_c(1.0, geom, grid_n, "dunnett")
    ac_sidak = alpha_c(1.0, geom, grid_n, "sidak")
    return [
        AlphaLevels(
            w=float(w),
            alpha_e=solve_alpha_e(geom, w),
            alpha_c=alpha_c(w, geom, grid_n, "exact"),
            alpha_c_dunnett=ac_dunnett,
            alpha_c_sidak=ac_sidak,
        )
        for w in w_grid
    ]
