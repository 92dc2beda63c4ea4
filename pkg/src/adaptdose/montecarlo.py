"""Seeded Monte Carlo verification of the analytic design quantities.

Every simulator draws its latent normals through a counter-based
generator (Philox) keyed by the user seed, with one independent counter
block per fixed-size chunk of replicates. Results are therefore
bit-identical for a given (seed, n) regardless of how the chunks are
scheduled, and chunks may safely run in parallel. Event counts are
aggregated as integers.

Latent models
-------------
* ``simulate_w`` in ``difference`` mode draws the standardised
  trivariate differences (Y-diff, X-diff, S-diff) with correlations
  (rho_xy, rho_ys, rho_xs) — the same geometry the closed-form winner
  probability integrates.
* ``simulate_w`` in ``arm_level`` mode instead builds per-arm triples
  (Y_j, X_j, S_j) around a shared-control component: Y_j =
  sqrt(rho_c) Z0 + sqrt(1 - rho_c) E_j with rho_c = 1/(1+r), and X/S
  attached to the arm component E_j so that the WITHIN-ARM correlations
  equal (rho_xy, rho_ys, rho_xs) at face value. This inflates the
  difference-level correlations by 1/sqrt(1 - rho_c) and is provided as
  a diagnostic: the gap to difference mode quantifies how much the
  closed form would be off if the supplied correlations were within-arm
  quantities instead of difference-level ones.
* ``simulate_type1_full`` uses the shared-control construction with X/S
  attached at corr(E_j, X_j) = rho_xy, which preserves the
  difference-level geometry exactly (it is what a patient-level latent
  model implies, and it keeps the closed-form winner probability exact
  within the simulation).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Literal

import numpy as np
from scipy.special import ndtr, ndtri

from .alpha_exact import TrialGeometry, solve_alpha_e
from .combination import adjust_p1, combination_p, dunnett_adjust, sidak_adjust
from .errors import InvalidParameterError
from .numerics import Corr3
from .selection import CorrelationSet, DesignParams, SelectionRule, winner_prob

__all__ = [
    "McEstimate",
    "simulate_w",
    "simulate_type1_abstract",
    "simulate_type1_full",
    "BLOCK_SIZE",
]

# Replicates per counter block. Fixed so that a (seed, n) pair always
# maps to the same draws; also bounds per-chunk memory.
BLOCK_SIZE = 1 << 20

_KEY_MASK = (1 << 128) - 1


@dataclass(frozen=True)
class McEstimate:
    """A Monte Carlo proportion with its binomial standard error."""

    value: float
    std_error: float
    n: int
    seed: int

    @classmethod
    def from_count(cls, count: int, n: int, seed: int) -> "McEstimate":
        value = count / n
        return cls(value=value, std_error=math.sqrt(value * (1.0 - value) / n),
                   n=n, seed=seed)


def _check_n_seed(n: int, seed: int, minimum: int) -> tuple[int, int]:
    if int(n) != n or n < minimum:
        raise InvalidParameterError(f"n must be an integer >= {minimum}, got {n!r}")
    if int(seed) != seed or seed < 0:
        raise InvalidParameterError(f"seed must be a nonnegative integer, got {seed!r}")
    return int(n), int(seed)


def _blocks(n: int, seed: int) -> Iterator[tuple[np.random.Generator, int]]:
    """Yield one independent generator per fixed-size block of replicates."""
    key = seed & _KEY_MASK
    offset, block = 0, 0
    while offset < n:
        m = min(BLOCK_SIZE, n - offset)
        bitgen = np.random.Philox(key=key, counter=block << 192)
        yield np.random.Generator(bitgen), m
        offset += m
        block += 1


def _factor(matrix: np.ndarray) -> np.ndarray:
    """Deterministic square root of a PSD matrix (Cholesky, eigh fallback)."""
    try:
        return np.linalg.cholesky(matrix)
    except np.linalg.LinAlgError:
        evals, evecs = np.linalg.eigh(matrix)
        return evecs * np.sqrt(np.maximum(evals, 0.0))


def _selection_mask(rule: SelectionRule, params: DesignParams,
                    b: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Dose-1 selection indicator from standardised rate differences."""
    cx = rule.Cx / params.sigma_x
    cs = rule.Cs / params.sigma_s
    if rule.scenario == 1:
        return (b > -cx) & (c < -cs)
    return (b > cx) & (c < cs)


def _arm_matrix(corr: CorrelationSet, rho_c: float, preserve_within_arm: bool) -> Corr3:
    """Correlation of (E_j, X_j, S_j) for the shared-control construction."""
    if preserve_within_arm:
        scale = 1.0 / math.sqrt(1.0 - rho_c)
        return Corr3(corr.rho_xy * scale, corr.rho_ys * scale, corr.rho_xs)
    return Corr3(corr.rho_xy, corr.rho_ys, corr.rho_xs)


def simulate_w(params: DesignParams, rule: SelectionRule, corr: CorrelationSet,
               mode: Literal["difference", "arm_level"] = "difference",
               n: int = 1_000_000, seed: int = 0, r: float = 1.0) -> McEstimate:
    """Estimate the probability that the selected dose wins on OS.

    ``difference`` mode verifies the closed-form winner probability;
    ``arm_level`` mode is the shared-control diagnostic described in the
    module docstring (``r`` sets the control-sharing correlation
    1/(1+r) and is ignored in difference mode).
    """
    n, seed = _check_n_seed(n, seed, minimum=10_000)
    if mode not in ("difference", "arm_level"):
        raise InvalidParameterError(f"mode must be 'difference' or 'arm_level', got {mode!r}")
    if not r > 0.0:
        raise InvalidParameterError(f"r must be positive, got {r!r}")

    count = 0
    if mode == "difference":
        fac = _factor(Corr3(corr.rho_xy, corr.rho_ys, corr.rho_xs).matrix())
        for rng, m in _blocks(n, seed):
            a, b, c = fac @ rng.standard_normal((3, m))
            sel1 = _selection_mask(rule, params, b, c)
            count += int(np.sum(np.where(sel1, a > 0.0, a < 0.0)))
    else:
        rho_c = 1.0 / (1.0 + r)
        fac = _factor(_arm_matrix(corr, rho_c, preserve_within_arm=True).matrix())
        sq_c, sq_e = math.sqrt(rho_c), math.sqrt(1.0 - rho_c)
        inv_sqrt2 = 1.0 / math.sqrt(2.0)
        for rng, m in _blocks(n, seed):
            z = rng.standard_normal((7, m))
            z0 = z[0]
            arm1 = fac @ z[1:4]
            arm2 = fac @ z[4:7]
            y11 = sq_c * z0 + sq_e * arm1[0]
            y12 = sq_c * z0 + sq_e * arm2[0]
            b = (arm1[1] - arm2[1]) * inv_sqrt2
            c = (arm1[2] - arm2[2]) * inv_sqrt2
            sel1 = _selection_mask(rule, params, b, c)
            count += int(np.sum(np.where(sel1, y11 > y12, y12 > y11)))
    return McEstimate.from_count(count, n, seed)


def simulate_type1_abstract(w: float, geom: TrialGeometry, alpha_e: float,
                            n: int = 1_000_000, seed: int = 0) -> McEstimate:
    """Rejection rate when the winner is picked by an independent coin.

    Draws the two candidate stage-1 statistics with the shared-control
    correlation, selects the max with probability w (min otherwise) via
    a coin independent of their values, pools with an independent
    stage-2 statistic, and rejects above Phi^-1(1 - alpha_e). This is
    the model under which the adjusted-level equation is exact.
    """
    n, seed = _check_n_seed(n, seed, minimum=100_000)
    if not (0.0 <= w <= 1.0):
        raise InvalidParameterError(f"w must lie in [0, 1], got {w!r}")
    if not (0.0 < alpha_e < 0.5):
        raise InvalidParameterError(f"alpha_e must lie in (0, 0.5), got {alpha_e!r}")
    rho_c = geom.rho_pair
    fac = _factor(np.array([[1.0, rho_c], [rho_c, 1.0]]))
    q = float(ndtri(1.0 - alpha_e))
    sq_s, sq_t = math.sqrt(geom.s), math.sqrt(1.0 - geom.s)
    count = 0
    for rng, m in _blocks(n, seed):
        z = rng.standard_normal((3, m))
        u = rng.random(m)
        y11, y12 = fac @ z[:2]
        y2s = z[2]
        y_max = np.maximum(y11, y12)
        y_min = np.minimum(y11, y12)
        y_sel = np.where(u < w, y_max, y_min)
        count += int(np.sum(sq_s * y_sel + sq_t * y2s > q))
    return McEstimate.from_count(count, n, seed)


def simulate_type1_full(params: DesignParams, rule: SelectionRule,
                        corr: CorrelationSet, geom: TrialGeometry,
                        test: Literal["exact_parametric", "combination",
                                      "dunnett", "sidak"],
                        n: int = 1_000_000, seed: int = 0) -> McEstimate:
    """End-to-end rejection rate under the global null.

    Draws the full latent vector (shared-control stage-1 pair, per-arm
    rate statistics, independent stage-2 statistic), applies the actual
    selection rule to the rate differences, then applies the requested
    test: the exact parametric test at the solved adjusted level, the
    exact combination test, or the Dunnett/Sidak combination variants.
    The adjustments use the closed-form winner probability.
    """
    n, seed = _check_n_seed(n, seed, minimum=100_000)
    if test not in ("exact_parametric", "combination", "dunnett", "sidak"):
        raise InvalidParameterError(f"unknown test {test!r}")
    rho_c = geom.rho_pair
    fac = _factor(_arm_matrix(corr, rho_c, preserve_within_arm=False).matrix())
    sq_c, sq_e = math.sqrt(rho_c), math.sqrt(1.0 - rho_c)
    inv_sqrt2 = 1.0 / math.sqrt(2.0)
    sq_s, sq_t = math.sqrt(geom.s), math.sqrt(1.0 - geom.s)

    w_analytic = winner_prob(params, rule, corr).w
    alpha_e = solve_alpha_e(geom, w_analytic)
    q_exact = float(ndtri(1.0 - alpha_e))

    count = 0
    for rng, m in _blocks(n, seed):
        z = rng.standard_normal((8, m))
        z0 = z[0]
        arm1 = fac @ z[1:4]
        arm2 = fac @ z[4:7]
        y2s = z[7]
        y11 = sq_c * z0 + sq_e * arm1[0]
        y12 = sq_c * z0 + sq_e * arm2[0]
        b = (arm1[1] - arm2[1]) * inv_sqrt2
        c = (arm1[2] - arm2[2]) * inv_sqrt2
        sel1 = _selection_mask(rule, params, b, c)
        y1s = np.where(sel1, y11, y12)
        if test == "exact_parametric":
            count += int(np.sum(sq_s * y1s + sq_t * y2s > q_exact))
            continue
        # p-value paths; clip away the measure-zero float saturation
        p1s = np.clip(1.0 - ndtr(y1s), 1e-300, 1.0 - 1e-16)
        p2s = np.clip(1.0 - ndtr(y2s), 1e-300, 1.0 - 1e-16)
        if test == "combination":
            p1a = adjust_p1(p1s, w_analytic, geom.r)
        elif test == "dunnett":
            p1a = dunnett_adjust(p1s, geom.r)
        else:
            p1a = sidak_adjust(p1s)
        p1a = np.clip(p1a, 1e-300, 1.0 - 1e-16)
        pc = combination_p(p1a, p2s, geom.s)
        count += int(np.sum(pc < geom.alpha))
    return McEstimate.from_count(count, n, seed)
