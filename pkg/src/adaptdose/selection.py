"""Probability of picking the winner at dose selection under the global null.

Two doses are compared on a short-term efficacy rate (ORR) and a safety
rate (grade 3-4 AE) with per-arm sample size M; the selected dose's
long-term statistic either is or is not the larger of the two. The
winner probability is an orthant probability of the standardised
trivariate normal of the three pairwise differences.

Two selection rules are supported:

* scenario 1 (biased toward the higher dose): the lower dose is picked
  only if its ORR is not lower by more than Cx and its AE rate is lower
  by at least Cs;
* scenario 2 (biased toward the lower dose): the higher dose is picked
  only if its ORR is higher by more than Cx and its AE rate is not
  higher by more than Cs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .errors import InvalidParameterError
from .numerics import Corr3, tvn_cdf

__all__ = [
    "DesignParams",
    "SelectionRule",
    "CorrelationSet",
    "WinnerProb",
    "SweepPoint",
    "winner_prob",
    "winner_prob_sweep",
    "DEFAULT_RHO_YS_LIST",
    "DEFAULT_CX_GRID",
]

# Hypothetical-study defaults used when sweep arguments are omitted.
DEFAULT_RHO_YS_LIST: tuple[float, ...] = (-0.1, -0.3, -0.5)
DEFAULT_CX_GRID: tuple[float, ...] = tuple(round(0.02 * i, 10) for i in range(11))


@dataclass(frozen=True)
class DesignParams:
    """Per-arm sample size and average expected rates at dose selection.

    M: patients per dose arm; Rx: average expected ORR; Rs: average
    expected grade 3-4 AE rate. The standardising scales for the rate
    differences are sqrt(2 R (1 - R) / M).
    """

    M: int
    Rx: float
    Rs: float

    def __post_init__(self):
        if int(self.M) != self.M or self.M < 1:
            raise InvalidParameterError(f"M must be an integer >= 1, got {self.M!r}")
        object.__setattr__(self, "M", int(self.M))
        for name in ("Rx", "Rs"):
            v = getattr(self, name)
            if not (0.0 < v < 1.0):
                raise InvalidParameterError(f"{name} must lie in (0, 1), got {v!r}")

    @property
    def sigma_x(self) -> float:
        return math.sqrt(2.0 * self.Rx * (1.0 - self.Rx) / self.M)

    @property
    def sigma_s(self) -> float:
        return math.sqrt(2.0 * self.Rs * (1.0 - self.Rs) / self.M)


@dataclass(frozen=True)
class SelectionRule:
    """Scenario identifier plus the ORR and AE-rate thresholds."""

    scenario: int
    Cx: float
    Cs: float

    def __post_init__(self):
        if self.scenario not in (1, 2):
            raise InvalidParameterError(f"scenario must be 1 or 2, got {self.scenario!r}")
        for name in ("Cx", "Cs"):
            v = getattr(self, name)
            if not (0.0 <= v < 1.0):
                raise InvalidParameterError(f"{name} must lie in [0, 1), got {v!r}")


@dataclass(frozen=True)
class CorrelationSet:
    """Individual-level correlations between the ORR, AE and OS statistics.

    rho_xy: ORR vs OS; rho_xs: ORR vs AE rate; rho_ys: OS vs AE rate.
    Validation checks that the induced difference-level correlation
    matrix is positive semi-definite.
    """

    rho_xy: float
    rho_xs: float
    rho_ys: float

    def __post_init__(self):
        self.difference_corr3(+1.0)  # raises NonPSDError when inconsistent

    def difference_corr3(self, y_sign: float) -> Corr3:
        """Correlation of (±Y-difference, X-difference, S-difference)."""
        return Corr3(y_sign * self.rho_xy, -y_sign * self.rho_ys, -self.rho_xs)


@dataclass(frozen=True)
class WinnerProb:
    """Winner probability split by which dose is selected-and-best."""

    w: float
    w1: float
    w2: float


@dataclass(frozen=True)
class SweepPoint:
    scenario: int
    rho_ys: float
    Cx: float
    w: float
    w1: float
    w2: float


def winner_prob(params: DesignParams, rule: SelectionRule,
                corr: CorrelationSet) -> WinnerProb:
    """Probability that the selected dose has the better OS statistic.

    Under the global null the three standardised differences are
    trivariate normal; the selection region and the sign of the OS
    difference define two orthant probabilities:

        w1 = Phi3(0,  Cx/sx, -Cs/ss;  rho_xy, -rho_ys, -rho_xs)
        w2 = 0.5 - Phi3(0,  Cx/sx, -Cs/ss; -rho_xy,  rho_ys, -rho_xs)

    for scenario 1, and the same with bounds (0, -Cx/sx, +Cs/ss) for
    scenario 2. Returns w = w1 + w2.
    """
    cx = rule.Cx / params.sigma_x
    cs = rule.Cs / params.sigma_s
    if rule.scenario == 1:
        b2, b3 = cx, -cs
    else:
        b2, b3 = -cx, cs
    w1 = tvn_cdf(0.0, b2, b3, corr.difference_corr3(+1.0))
    w2 = 0.5 - tvn_cdf(0.0, b2, b3, corr.difference_corr3(-1.0))
    return WinnerProb(w=w1 + w2, w1=w1, w2=w2)


def winner_prob_sweep(
    params: DesignParams = DesignParams(M=40, Rx=0.2, Rs=0.2),
    Cs: float = 0.05,
    rho_xy: float = 0.3,
    rho_xs: float = 0.5,
    rho_ys_list: Sequence[float] = DEFAULT_RHO_YS_LIST,
    cx_grid: Sequence[float] = DEFAULT_CX_GRID,
) -> list[SweepPoint]:
    """Winner probability over both scenarios and a grid of thresholds.

    Defaults reproduce the hypothetical-study setup: M=40, Rx=Rs=0.2,
    Cs=0.05, rho_xy=0.3, rho_xs=0.5, rho_ys in {-0.1, -0.3, -0.5} and
    Cx from 0 to 0.2. One row per (scenario, rho_ys, Cx) combination.
    """
    if not rho_ys_list or not len(cx_grid):
        raise InvalidParameterError("rho_ys_list and cx_grid must be nonempty")
    rows: list[SweepPoint] = []
    for scenario in (1, 2):
        for rho_ys in rho_ys_list:
            corr = CorrelationSet(rho_xy=rho_xy, rho_xs=rho_xs, rho_ys=rho_ys)
            for cx in cx_grid:
                rule = SelectionRule(scenario=scenario, Cx=cx, Cs=Cs)
                wp = winner_prob(params, rule, corr)
                rows.append(SweepPoint(scenario, rho_ys, cx, wp.w, wp.w1, wp.w2))
    return rows
