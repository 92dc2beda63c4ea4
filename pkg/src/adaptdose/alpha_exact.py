"""Exact parametric significance-level adjustment for the pooled test.

The final statistic pools the selected dose's stage-1 statistic with the
stage-2 statistic, sqrt(s) Y1s + sqrt(1-s) Y2s. Because the selected
dose wins the stage-1 comparison with probability w (not certainty),
testing at an adjusted level alpha_E keeps the overall level at alpha:

    (1 - Phi2(q, q; rho*)) w + Phi2(-q, -q; rho*) (1 - w) = alpha

with q = Phi^-1(1 - alpha_E) and rho* = s/(1+r) + 1 - s, the correlation
between the two candidate pooled statistics (s = stage-1 information
fraction, r = dose:control randomisation ratio). For w <= 0.5 the level
is left at alpha, which keeps the error under strong control.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import InvalidParameterError
from .numerics import bvn_cdf, find_root, norm_quantile

__all__ = ["TrialGeometry", "overall_type1", "solve_alpha_e"]


@dataclass(frozen=True)
class TrialGeometry:
    """Stage-1 information fraction, randomisation ratio and target level."""

    s: float
    r: float
    alpha: float

    def __post_init__(self):
        if not (0.0 < self.s < 1.0):
            raise InvalidParameterError(f"s must lie in (0, 1), got {self.s!r}")
        if not self.r > 0.0:
            raise InvalidParameterError(f"r must be positive, got {self.r!r}")
        if not (0.0 < self.alpha < 0.5):
            raise InvalidParameterError(f"alpha must lie in (0, 0.5), got {self.alpha!r}")

    @property
    def rho_star(self) -> float:
        """Correlation between the two candidate pooled statistics."""
        return self.s / (1.0 + self.r) + 1.0 - self.s

    @property
    def rho_pair(self) -> float:
        """Correlation between the two stage-1 statistics (shared control)."""
        return 1.0 / (1.0 + self.r)


def _check_w(w: float) -> None:
    if not (0.0 <= w <= 1.0):
        raise InvalidParameterError(f"w must lie in [0, 1], got {w!r}")


def overall_type1(alpha_e: float, geom: TrialGeometry, w: float) -> float:
    """Overall rejection probability of the pooled test at level alpha_e.

    Equals alpha_e exactly when w = 0.5 (random selection) or when
    rho* = 1 (both candidates carry the same pooled statistic).
    """
    if not (0.0 < alpha_e < 0.5):
        raise InvalidParameterError(f"alpha_e must lie in (0, 0.5), got {alpha_e!r}")
    _check_w(w)
    q = norm_quantile(1.0 - alpha_e)
    rho = geom.rho_star
    win = 1.0 - float(bvn_cdf(q, q, rho))
    lose = float(bvn_cdf(-q, -q, rho))
    return win * w + lose * (1.0 - w)


def solve_alpha_e(geom: TrialGeometry, w: float) -> float:
    """Adjusted level whose overall rejection probability equals alpha.

    Returns alpha unchanged for w <= 0.5 (the strong-control clamp);
    otherwise the unique root of overall_type1 = alpha, which lies in
    (0, alpha] because the overall error is increasing in both the level
    and w. The bracket [1e-9, alpha] is wide enough for any valid
    geometry; a BracketingError can only arise from numeric misuse.
    """
    _check_w(w)
    if w <= 0.5:
        return geom.alpha
    return find_root(
        lambda a_e: overall_type1(a_e, geom, w) - geom.alpha,
        1e-9, geom.alpha, tol=1e-15)
