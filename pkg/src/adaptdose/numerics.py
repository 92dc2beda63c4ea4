"""Gaussian probability kernels and scalar root finding.

Everything here is pure and reentrant: same inputs give bit-identical
outputs, no global state. The univariate CDF/quantile are thin wrappers
over ``scipy.special``; the bivariate CDF is a Gauss-Legendre quadrature
of the Drezner-Wesolowsky single-integral reduction (Genz's algorithm,
absolute error well below 1e-10 over the whole correlation range); the
trivariate CDF conditions on the first coordinate and integrates
bivariate CDF values with an adaptive quadrature (absolute tolerance
1e-8).

``bvn_cdf``, ``norm_cdf``, ``norm_quantile`` and ``extreme_pair_density``
broadcast over array inputs and return scalars for scalar inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Literal

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq
from scipy.special import ndtr, ndtri

from .errors import BracketingError, DomainError, NonPSDError

__all__ = [
    "Corr3",
    "norm_cdf",
    "norm_quantile",
    "norm_pdf",
    "bvn_cdf",
    "tvn_cdf",
    "extreme_pair_density",
    "find_root",
    "PSD_TOL",
]

# Tolerance for the positive-semi-definiteness checks on correlation
# matrices; published correlations are rounded, so matrices that fail by
# less than this are repaired by eigenvalue clipping instead of rejected.
PSD_TOL = 1e-12

_TWOPI = 2.0 * math.pi
_SQRT_TWOPI = math.sqrt(_TWOPI)

# Gauss-Legendre nodes/weights, order 20 (positive half; the rule is
# symmetric). Fixed order keeps the kernel deterministic.
_GL_HALF_X = np.array([
    0.9931285991850949, 0.9639719272779138, 0.9122344282513259,
    0.8391169718222188, 0.7463319064601508, 0.6360536807265150,
    0.5108670019508271, 0.3737060887154196, 0.2277858511416451,
    0.07652652113349733,
])
_GL_HALF_W = np.array([
    0.01761400713915212, 0.04060142980038694, 0.06267204833410906,
    0.08327674157670475, 0.1019301198172404, 0.1181945319615184,
    0.1316886384491766, 0.1420961093183821, 0.1491729864726037,
    0.1527533871307259,
])
# Doubled rule on (0, 2) used by the arcsin substitution.
_GL_X = np.concatenate([1.0 - _GL_HALF_X, 1.0 + _GL_HALF_X])
_GL_W = np.concatenate([_GL_HALF_W, _GL_HALF_W])
# Plain-float copies for the scalar fast path.
_GL_XW = list(zip(_GL_X.tolist(), _GL_W.tolist()))
_GL_HALF_XW = list(zip(_GL_HALF_X.tolist(), _GL_HALF_W.tolist()))
_SQRT2 = math.sqrt(2.0)


def _as_scalar_or_array(x: np.ndarray, scalar: bool):
    return float(x[()]) if scalar else x


def norm_cdf(x):
    """Standard normal CDF, broadcasting over ``x``."""
    arr = np.asarray(x, dtype=float)
    return _as_scalar_or_array(ndtr(arr), arr.ndim == 0)


def norm_pdf(x):
    """Standard normal density, broadcasting over ``x``."""
    arr = np.asarray(x, dtype=float)
    return _as_scalar_or_array(np.exp(-0.5 * arr * arr) / _SQRT_TWOPI, arr.ndim == 0)


def norm_quantile(p):
    """Standard normal quantile for ``p`` strictly inside (0, 1).

    Raises:
        DomainError: if any entry of ``p`` lies outside (0, 1).
    """
    arr = np.asarray(p, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr <= 0.0) or np.any(arr >= 1.0):
        raise DomainError(f"quantile argument must lie strictly inside (0, 1), got {p!r}")
    return _as_scalar_or_array(ndtri(arr), arr.ndim == 0)


def _bvn_upper_mid(h, k, r):
    """Upper-orthant probability for |r| < 0.925 (arcsin substitution)."""
    hk = h * k
    hs = (h * h + k * k) / 2.0
    asr = np.arcsin(r) / 2.0
    acc = np.zeros_like(hk)
    for xi, wi in zip(_GL_X, _GL_W):
        sn = np.sin(asr * xi)
        acc += wi * np.exp((sn * hk - hs) / (1.0 - sn * sn))
    return acc * asr / _TWOPI + ndtr(-h) * ndtr(-k)


def _bvn_upper_high(h, k, r):
    """Upper-orthant probability core for 0.925 <= r < 1 (r > 0 here;
    the caller folds negative correlations onto this branch)."""
    hk = h * k
    a_sq = (1.0 - r) * (1.0 + r)
    a = np.sqrt(a_sq)
    bs = (h - k) ** 2
    c = (4.0 - hk) / 8.0
    d = (12.0 - hk) / 16.0
    asr = -(bs / a_sq + hk) / 2.0
    bvn = np.where(
        asr > -100.0,
        a * np.exp(np.maximum(asr, -745.0))
        * (1.0 - c * (bs - a_sq) * (1.0 - d * bs / 5.0) / 3.0 + c * d * a_sq * a_sq / 5.0),
        0.0,
    )
    b = np.sqrt(bs)
    sp = _SQRT_TWOPI * ndtr(-b / a)
    bvn = np.where(
        -hk < 100.0,
        bvn - np.exp(-np.minimum(hk, 745.0) / 2.0) * sp * b
        * (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0),
        bvn,
    )
    half = a / 2.0
    for sgn in (-1.0, 1.0):
        for xi, wi in zip(_GL_HALF_X, _GL_HALF_W):
            xs = (half * (sgn * xi + 1.0)) ** 2
            rs = np.sqrt(1.0 - xs)
            asr1 = -(bs / xs + hk) / 2.0
            sp1 = 1.0 + c * xs * (1.0 + d * xs)
            ep1 = np.exp(-hk * (1.0 - rs) / (2.0 * (1.0 + rs))) / rs
            term = np.where(asr1 > -100.0,
                            np.exp(np.maximum(asr1, -745.0)) * (ep1 - sp1), 0.0)
            bvn = bvn + half * wi * term
    return -bvn / _TWOPI


def _ndtr_scalar(x: float) -> float:
    return 0.5 * math.erfc(-x / _SQRT2)


def _bvn_upper_scalar(dh: float, dk: float, r: float) -> float:
    """Scalar upper-orthant probability; mirrors the array branches."""
    if math.isinf(dh) and dh > 0 or math.isinf(dk) and dk > 0:
        return 0.0
    if math.isinf(dh):
        return 1.0 if math.isinf(dk) else _ndtr_scalar(-dk)
    if math.isinf(dk):
        return _ndtr_scalar(-dh)
    if r == 0.0:
        return _ndtr_scalar(-dh) * _ndtr_scalar(-dk)
    if abs(r) == 1.0:
        if r > 0.0:
            return _ndtr_scalar(-max(dh, dk))
        return max(0.0, _ndtr_scalar(-dh) - _ndtr_scalar(dk))
    hk = dh * dk
    if abs(r) < 0.925:
        hs = (dh * dh + dk * dk) / 2.0
        asr = math.asin(r) / 2.0
        acc = 0.0
        for xi, wi in _GL_XW:
            sn = math.sin(asr * xi)
            acc += wi * math.exp((sn * hk - hs) / (1.0 - sn * sn))
        return min(1.0, max(0.0, acc * asr / _TWOPI
                            + _ndtr_scalar(-dh) * _ndtr_scalar(-dk)))
    flipped = r < 0.0
    if flipped:
        dk, hk = -dk, -hk
    rr = abs(r)
    a_sq = (1.0 - rr) * (1.0 + rr)
    a = math.sqrt(a_sq)
    bs = (dh - dk) ** 2
    c = (4.0 - hk) / 8.0
    d = (12.0 - hk) / 16.0
    asr = -(bs / a_sq + hk) / 2.0
    bvn = 0.0
    if asr > -100.0:
        bvn = a * math.exp(asr) * (1.0 - c * (bs - a_sq) * (1.0 - d * bs / 5.0) / 3.0
                                   + c * d * a_sq * a_sq / 5.0)
    if -hk < 100.0:
        b = math.sqrt(bs)
        sp = _SQRT_TWOPI * _ndtr_scalar(-b / a)
        bvn -= math.exp(-hk / 2.0) * sp * b * (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0)
    half = a / 2.0
    for sgn in (-1.0, 1.0):
        for xi, wi in _GL_HALF_XW:
            xs = (half * (sgn * xi + 1.0)) ** 2
            asr1 = -(bs / xs + hk) / 2.0
            if asr1 > -100.0:
                rs = math.sqrt(1.0 - xs)
                sp1 = 1.0 + c * xs * (1.0 + d * xs)
                ep1 = math.exp(-hk * (1.0 - rs) / (2.0 * (1.0 + rs))) / rs
                bvn += half * wi * math.exp(asr1) * (ep1 - sp1)
    bvn = -bvn / _TWOPI
    if flipped:
        value = -bvn + max(0.0, _ndtr_scalar(-dh) - _ndtr_scalar(-dk))
    else:
        value = bvn + _ndtr_scalar(-max(dh, dk))
    return min(1.0, max(0.0, value))


def bvn_cdf(h, k, rho):
    """P(X <= h, Y <= k) for standard bivariate normal with correlation rho.

    Broadcasts over all three arguments. Infinite bounds are honoured
    (+inf marginalises the coordinate away, -inf gives 0), and the
    degenerate correlations rho = +-1 return the exact limits.

    Raises:
        DomainError: if |rho| > 1.
    """
    if np.ndim(h) == 0 and np.ndim(k) == 0 and np.ndim(rho) == 0:
        r = float(rho)
        if math.isnan(r) or abs(r) > 1.0:
            raise DomainError(f"correlation must lie in [-1, 1], got {rho!r}")
        return _bvn_upper_scalar(-float(h), -float(k), r)
    h_arr, k_arr, r_arr = np.broadcast_arrays(
        np.asarray(h, dtype=float), np.asarray(k, dtype=float),
        np.asarray(rho, dtype=float))
    scalar = h_arr.ndim == 0
    if np.any(np.abs(r_arr) > 1.0) or np.any(np.isnan(r_arr)):
        raise DomainError(f"correlation must lie in [-1, 1], got {rho!r}")
    dh = np.atleast_1d(-h_arr).astype(float)
    dk = np.atleast_1d(-k_arr).astype(float)
    r = np.atleast_1d(r_arr).astype(float)
    out = np.empty(dh.shape, dtype=float)

    # Infinite-bound reductions (upper-orthant convention internally).
    top = np.isposinf(dh) | np.isposinf(dk)
    out[top] = 0.0
    both = np.isneginf(dh) & np.isneginf(dk)
    out[both] = 1.0
    h_open = np.isneginf(dh) & ~both
    out[h_open] = ndtr(-dk[h_open])
    k_open = np.isneginf(dk) & ~both
    out[k_open] = ndtr(-dh[k_open])
    done = top | both | h_open | k_open

    zero = ~done & (r == 0.0)
    out[zero] = ndtr(-dh[zero]) * ndtr(-dk[zero])
    done |= zero

    mid = ~done & (np.abs(r) < 0.925)
    if mid.any():
        out[mid] = _bvn_upper_mid(dh[mid], dk[mid], r[mid])
    done |= mid

    unit = ~done & (np.abs(r) == 1.0)
    if unit.any():
        pos = unit & (r > 0.0)
        out[pos] = ndtr(-np.maximum(dh[pos], dk[pos]))
        neg = unit & (r < 0.0)
        out[neg] = np.maximum(0.0, ndtr(-dh[neg]) - ndtr(dk[neg]))
    done |= unit

    high = ~done
    if high.any():
        hh, kk, rr = dh[high], dk[high], r[high]
        flip = rr < 0.0
        kk = np.where(flip, -kk, kk)
        core = _bvn_upper_high(hh, kk, np.abs(rr))
        out[high] = np.where(
            flip,
            -core + np.maximum(0.0, ndtr(-hh) - ndtr(-kk)),
            core + ndtr(-np.maximum(hh, kk)),
        )

    result = np.clip(out.reshape(h_arr.shape), 0.0, 1.0)
    return _as_scalar_or_array(result, scalar)


@dataclass(frozen=True)
class Corr3:
    """Correlation structure of three standard normal variables.

    Entries are ordered (r12, r13, r23). Construction validates that
    every entry lies in [-1, 1] and that all principal minors of the
    implied 3x3 matrix are >= -PSD_TOL; matrices that are indefinite by
    less than the tolerance (rounded published inputs) are repaired by
    clipping negative eigenvalues and renormalising the diagonal.

    Raises:
        NonPSDError: if an entry or minor fails beyond tolerance.
    """

    r12: float
    r13: float
    r23: float

    def __post_init__(self):
        vals = {}
        for name in ("r12", "r13", "r23"):
            v = float(getattr(self, name))
            if not math.isfinite(v) or abs(v) > 1.0 + PSD_TOL:
                raise NonPSDError(f"correlation entry {name}={v!r} outside [-1, 1]")
            vals[name] = min(1.0, max(-1.0, v))
        r12, r13, r23 = vals["r12"], vals["r13"], vals["r23"]
        for name, minor in (
            ("1 - r12^2", 1.0 - r12 * r12),
            ("1 - r13^2", 1.0 - r13 * r13),
            ("1 - r23^2", 1.0 - r23 * r23),
        ):
            if minor < -PSD_TOL:
                raise NonPSDError(f"principal minor {name} = {minor:.3e} < -{PSD_TOL}")
        det = (1.0 + 2.0 * r12 * r13 * r23
               - r12 * r12 - r13 * r13 - r23 * r23)
        if det < -PSD_TOL:
            raise NonPSDError(
                f"matrix determinant {det:.3e} < -{PSD_TOL}; "
                f"correlations ({r12}, {r13}, {r23}) are not jointly attainable")
        if det < 0.0:
            r12, r13, r23 = _project_psd(r12, r13, r23)
        object.__setattr__(self, "r12", r12)
        object.__setattr__(self, "r13", r13)
        object.__setattr__(self, "r23", r23)

    def matrix(self) -> np.ndarray:
        return np.array([
            [1.0, self.r12, self.r13],
            [self.r12, 1.0, self.r23],
            [self.r13, self.r23, 1.0],
        ])

    def permuted(self, order: tuple[int, int, int]) -> "Corr3":
        """Correlation structure after reordering the three coordinates."""
        m = self.matrix()[np.ix_(order, order)]
        return Corr3(m[0, 1], m[0, 2], m[1, 2])


def _project_psd(r12: float, r13: float, r23: float) -> tuple[float, float, float]:
    """Clip negative eigen-directions and renormalise to unit diagonal."""
    m = np.array([[1.0, r12, r13], [r12, 1.0, r23], [r13, r23, 1.0]])
    evals, evecs = np.linalg.eigh(m)
    repaired = (evecs * np.maximum(evals, 0.0)) @ evecs.T
    scale = np.sqrt(np.diag(repaired))
    repaired = repaired / np.outer(scale, scale)
    return float(repaired[0, 1]), float(repaired[0, 2]), float(repaired[1, 2])


def tvn_cdf(b1: float, b2: float, b3: float, corr: Corr3) -> float:
    """P(Z1 <= b1, Z2 <= b2, Z3 <= b3) for standard trivariate normal.

    Conditions on the first coordinate and integrates the conditional
    bivariate CDF with an adaptive quadrature; absolute error <= 1e-8.
    Infinite bounds reduce to the matching lower-dimensional CDF.
    """
    b1, b2, b3 = float(b1), float(b2), float(b3)
    r12, r13, r23 = corr.r12, corr.r13, corr.r23
    if math.isinf(b1) or math.isinf(b2) or math.isinf(b3):
        if b1 == -math.inf or b2 == -math.inf or b3 == -math.inf:
            return 0.0
        if b1 == math.inf:
            return float(bvn_cdf(b2, b3, r23))
        if b2 == math.inf:
            return float(bvn_cdf(b1, b3, r13))
        return float(bvn_cdf(b1, b2, r12))

    # Degenerate conditioning: Z2 or Z3 is (anti)perfectly tied to Z1.
    if 1.0 - r12 * r12 < 4.0 * PSD_TOL:
        if r12 > 0.0:
            return float(bvn_cdf(min(b1, b2), b3, r13))
        hi = float(bvn_cdf(b1, b3, r13))
        lo = float(bvn_cdf(-b2, b3, r13))
        return max(0.0, hi - lo)
    if 1.0 - r13 * r13 < 4.0 * PSD_TOL:
        if r13 > 0.0:
            return float(bvn_cdf(min(b1, b3), b2, r12))
        hi = float(bvn_cdf(b1, b2, r12))
        lo = float(bvn_cdf(-b3, b2, r12))
        return max(0.0, hi - lo)

    s2 = math.sqrt(1.0 - r12 * r12)
    s3 = math.sqrt(1.0 - r13 * r13)
    rc = (r23 - r12 * r13) / (s2 * s3)
    rc = min(1.0, max(-1.0, rc))

    def integrand(z: float) -> float:
        u2 = (b2 - r12 * z) / s2
        u3 = (b3 - r13 * z) / s3
        return math.exp(-0.5 * z * z) / _SQRT_TWOPI * float(bvn_cdf(u2, u3, rc))

    value, _ = quad(integrand, -np.inf, b1, epsabs=1e-11, epsrel=1e-11, limit=200)
    return min(1.0, max(0.0, value))


def extreme_pair_density(q, rho, which: Literal["max", "min"]):
    """Density of max or min of two standard normals with correlation rho.

    For k = sqrt((1 - rho)/(1 + rho)):

        f_max(q) = 2 phi(q) Phi(k q)
        f_min(q) = 2 phi(q) Phi(-k q)

    The two densities sum to 2 phi(q) and each integrates to one.
    Broadcasts over ``q``.

    Raises:
        DomainError: if |rho| >= 1 or ``which`` is not 'max'/'min'.
    """
    rho = float(rho)
    if abs(rho) >= 1.0:
        raise DomainError(f"extreme-pair density requires |rho| < 1, got {rho}")
    if which not in ("max", "min"):
        raise DomainError(f"'which' must be 'max' or 'min', got {which!r}")
    arr = np.asarray(q, dtype=float)
    k = math.sqrt((1.0 - rho) / (1.0 + rho))
    sign = 1.0 if which == "max" else -1.0
    dens = 2.0 * np.exp(-0.5 * arr * arr) / _SQRT_TWOPI * ndtr(sign * k * arr)
    return _as_scalar_or_array(dens, arr.ndim == 0)


def find_root(f: Callable[[float], float], lo: float, hi: float,
              tol: float = 1e-12) -> float:
    """Root of a continuous scalar function on a sign-changing bracket.

    Raises:
        BracketingError: if f(lo) and f(hi) do not have opposite signs.
    """
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0.0:
        raise BracketingError(
            f"no sign change on [{lo}, {hi}]: f(lo)={flo:.6g}, f(hi)={fhi:.6g}")
    return float(brentq(f, lo, hi, xtol=tol, rtol=8.9e-16))
