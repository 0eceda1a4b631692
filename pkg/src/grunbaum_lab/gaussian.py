"""Standard normal special functions and the Gaussian Grunbaum bounds.

Everything here is scalar, pure and double precision.  ``std_normal_cdf`` and
``std_normal_pdf`` also accept numpy arrays, which the Monte-Carlo and
quadrature paths in :mod:`grunbaum_lab.bodies` rely on.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import special

from .errors import DomainError, InvalidArgumentError

SQRT2 = math.sqrt(2.0)
SQRT2PI = math.sqrt(2.0 * math.pi)
INV_SQRT2PI = 1.0 / SQRT2PI
INV_E = math.exp(-1.0)

# Rational seed for the normal quantile (P. J. Acklam), |rel err| < 1.2e-9.
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


def _check_real(x, name="x"):
    x = float(x)
    if math.isnan(x):
        raise InvalidArgumentError(f"{name} is NaN")
    return x


def _check_probability(t, closed=True):
    t = _check_real(t, "t")
    if not 0.0 <= t <= 1.0:
        raise InvalidArgumentError(f"probability {t!r} outside [0, 1]")
    if not closed and t == 0.0:
        raise DomainError(f"probability {t!r} must lie in (0, 1]")
    return t


def std_normal_pdf(x):
    """Standard normal density; accepts scalars or arrays."""
    if np.ndim(x) == 0:
        x = _check_real(x)
        return INV_SQRT2PI * math.exp(-0.5 * x * x)
    x = np.asarray(x, dtype=float)
    return INV_SQRT2PI * np.exp(-0.5 * x * x)


def std_normal_cdf(x):
    """Phi(x), computed from erf near the origin and erfc in the tails.

    The split at ``|x| = 0.5`` avoids the cancellation ``1 - erfc`` would
    suffer for small arguments.  Infinite arguments are accepted.
    """
    if np.ndim(x) != 0:
        x = np.asarray(x, dtype=float)
        if np.isnan(x).any():
            raise InvalidArgumentError("x contains NaN")
        return special.ndtr(x)
    x = _check_real(x)
    if abs(x) < 0.5:
        return 0.5 + 0.5 * math.erf(x / SQRT2)
    if x < 0:
        return 0.5 * math.erfc(-x / SQRT2)
    return 1.0 - 0.5 * math.erfc(x / SQRT2)


def _lower_quantile(t):
    # t in (0, 0.5]
    if t < _P_LOW:
        q = math.sqrt(-2.0 * math.log(t))
        x = ((((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5])
             / ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0))
    else:
        q = t - 0.5
        r = q * q
        x = ((((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q
             / (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0))
    for _ in range(2):
        # Halley step; the residual is relative in the tail so precision holds down to 1e-300
        e = 0.5 * math.erfc(-x / SQRT2) - t
        if e == 0.0:
            break
        u = math.copysign(math.exp(math.log(abs(e)) + math.log(SQRT2PI) + 0.5 * x * x), e)
        x = x - u / (1.0 + 0.5 * x * u)
    return x


def std_normal_quantile(t):
    """Phi^{-1}(t).

    ``t = 0`` and ``t = 1`` return ``-inf`` and ``+inf``; callers that must not
    see infinities test :func:`math.isinf` on the result.
    """
    t = _check_probability(t)
    if t == 0.0:
        return -math.inf
    if t == 1.0:
        return math.inf
    if t == 0.5:
        return 0.0
    if t < 0.5:
        return _lower_quantile(t)
    return -_lower_quantile(1.0 - t)


def gaussian_isoperimetric(t):
    """I_gamma(t) = phi(Phi^{-1}(t)), extended by 0 at t = 0 and t = 1."""
    t = _check_probability(t)
    if t in (0.0, 1.0):
        return 0.0
    return std_normal_pdf(std_normal_quantile(t))


def quantile_cut_bound_abs(t):
    """Upper bound I_gamma(t)/t on |Phi^{-1}| of the barycentric cut mass."""
    t = _check_probability(t, closed=False)
    return gaussian_isoperimetric(t) / t


def ehrhard_grunbaum_bound(t):
    """Phi(-I_gamma(t)/t): Gaussian mass guaranteed below a barycentric cut.

    ``t`` is the Gaussian measure of the convex set being cut.
    """
    return std_normal_cdf(-quantile_cut_bound_abs(t))


# 1 + W0 as a series in p = sqrt(2 (1 + e x)) near the branch point
_BRANCH = (1.0, -1.0 / 3.0, 11.0 / 72.0, -43.0 / 540.0, 769.0 / 17280.0, -221.0 / 8505.0,
           680863.0 / 43545600.0, -1963.0 / 204120.0, 226287557.0 / 37623398400.0)
BRANCH_SERIES_LIMIT = 1e-3
# fl(-1/e) + 1/e: the rounding error of -INV_E
_BRANCH_OFFSET = -1.2428753672788363e-17


def _branch(x):
    # 1 + e x, with x measured from fl(-1/e) so the offset stays exact near -1/e
    return math.e * ((x + INV_E) + _BRANCH_OFFSET)


def lambert_w0_plus_one(x):
    """1 + W0(x), without cancellation close to x = -1/e."""
    x = _check_real(x)
    branch = _branch(x)
    if branch <= 0.0 and branch > -4.0 * np.finfo(float).eps:
        return 0.0
    if 0.0 <= branch < BRANCH_SERIES_LIMIT:
        p = math.sqrt(2.0 * branch)
        return p * sum(c * p ** k for k, c in enumerate(_BRANCH))
    return 1.0 + lambert_w0(x)


def lambert_w0(x):
    """Principal branch of the Lambert W function on [-1/e, inf).

    Halley iteration from a seed chosen by region: a branch-point series near
    -1/e, ``log1p`` for moderate arguments and ``log x - log log x`` beyond.
    Converges to a relative residual of 1e-12 (absolute below |x| = 1).
    """
    x = _check_real(x)
    if math.isinf(x):
        if x > 0:
            return math.inf
        raise DomainError("lambert_w0 undefined at -inf")
    branch = _branch(x)
    if branch < 0.0:
        if branch > -4.0 * np.finfo(float).eps:
            return -1.0
        raise DomainError(f"lambert_w0 requires x >= -1/e, got {x!r}")
    if x == 0.0:
        return 0.0
    if branch < BRANCH_SERIES_LIMIT:
        return lambert_w0_plus_one(x) - 1.0
    if branch < 0.3:
        p = math.sqrt(2.0 * branch)
        w = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p ** 3
    elif x < 3.0:
        w = math.log1p(x)
    else:
        lx = math.log(x)
        w = lx - math.log(lx)
    target = 1e-12 * max(1.0, abs(x))
    for _ in range(64):
        ew = math.exp(w)
        f = w * ew - x
        wp1 = w + 1.0
        if f == 0.0 or wp1 == 0.0:
            break
        step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1))
        w -= step
        # keep refining past the residual target: W is ill-conditioned near -1/e
        if abs(f) <= target and abs(step) <= 4e-16 * max(1.0, abs(w)):
            break
    return w
