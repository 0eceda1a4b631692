"""Quadrature, grids and shape tests shared by the 1-D and n-D engines."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import NumericFailure

QUAD_EPSREL = 1e-12
QUAD_EPSABS = 1e-15
# failure thresholds: relative 1e-10 with an absolute floor of 1e-13
FAIL_REL = 1e-10
FAIL_ABS = 1e-13

CONCAVITY_TOL = 1e-8
AFFINITY_TOL = 1e-6
EQUALITY_GAP_TOL = 1e-7


def quad(f, a, b, points=(), *, epsabs=QUAD_EPSABS, fail_rel=FAIL_REL, fail_abs=FAIL_ABS,
         limit=400):
    """Adaptive Gauss-Kronrod integral of ``f`` over ``(a, b)``.

    ``a``/``b`` may be infinite.  The range is split at ``points`` so that
    kinks and singularities sit on panel edges.  Returns ``(value, abserr)``
    and raises :class:`NumericFailure` when the error estimate exceeds
    ``max(fail_abs, fail_rel * |value|)``.  Pass ``epsabs=0`` for tail
    masses that must keep relative accuracy however small they are.
    """
    if a == b:
        return 0.0, 0.0
    sign = 1.0
    if a > b:
        a, b, sign = b, a, -1.0
    inner = sorted(p for p in set(points) if a < p < b)
    if math.isinf(a) and math.isinf(b) and not inner:
        inner = [0.0]
    edges = [a] + inner + [b]
    total = 0.0
    err = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        for lo, hi in zip(edges[:-1], edges[1:]):
            g, lo, hi = _finite_panel(f, lo, hi)
            val, e = integrate.quad(g, lo, hi, epsabs=epsabs, epsrel=QUAD_EPSREL,
                                    limit=limit)
            total += val
            err += e
    if not math.isfinite(total) or err > max(fail_abs, fail_rel * abs(total)):
        raise NumericFailure(
            f"quadrature on ({a}, {b}) reached error {err:.3g} for value {total:.6g}",
            achieved=err)
    return sign * total, err


def _finite_panel(f, lo, hi):
    """Map an infinite panel onto (0, 1] with r = end -+ w (1/u - 1).

    The width ``w`` follows the finite end, so an algebraic tail |r|^-k maps
    to a bounded integrand.  QUADPACK's own infinite-range rule can report
    convergence to a wrong value on such tails.
    """
    if math.isfinite(lo) and math.isfinite(hi):
        return f, lo, hi
    if math.isinf(lo) and math.isinf(hi):
        raise ValueError("split doubly infinite panels first")
    end = hi if math.isinf(lo) else lo
    sign = -1.0 if math.isinf(lo) else 1.0
    w = max(1.0, abs(end))

    def g(u):
        if u <= 0.0:
            return 0.0
        return f(end + sign * w * (1.0 / u - 1.0)) * w / (u * u)

    return g, 0.0, 1.0


def chebyshev_grid(a, b, n):
    """``n`` Chebyshev nodes strictly inside ``(a, b)``, increasing."""
    k = np.arange(n)
    return 0.5 * (a + b) - 0.5 * (b - a) * np.cos(np.pi * (k + 0.5) / n)


@dataclass(frozen=True)
class ShapeVerdict:
    """Outcome of a sampled concavity/convexity test.

    ``worst`` is the largest normalised violation found and ``triple`` the
    abscissae where it occurs; ``holds`` is ``worst <= tol``.
    """

    holds: bool
    worst: float
    triple: tuple
    tol: float
    kind: str


def _chord_gaps(x0, x1, x2, f0, f1, f2):
    # middle value minus the chord value at x1; <= 0 for convex, >= 0 for concave
    w = (x1 - x0) / (x2 - x0)
    return f1 - ((1.0 - w) * f0 + w * f2)


def shape_test(x, fx, kind, tol=CONCAVITY_TOL, extra_triples=64, seed=0):
    """Second-difference test that sampled ``fx`` is concave or convex.

    Every consecutive triple is checked, plus ``extra_triples`` random
    non-adjacent ones.  A violation is normalised by the local magnitude
    ``max(|f0|, |f1|, |f2|, 1e-300)``.
    """
    x = np.asarray(x, dtype=float)
    fx = np.asarray(fx, dtype=float)
    if kind not in ("concave", "convex"):
        raise ValueError(kind)
    idx = [np.arange(len(x) - 2), np.arange(1, len(x) - 1), np.arange(2, len(x))]
    if extra_triples and len(x) >= 3:
        rng = np.random.default_rng(seed)
        tri = np.sort(np.stack([rng.choice(len(x), 3, replace=False)
                                for _ in range(extra_triples)]), axis=1)
        idx = [np.concatenate([idx[j], tri[:, j]]) for j in range(3)]
    i0, i1, i2 = idx
    gaps = _chord_gaps(x[i0], x[i1], x[i2], fx[i0], fx[i1], fx[i2])
    scale = np.maximum.reduce([np.abs(fx[i0]), np.abs(fx[i1]), np.abs(fx[i2]),
                               np.full(len(i0), 1e-300)])
    viol = (-gaps if kind == "concave" else gaps) / scale
    j = int(np.argmax(viol))
    worst = float(viol[j])
    return ShapeVerdict(worst <= tol, worst, (float(x[i0[j]]), float(x[i1[j]]), float(x[i2[j]])),
                        tol, kind)


def affinity_score(x, fx):
    """Largest deviation of ``fx`` from the chord through its end values,
    relative to the total rise of the chord."""
    x = np.asarray(x, dtype=float)
    fx = np.asarray(fx, dtype=float)
    rise = fx[-1] - fx[0]
    chord = fx[0] + rise * (x - x[0]) / (x[-1] - x[0])
    return float(np.max(np.abs(fx - chord)) / max(abs(rise), 1e-300))


def vectorize(f):
    """Evaluate a scalar callable on an array, trying a vectorised call first."""
    def g(x):
        x = np.asarray(x, dtype=float)
        try:
            out = np.asarray(f(x), dtype=float)
            if out.shape == x.shape:
                return out
        except (TypeError, ValueError):
            pass
        return np.array([f(float(v)) for v in x.ravel()]).reshape(x.shape)
    return g
