"""Ready-made one-dimensional densities and their JSON form."""

from __future__ import annotations

import math

import numpy as np

from . import gaussian as G
from .errors import InvalidArgumentError
from .measure1d import Density1D, TailEnvelope


def uniform(a=0.0, b=1.0):
    a, b = float(a), float(b)
    if not (math.isfinite(a) and math.isfinite(b) and a < b):
        raise InvalidArgumentError("uniform needs a finite interval a < b")
    h = 1.0 / (b - a)
    return Density1D(lambda r: h, (a, b), 1.0, name=f"uniform({a:g},{b:g})")


def exponential(rate=1.0, loc=0.0):
    """rate * exp(-rate (r - loc)) on (loc, inf)."""
    rate, loc = float(rate), float(loc)
    if not rate > 0:
        raise InvalidArgumentError("rate must be positive")
    env = TailEnvelope("exponential", rate * math.exp(rate * max(loc, 0.0)), rate)
    return Density1D(lambda r: rate * math.exp(-rate * (r - loc)), (loc, math.inf), 1.0, env,
                     name=f"exponential({rate:g})", scale=1.0 / rate)


def gaussian(mean=0.0, sigma=1.0, support=None):
    """N(mean, sigma^2), optionally restricted to ``support`` and renormalised."""
    mean, sigma = float(mean), float(sigma)
    if not sigma > 0:
        raise InvalidArgumentError("sigma must be positive")
    lo, hi = (-math.inf, math.inf) if support is None else (float(support[0]), float(support[1]))
    za, zb = (lo - mean) / sigma, (hi - mean) / sigma
    # Phi(zb) - Phi(za) from whichever tail keeps the digits
    z = (G.std_normal_cdf(zb) - G.std_normal_cdf(za)) if za + zb < 0 else (
        G.std_normal_cdf(-za) - G.std_normal_cdf(-zb))
    if z <= 0:
        raise InvalidArgumentError("support carries no Gaussian mass")
    k = 1.0 / (sigma * z)
    env = None
    if math.isinf(lo) or math.isinf(hi):
        # phi(x) <= phi(0) e^{1/2 - |x|}
        env = TailEnvelope("exponential",
                           k * G.INV_SQRT2PI * math.exp(0.5 + abs(mean) / sigma), 1.0 / sigma)
    return Density1D(lambda r: k * G.std_normal_pdf((r - mean) / sigma), (lo, hi), 1.0, env,
                     name=f"gaussian({mean:g},{sigma:g})", scale=sigma)


def power(a, b, q, support, normalize=True):
    """(a r + b)^q on ``support`` (the base must stay positive inside)."""
    a, b, q = float(a), float(b), float(q)
    lo, hi = float(support[0]), float(support[1])
    for end in (lo, hi):
        if math.isfinite(end) and a * end + b < 0:
            raise InvalidArgumentError("a r + b must be nonnegative on the support")
    env = None
    if math.isinf(lo) or math.isinf(hi):
        if a == 0 or q >= -1:
            raise InvalidArgumentError("an infinite support needs a decaying power q < -1")
        # a r + b >= |a||r|/2 once |r| >= 2|b|/|a|
        env = TailEnvelope("power", (abs(a) / 2.0) ** q, -q, max(2.0 * abs(b) / abs(a), 1.0))
    f = lambda r: (a * r + b) ** q
    d = Density1D(f, (lo, hi), None, env, name=f"power({a:g},{b:g},{q:g})")
    return d.normalized() if normalize else d


def table(x, log_density, normalize=True):
    """Density interpolating ``log_density`` linearly between the nodes ``x``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(log_density, dtype=float)
    if x.ndim != 1 or x.shape != y.shape or len(x) < 2 or np.any(np.diff(x) <= 0):
        raise InvalidArgumentError("table needs strictly increasing x and matching log-density")
    if not np.all(np.isfinite(y)):
        raise InvalidArgumentError("log-density must be finite")
    f = lambda r: math.exp(float(np.interp(r, x, y)))
    d = Density1D(f, (x[0], x[-1]), None, breakpoints=tuple(x[1:-1]), name="table")
    return d.normalized() if normalize else d


def mixture(components, weights):
    """Weighted sum of densities sharing an infinite or common support."""
    w = np.asarray(weights, dtype=float)
    w = w / w.sum()
    lo = min(c.support[0] for c in components)
    hi = max(c.support[1] for c in components)
    env = None
    envs = [c.tail_envelope for c in components]
    if all(e is not None and e.kind == "exponential" for e in envs):
        env = TailEnvelope("exponential", sum(e.C for e in envs), min(e.rate for e in envs),
                           max(e.start for e in envs))
    f = lambda r: sum(wi * c.pdf(r) for wi, c in zip(w, components))
    return Density1D(f, (lo, hi), None, env, name="mixture").normalized()


def from_json(spec):
    """Build a density from ``{kind, params, support}``."""
    try:
        kind = spec["kind"]
    except (KeyError, TypeError):
        raise InvalidArgumentError("density spec needs a 'kind'") from None
    params = dict(spec.get("params", {}))
    support = spec.get("support")
    if support is not None:
        support = [float(v) for v in support]
    try:
        if kind == "uniform":
            a, b = support if support is not None else (params.get("a", 0.0), params.get("b", 1.0))
            return uniform(a, b)
        if kind == "exponential":
            lo = support[0] if support is not None else params.get("loc", 0.0)
            return exponential(params.get("rate", 1.0), lo)
        if kind == "gaussian":
            return gaussian(params.get("mean", 0.0), params.get("sigma", 1.0), support)
        if kind == "power":
            if support is None:
                raise InvalidArgumentError("power density needs a support")
            return power(params["a"], params["b"], params["q"], support,
                         params.get("normalize", True))
        if kind == "table":
            return table(params["x"], params["log_density"], params.get("normalize", True))
    except KeyError as e:
        raise InvalidArgumentError(f"missing density parameter {e}") from None
    raise InvalidArgumentError(f"unknown density kind {kind!r}")
