"""Monotone transport between the standard Gaussian and measures on the line.

A measure of total mass m <= 1 is coupled with the Gaussian tail
(Phi^{-1}(1 - m), inf): T(s) = Phi_mu^{-1}(Phi(s) - (1 - m)).  For
probability measures this is the usual T = Phi_mu^{-1} o Phi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq

from . import gaussian as G
from .densities import from_json as density_from_json
from ._numerics import CONCAVITY_TOL, affinity_score, chebyshev_grid, quad, shape_test
from .errors import DomainError, InvalidArgumentError, NumericFailure, PreconditionError
from .measure1d import (Density1D, TailEnvelope, _level_window, _upper_tail, cdf, quantile,
                        truncated_barycenter, interval_mass, upper_quantile, _clip)
from .reports import CutReport, equality_verdict

PROBES = 33


def _numeric_derivative(f):
    def d(s):
        h = max(1e-6, 1e-6 * abs(s))
        return (f(s + h) - f(s - h)) / (2 * h)
    return d


class TransportMap:
    """A strictly increasing map T on ``domain`` with inverse and derivative.

    ``derivative`` falls back to central differences with step
    max(1e-6, 1e-6 |s|).
    """

    def __init__(self, forward, inverse, derivative=None, domain=(-math.inf, math.inf),
                 name="", check=True):
        self.forward = forward
        self.inverse = inverse
        self.analytic_derivative = derivative is not None
        self.derivative = derivative if derivative is not None else _numeric_derivative(forward)
        lo, hi = (float(v) for v in domain)
        if not lo < hi:
            raise InvalidArgumentError(f"bad domain {domain!r}")
        self.domain = (lo, hi)
        self.name = name
        if check:
            self._check()

    def __call__(self, s):
        return self.forward(s)

    def probe_grid(self, n=PROBES):
        lo, hi = self.domain
        a = max(lo, -6.0)
        b = min(hi, 6.0)
        if a == lo:
            a = lo + 1e-3 * (b - lo)
        if b == hi:
            b = hi - 1e-3 * (hi - a)
        return np.linspace(a, b, n)

    def _check(self):
        s = self.probe_grid()
        x = np.array([self.forward(v) for v in s])
        if np.any(np.diff(x) <= 0):
            raise InvalidArgumentError("map is not strictly increasing")
        if any(self.derivative(v) <= 0 for v in s):
            raise InvalidArgumentError("map derivative is not positive")
        for xv in x:
            back = self.forward(self.inverse(xv))
            if abs(back - xv) > 1e-9 * max(1.0, abs(xv)):
                raise InvalidArgumentError(f"T(T^-1({xv:g})) = {back!r}: inverse inconsistent")

    @property
    def mass(self):
        """Gaussian mass of the domain, i.e. the mass of the image measure."""
        lo, hi = self.domain
        if -lo > hi:
            return G.std_normal_cdf(hi) - G.std_normal_cdf(lo)
        return G.std_normal_cdf(-lo) - G.std_normal_cdf(-hi)

    @property
    def image(self):
        lo, hi = self.domain
        a = self.forward(lo) if math.isfinite(lo) else _limit(self.forward, -1)
        b = self.forward(hi) if math.isfinite(hi) else _limit(self.forward, 1)
        return a, b


def _limit(f, side):
    # the value of an increasing map at +-inf: finite if it has levelled off
    vals = [f(side * x) for x in (40.0, 80.0)]
    if abs(vals[1] - vals[0]) <= 1e-12 * max(1.0, abs(vals[1])):
        return vals[1]
    return side * math.inf


# -- constructors ------------------------------------------------------------------------


def linear_map(sigma=1.0, shift=0.0):
    sigma, shift = float(sigma), float(shift)
    if not sigma > 0:
        raise InvalidArgumentError("sigma must be positive")
    return TransportMap(lambda s: shift + sigma * s, lambda x: (x - shift) / sigma,
                        lambda s: sigma, name=f"linear({sigma:g},{shift:g})")


def exponential_map():
    """T(s) = e^s; the image is the standard log-normal law."""
    return TransportMap(math.exp, math.log, math.exp, name="exp")


def table_map(s, t):
    """Shape-preserving monotone interpolation of the nodes (s_i, t_i)."""
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    if s.ndim != 1 or s.shape != t.shape or len(s) < 2 or np.any(np.diff(s) <= 0) \
            or np.any(np.diff(t) <= 0):
        raise InvalidArgumentError("table map needs strictly increasing s and t")
    P = PchipInterpolator(s, t)
    dP = P.derivative()

    def inv(x):
        if x <= t[0]:
            return float(s[0])
        if x >= t[-1]:
            return float(s[-1])
        return brentq(lambda v: float(P(v)) - x, s[0], s[-1], xtol=1e-15, rtol=1e-15)

    return TransportMap(lambda v: float(P(v)), inv, lambda v: float(dP(v)), (s[0], s[-1]),
                        name="custom-table")


def map_from_json(spec):
    try:
        kind = spec["kind"]
    except (KeyError, TypeError):
        raise InvalidArgumentError("transport map JSON needs 'kind'") from None
    p = dict(spec.get("params", {}))
    if kind == "linear":
        return linear_map(p.get("sigma", 1.0), p.get("shift", 0.0))
    if kind == "lambert":
        return lambert_map()
    if kind == "custom-table":
        try:
            return table_map(p["s"], p["t"])
        except KeyError as e:
            raise InvalidArgumentError(f"custom-table needs {e}") from None
    raise InvalidArgumentError(f"unknown map kind {kind!r}")


# -- the two directions --------------------------------------------------------------------


def _gauss_mass(a, b):
    if a + b > 0:
        return G.std_normal_cdf(-a) - G.std_normal_cdf(-b)
    return G.std_normal_cdf(b) - G.std_normal_cdf(a)


def transport_from_measure(mu: Density1D) -> TransportMap:
    """T = Phi_mu^{-1}(Phi(s) - (1 - m)) on (Phi^{-1}(1 - m), inf)."""
    m = mu.total_mass
    if m > 1.0 + 1e-12:
        raise DomainError(f"a measure of mass {m!r} > 1 is not a Gaussian image")
    m = min(m, 1.0)
    s0 = G.std_normal_quantile(1.0 - m) if m < 1.0 else -math.inf

    def forward(s):
        if s <= s0:
            return mu.support[0]
        up = G.std_normal_cdf(-s)  # Gaussian mass above s = mu-mass above T(s)
        if up < 0.5 * m:
            return upper_quantile(mu, up)
        return quantile(mu, _gauss_mass(s0, s))

    def inverse(x):
        lo, hi = mu.support
        if x <= lo:
            return s0
        if x >= hi:
            return math.inf
        up = _upper_tail(mu, x)
        if up < 0.5:
            return -G.std_normal_quantile(up)
        return G.std_normal_quantile(cdf(mu, x) + (1.0 - m))

    def derivative(s):
        # central difference (T(s+h) - T(s-h)) / 2h, with the numerator found as
        # the length of the interval from T(s-h) that carries gamma((s-h, s+h))
        h = max(1e-6, 1e-6 * abs(s))
        a, b = s - h, s + h
        if a <= s0:
            a, b = s, s + 2.0 * h
        x0 = forward(a)
        target, _ = quad(G.std_normal_pdf, a, b)
        p0 = mu.pdf(x0)
        if not p0 > 0:
            return (forward(b) - x0) / (b - a)
        d = target / p0
        for _ in range(20):
            r = x0 + d
            step = (quad(mu._psi, x0, r)[0] - target) / mu.pdf(r)
            d -= step
            if abs(step) <= 1e-15 * d:
                break
        return d / (b - a)

    return TransportMap(forward, inverse, derivative, (s0, math.inf), name=f"T[{mu.name}]")


def _power_envelope(psi, lo, hi, q=3.0, start=1.0):
    """A power envelope C |r|^{-q} fitted on a geometric probe grid (x2 margin)."""
    probes = np.geomspace(start, 1e6, 200)
    best = 0.0
    for side, inf in ((-1.0, math.isinf(lo)), (1.0, math.isinf(hi))):
        if inf:
            best = max(best, max(psi(side * x) * x ** q for x in probes))
    return TailEnvelope("power", 2.0 * best + 1e-300, q, start)


def measure_from_convex_map(T: TransportMap, envelope=None) -> Density1D:
    """psi(t) = phi(T^{-1}(t)) / T'(T^{-1}(t)) on the image of T."""
    s = T.probe_grid(65)
    d = np.array([T.derivative(v) for v in s])
    if np.any(d <= 0) or np.any(np.diff([T.forward(v) for v in s]) <= 0):
        raise InvalidArgumentError("map is not increasing")
    lo, hi = T.image
    # difference quotients of numeric maps are unreliable in the deep tails;
    # dropping |s| > 8 loses 2 Phi(-8) ~ 1e-15 of mass
    vmax = 38.0 if T.analytic_derivative else 8.0

    def psi(t):
        if not lo < t < hi:
            return 0.0
        v = T.inverse(t)
        if not math.isfinite(v) or abs(v) > vmax:
            return 0.0
        d = T.derivative(v)
        if not d > 0:
            raise NumericFailure(f"T'({v:g}) = {d!r} is not positive")
        return G.std_normal_pdf(v) / d

    if (math.isinf(lo) or math.isinf(hi)) and envelope is None:
        envelope = _power_envelope(psi, lo, hi)
    return Density1D(psi, (lo, hi), T.mass, envelope, breakpoints=_edge_points(T),
                     name=f"image[{T.name}]", table_cells=64)


def _edge_points(T):
    # images of geometrically spaced points next to a finite domain end, where
    # T' may vanish and psi blow up
    s0, s1 = T.domain
    pts = []
    for k in range(17):
        d = 10.0 ** (-k / 2)
        if math.isfinite(s0) and s0 + d < s1:
            pts.append(T.forward(s0 + d))
        if math.isfinite(s1) and s1 - d > s0:
            pts.append(T.forward(s1 - d))
    return tuple(pts)


def lambert_density(t):
    """phi(W(t)) / (t + e^{W(t)}) on (-1/e, inf), 1/sqrt(2 pi) at t = 0.

    The denominator is evaluated as e^W (1 + W) to avoid cancellation at -1/e.
    """
    if t <= -G.INV_E:
        return 0.0
    if t == 0.0:
        return G.INV_SQRT2PI
    w1 = G.lambert_w0_plus_one(t)
    w = w1 - 1.0
    return G.std_normal_pdf(w) * math.exp(-w) / w1


LAMBERT_CUT = 1e-10


def lambert_measure(cut=LAMBERT_CUT) -> Density1D:
    """Image of gamma restricted to (w0, inf) under s e^s, w0 = W(-1/e + cut).

    The full image (cut = 0, mass Phi(1)) has an inverse square root
    singularity at -1/e that double precision cannot place; a small cut keeps
    the measure an exact transport image with mass Phi(-w0).
    """
    if not 0.0 < cut < 0.1:
        raise InvalidArgumentError("cut must lie in (0, 0.1)")
    a = -G.INV_E + cut
    w0 = G.lambert_w0_plus_one(a) - 1.0
    env = TailEnvelope("power", 20.0, 3.0, 1.0)  # sup t^3 psi ~ 12.4
    return Density1D(lambert_density, (a, math.inf), G.std_normal_cdf(-w0), env,
                     breakpoints=(-G.INV_E + G.BRANCH_SERIES_LIMIT / math.e, -0.3, 0.0)
                     + tuple(-G.INV_E + 10.0 ** (-k / 2) for k in range(4, 20)),
                     name="lambert")


def lambert_map(cut=LAMBERT_CUT):
    """T(s) = s e^s on (w0, inf), the increasing branch; T^{-1} = W."""
    w0 = G.lambert_w0_plus_one(-G.INV_E + cut) - 1.0 if cut else -1.0
    return TransportMap(lambda s: s * math.exp(s), G.lambert_w0,
                        lambda s: (1.0 + s) * math.exp(s), (w0, math.inf), name="lambert")


# -- checks -----------------------------------------------------------------------------------


@dataclass(frozen=True)
class TransportConcavity:
    """Verdict on concavity of Phi^{-1}(Phi_mu + 1 - m); ``triple`` certifies."""

    holds: bool
    worst: float
    triple: tuple
    affinity: float

    def __bool__(self):
        return self.holds


def inverse_map_values(mu: Density1D, x):
    T = transport_from_measure(mu)
    return np.array([T.inverse(v) for v in np.atleast_1d(x)])


def is_gamma_transport_concave(mu: Density1D, n=512, tol=CONCAVITY_TOL):
    left, right = _level_window(mu, *mu.support)
    x = chebyshev_grid(left, right, n)
    f = inverse_map_values(mu, x)
    v = shape_test(x, f, "concave", tol)
    return TransportConcavity(v.holds, v.worst, v.triple, affinity_score(x, f))


def monge_ampere_residual(mu: Density1D, T: TransportMap, grid):
    """max |psi(T(s)) T'(s) - phi(s)| over the grid points inside T's domain."""
    lo, hi = T.domain
    worst = 0.0
    for s in np.atleast_1d(np.asarray(grid, dtype=float)):
        if not lo < s < hi:
            continue
        r = abs(mu.pdf(T.forward(s)) * T.derivative(s) - G.std_normal_pdf(s))
        worst = max(worst, r)
    return worst


def transport_grunbaum_verify(mu: Density1D, a, b, n=256):
    """mu((a, g]) against Phi(-I(t)/t), t = mu((a, b)), g the barycenter on (a, b)."""
    verdict = is_gamma_transport_concave(mu)
    if not verdict.holds:
        raise PreconditionError(
            f"measure is not gamma-transport concave (violation {verdict.worst:.3g} at "
            f"{verdict.triple})")
    a_c, b_c = _clip(mu, a, b)
    t = interval_mass(mu, a_c, b_c)
    if not t > 0:
        raise DomainError("interval carries no mass")
    g = truncated_barycenter(mu, a_c, b_c)
    measured = cdf(mu, g) - cdf(mu, a_c)
    bound = G.ehrhard_grunbaum_bound(min(t, 1.0))
    left, right = _level_window(mu, a_c, b_c)
    x = chebyshev_grid(left, right, n)
    aff = affinity_score(x, inverse_map_values(mu, x))
    return CutReport(measured, bound, g, (1.0,), t, equality_verdict(measured - bound, aff),
                     aff, "quadrature", 1e-10, label="gamma-transport")


@dataclass(frozen=True)
class EvenTransportResult:
    accepted: bool
    sigma: float
    max_residual: float
    s: np.ndarray
    residuals: np.ndarray


def even_transport_gaussian_test(mu: Density1D, n=81, tol=1e-6):
    """Fit T(s) = sigma s on [-4, 4]; accept iff the fit is exact to ``tol``."""
    lo, hi = mu.support
    if lo != -hi or abs(mu.total_mass - 1.0) > 1e-9:
        raise PreconditionError("needs an even probability measure")
    span = hi if math.isfinite(hi) else 8.0 * mu.scale
    for r in np.linspace(0.0, span, 41)[1:-1]:
        p, q = mu.pdf(r), mu.pdf(-r)
        if abs(p - q) > 1e-9 * max(p, q, 1e-300):
            raise PreconditionError(f"density is not even at r={r:g}")
    T = transport_from_measure(mu)
    s = np.linspace(-4.0, 4.0, n)
    Ts = np.array([T.forward(v) for v in s])
    sigma = float(s @ Ts / (s @ s))
    res = Ts - sigma * s
    worst = float(np.max(np.abs(res)))
    return EvenTransportResult(worst <= tol, sigma, worst, s, res)


def measure_from_json(spec):
    """Density specs of :mod:`densities`, plus ``{"kind": "lambert"}`` and
    ``{"kind": "image", "map": {...}}`` (the image of gamma under a map)."""
    kind = spec.get("kind") if isinstance(spec, dict) else None
    if kind == "lambert":
        return lambert_measure(spec.get("params", {}).get("cut", LAMBERT_CUT))
    if kind == "image":
        if "map" not in spec:
            raise InvalidArgumentError("image measure needs 'map'")
        return measure_from_convex_map(map_from_json(spec["map"]))
    return density_from_json(spec)
