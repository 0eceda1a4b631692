"""One-dimensional measures given by a density callback.

A :class:`Density1D` builds a cumulative table once, at construction, and
answers CDF and quantile queries by a short adaptive quadrature from the
nearest table node.  On top of that sit truncated barycenters, quantile
integrals, the CDF form of the Grunbaum bound for convex measures and the
generic bound ``F^{-1}((1/t) int_0^t F)`` for F-concave cut profiles.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import optimize

from . import gaussian as G
from ._numerics import (AFFINITY_TOL, CONCAVITY_TOL, ShapeVerdict, affinity_score,
                        chebyshev_grid, quad, shape_test, vectorize)
from .errors import (DomainError, InconsistencyError, InvalidArgumentError, NumericFailure)
from .reports import CutReport, equality_verdict

MASS_RTOL = 1e-9
TABLE_CELLS = 256
TAIL_LEVEL = 1e-6
ROOT_XTOL = 1e-14


class TruncationWarning(UserWarning):
    """An infinite support was cut at a caller-supplied horizon."""


@dataclass(frozen=True)
class TailEnvelope:
    """Analytic tail bound ``psi(r) <= C exp(-rate |r|)`` or ``C |r|^(-rate)``,
    valid for ``|r| >= start``."""

    kind: str
    C: float
    rate: float
    start: float = 0.0

    def __post_init__(self):
        if self.kind not in ("exponential", "power"):
            raise InvalidArgumentError(f"unknown envelope kind {self.kind!r}")
        if not (self.C > 0 and self.rate > 0):
            raise InvalidArgumentError("envelope constants must be positive")
        if self.kind == "power" and self.rate <= 1:
            raise InvalidArgumentError("power envelope needs exponent > 1 to be integrable")

    def __call__(self, r):
        r = abs(r)
        if self.kind == "exponential":
            return self.C * math.exp(-self.rate * r)
        return self.C * r ** (-self.rate)

    def tail_integral(self, R):
        """Envelope mass beyond ``|r| = R`` on one side."""
        R = max(R, self.start)
        if self.kind == "exponential":
            return self.C * math.exp(-self.rate * R) / self.rate
        return self.C * R ** (1.0 - self.rate) / (self.rate - 1.0)

    def horizon(self, eps):
        """Smallest ``R >= start`` whose one-sided envelope mass is below ``eps``."""
        if self.kind == "exponential":
            R = math.log(self.C / (self.rate * eps)) / self.rate
        else:
            R = (self.C / ((self.rate - 1.0) * eps)) ** (1.0 / (self.rate - 1.0))
        return max(R, self.start, 1.0)

    def first_moment_finite(self):
        return self.kind == "exponential" or self.rate > 2.0


@dataclass(frozen=True)
class MeasureTable:
    """Cumulative masses ``cdf_values[i] = mu((alpha, grid[i]])`` and
    ``upper_values[i] = mu((grid[i], beta))``, each summed from its own end so
    both keep relative accuracy in their tails."""

    grid: np.ndarray
    cdf_values: np.ndarray
    accuracy: float
    total_mass: float
    upper_values: np.ndarray

    def cell(self, r):
        """Index ``i`` with ``grid[i] <= r < grid[i+1]`` (clipped)."""
        i = int(np.searchsorted(self.grid, r, side="right")) - 1
        return min(max(i, 0), len(self.grid) - 2)


@dataclass(frozen=True)
class Density1D:
    """A finite measure on the line with density ``evaluate``.

    ``total_mass=None`` means "whatever the density integrates to".  An
    infinite support end needs either a ``tail_envelope`` (the tail is then
    integrated to infinity) or a ``horizon`` (the support is cut there, with a
    :class:`TruncationWarning`).  ``breakpoints`` are interior points where
    the density has kinks or jumps.
    """

    evaluate: object
    support: tuple
    total_mass: float | None = None
    tail_envelope: TailEnvelope | None = None
    horizon: float | None = None
    breakpoints: tuple = ()
    name: str = ""
    scale: float = 1.0
    table_cells: int = TABLE_CELLS

    def __post_init__(self):
        lo, hi = (float(v) for v in self.support)
        if math.isnan(lo) or math.isnan(hi) or not lo < hi:
            raise InvalidArgumentError(f"bad support {self.support!r}")
        if math.isinf(lo) or math.isinf(hi):
            if self.tail_envelope is None:
                if self.horizon is None:
                    raise InvalidArgumentError(
                        "infinite support needs a tail_envelope or a horizon")
                H = float(self.horizon)
                warnings.warn(f"support {self.support!r} truncated at horizon {H:g}",
                              TruncationWarning, stacklevel=3)
                lo, hi = max(lo, -H), min(hi, H)
            else:
                self._check_envelope(lo, hi)
        object.__setattr__(self, "support", (lo, hi))
        object.__setattr__(self, "breakpoints",
                           tuple(sorted(float(p) for p in self.breakpoints if lo < p < hi)))
        table = self.table
        mass = table.total_mass
        if mass <= 0:
            raise InvalidArgumentError("density has zero mass")
        if self.total_mass is None:
            object.__setattr__(self, "total_mass", mass)
        elif abs(mass - self.total_mass) > MASS_RTOL * self.total_mass:
            raise InvalidArgumentError(
                f"density integrates to {mass!r}, declared total_mass {self.total_mass!r}")

    # -- construction helpers -------------------------------------------------

    def _check_envelope(self, lo, hi):
        env = self.tail_envelope
        R = env.horizon(1e-13)
        probes = np.geomspace(max(env.start, 1.0), R, 48)
        for side, inf in ((-1.0, math.isinf(lo)), (1.0, math.isinf(hi))):
            if not inf:
                continue
            for x in probes:
                val = self.evaluate(side * x)
                if val > env(x) * (1 + 1e-9) + 1e-300:
                    raise InvalidArgumentError(
                        f"tail envelope fails at r={side * x:g}: psi={val:g} > {env(x):g}")

    def pdf(self, r):
        lo, hi = self.support
        if not lo <= r <= hi:
            return 0.0
        return float(self.evaluate(r))

    def _psi(self, r):
        # unguarded evaluation inside the support, used by the integrators
        return float(self.evaluate(r))

    def _window_side(self, anchor, direction, edge, full):
        """Walk out from ``anchor`` in doubling steps.

        Returns the first point beyond which at most 1e-3 of ``full`` lies
        (the edge of the uniform core) and the further points down to a tail
        of 1e-12 of ``full`` (extra table nodes for tail quantiles).
        """
        w = self.scale
        core, extra = None, []
        for _ in range(400):
            x = anchor + direction * w
            a, b = (edge, x) if direction < 0 else (x, edge)
            tail, _ = quad(self._psi, a, b, self.breakpoints, epsabs=0.0, fail_rel=1e-8)
            if core is None and tail <= 1e-3 * full:
                core = x
            elif core is not None:
                extra.append(x)
            if tail <= 1e-12 * full:
                return core, extra
            w *= 2.0
        raise NumericFailure("could not find a finite window holding the mass")

    @cached_property
    def table(self) -> MeasureTable:
        lo, hi = self.support
        extra = []
        if math.isfinite(lo) and math.isfinite(hi):
            x0, x1 = lo, hi
        else:
            anchor = hi if math.isfinite(hi) else (lo if math.isfinite(lo) else 0.0)
            full, _ = quad(self._psi, lo, hi, self.breakpoints + (anchor,), fail_rel=1e-8)
            x0, x1 = lo, hi
            if math.isinf(lo):
                x0, more = self._window_side(anchor, -1.0, lo, full)
                extra += more
            if math.isinf(hi):
                x1, more = self._window_side(anchor, 1.0, hi, full)
                extra += more
        grid = np.union1d(np.linspace(x0, x1, self.table_cells + 1),
                          [p for p in self.breakpoints + tuple(extra) if lo < p < hi])
        cum = np.empty(len(grid))
        cells = np.empty(len(grid) - 1)
        left, err = quad(self._psi, lo, grid[0], epsabs=0.0) if lo < grid[0] else (0.0, 0.0)
        cum[0] = max(left, 0.0)
        for i in range(len(grid) - 1):
            v, e = quad(self._psi, grid[i], grid[i + 1], epsabs=0.0)
            cells[i] = v
            cum[i + 1] = cum[i] + v
            err += e
        right, e = quad(self._psi, grid[-1], hi, epsabs=0.0) if grid[-1] < hi else (0.0, 0.0)
        err += e
        upper = np.empty(len(grid))
        upper[-1] = max(right, 0.0)
        for i in range(len(grid) - 2, -1, -1):
            upper[i] = upper[i + 1] + cells[i]
        return MeasureTable(grid, cum, err, float(cum[-1] + upper[-1]), upper)

    # -- conveniences -------------------------------------------------------------

    def normalized(self):
        """The same shape rescaled to mass one."""
        m = self.total_mass
        f = self.evaluate
        return Density1D(lambda r: f(r) / m, self.support, 1.0,
                         _scaled_envelope(self.tail_envelope, 1.0 / m), self.horizon,
                         self.breakpoints, self.name, self.scale, self.table_cells)

    def pdf_array(self, x):
        return vectorize(self.evaluate)(x)


def _scaled_envelope(env, k):
    if env is None:
        return None
    return TailEnvelope(env.kind, env.C * k, env.rate, env.start)


# -- CDF and quantile -----------------------------------------------------------


def _upper_tail(mu, r):
    """mu((r, beta)), accurate when r is far right."""
    lo, hi = mu.support
    if r >= hi:
        return 0.0
    tab = mu.table
    g = tab.grid
    if r < g[0]:
        return mu.total_mass - cdf(mu, r)
    if r < g[-1]:
        i = tab.cell(r)
        v, _ = quad(mu._psi, r, g[i + 1])
        return float(tab.upper_values[i + 1] + v)
    v, _ = quad(mu._psi, r, hi, epsabs=0.0)
    return v


def cdf(mu: Density1D, r):
    """Phi_mu(r) = mu((alpha, r])."""
    r = float(r)
    if math.isnan(r):
        raise InvalidArgumentError("r is NaN")
    lo, hi = mu.support
    if r <= lo:
        return 0.0
    if r >= hi:
        return mu.total_mass
    tab = mu.table
    g = tab.grid
    if r < g[0]:
        v, _ = quad(mu._psi, lo, r, epsabs=0.0)
        return v
    if r > g[-1]:
        v, _ = quad(mu._psi, r, hi, epsabs=0.0)
        return mu.total_mass - v
    i = tab.cell(r)
    v, _ = quad(mu._psi, g[i], r)
    return float(min(tab.cdf_values[i] + v, mu.total_mass))


def _newton_bracket(f, fprime, a, b, x, xtol=ROOT_XTOL):
    """Newton steps safeguarded by bisection on a sign-changing bracket
    (f(a) < 0 < f(b)).  A step that fails to halve |f| is followed by a
    bisection, so slow Newton phases cannot stall."""
    prev = math.inf
    for _ in range(400):
        fx = f(x)
        if fx == 0.0:
            return x
        if fx < 0.0:
            a = x
        else:
            b = x
        d = fprime(x)
        nx = x - fx / d if d > 0.0 and abs(fx) <= 0.5 * prev else math.nan
        prev = abs(fx)
        if not a < nx < b:
            nx = 0.5 * (a + b) if math.isfinite(a) and math.isfinite(b) else (
                b - 2.0 * abs(b) - 1.0 if math.isinf(a) else a + 2.0 * abs(a) + 1.0)
        if abs(nx - x) <= xtol + 4e-16 * abs(x) or b - a <= xtol + 4e-16 * abs(a):
            return nx
        x = nx
    raise NumericFailure("quantile root search did not converge", achieved=b - a)


def _log_tail_solver(tail, psi, target, sign):
    # solve log tail(r) = log target; the tail mass falls over many decades so
    # plain Newton on the mass would crawl
    lt = math.log(target)

    def f(r):
        v = tail(r)
        return sign * ((math.log(v) if v > 0 else -800.0) - lt)

    def fp(r):
        v = tail(r)
        return psi(r) / v if v > 0 else 0.0

    return f, fp


def quantile(mu: Density1D, t):
    """Phi_mu^{-1}(t): the smallest r with Phi_mu(r) >= t.

    ``t <= 0`` returns the left support end and ``t >= total_mass`` the right
    one; either may be an IEEE infinity.
    """
    t = float(t)
    if math.isnan(t):
        raise InvalidArgumentError("t is NaN")
    lo, hi = mu.support
    m = mu.total_mass
    if t <= 0.0:
        return lo
    if t >= m:
        return hi
    tab = mu.table
    g, C = tab.grid, tab.cdf_values
    if t < C[0]:
        # deep left tail: bracket outward, then solve on the log tail mass
        tail = lambda r: quad(mu._psi, lo, r, epsabs=0.0)[0]
        f, fp = _log_tail_solver(tail, mu.pdf, t, 1.0)
        a, b = lo, g[0]
        if math.isinf(lo):
            w = max(g[1] - g[0], mu.scale)
            a = g[0] - w
            while f(a) > 0.0:
                b, a, w = a, a - 2.0 * w, 2.0 * w
    elif t > C[-1]:
        return upper_quantile(mu, m - t)
    else:
        i = int(np.searchsorted(C, t, side="left")) - 1
        i = min(max(i, 0), len(g) - 2)
        a, b = g[i], g[i + 1]
        base = C[i]
        f = lambda r: base + quad(mu._psi, a, r, epsabs=0.0)[0] - t
        fp = mu.pdf
    fa, fb = f(a), f(b)
    if fa >= 0.0:
        return a
    if fb <= 0.0:
        return b
    if math.isfinite(a) and math.isfinite(b):
        x = a + (b - a) * min(max(-fa / (fb - fa), 0.01), 0.99)
    else:
        x = b - 1.0 if math.isinf(a) else a + 1.0
    return _newton_bracket(f, fp, a, b, x)


def upper_quantile(mu: Density1D, s):
    """The r with mu((r, beta)) = s, keeping relative accuracy for tiny ``s``
    (where ``quantile(mu, m - s)`` would lose it to cancellation)."""
    s = float(s)
    lo, hi = mu.support
    m = mu.total_mass
    if s <= 0.0:
        return hi
    if s >= m:
        return lo
    g, U = mu.table.grid, mu.table.upper_values
    if s > U[0]:
        return quantile(mu, m - s)
    if s > U[-1]:
        # inside the table: solve on the cell's upper mass, free of cancellation
        i = int(np.searchsorted(-U, -s, side="left")) - 1
        i = min(max(i, 0), len(g) - 2)
        a, b = g[i], g[i + 1]
        base = U[i + 1]
        f = lambda r: s - base - quad(mu._psi, r, b, epsabs=0.0)[0]
        fa, fb = f(a), f(b)
        if fa >= 0.0:
            return a
        if fb <= 0.0:
            return b
        x = a + (b - a) * min(max(-fa / (fb - fa), 0.01), 0.99)
        return _newton_bracket(f, mu.pdf, a, b, x)
    tail = lambda r: quad(mu._psi, r, hi, epsabs=0.0)[0]
    f, fp = _log_tail_solver(tail, mu.pdf, s, -1.0)
    a, b = g[-1], hi
    if math.isinf(hi):
        w = max(g[-1] - g[-2], mu.scale)
        b = g[-1] + w
        while f(b) < 0.0:
            a, b, w = b, b + 2.0 * w, 2.0 * w
    fa, fb = f(a), f(b)
    if fa >= 0.0:
        return a
    if fb <= 0.0:
        return b
    return _newton_bracket(f, fp, a, b, b - 1.0 if math.isinf(a) else (
        a + 1.0 if math.isinf(b) else 0.5 * (a + b)))


def iso_profile(mu: Density1D, t):
    """I_mu(t) = psi(Phi_mu^{-1}(t))."""
    _check_level(mu, t, open_right=True)
    return mu.pdf(quantile(mu, t))


def _check_level(mu, t, open_right=False):
    t = float(t)
    if abs(t - mu.total_mass) <= MASS_RTOL * mu.total_mass and not open_right:
        t = mu.total_mass
    if math.isnan(t) or t <= 0.0 or t > mu.total_mass or (open_right and t == mu.total_mass):
        raise DomainError(f"level {t!r} outside (0, {mu.total_mass!r})")
    return t


# -- moments ------------------------------------------------------------------------


def _clip(mu, a, b):
    lo, hi = mu.support
    a, b = max(float(a), lo), min(float(b), hi)
    if not a < b:
        raise DomainError(f"interval ({a}, {b}) misses the support")
    return a, b


def _panel_points(mu, a, b):
    # every table node: heavy tails leave most of the mass in a few narrow cells
    return mu.breakpoints + tuple(mu.table.grid)


def interval_mass(mu: Density1D, a, b):
    """mu((a, b)) by direct quadrature."""
    a, b = _clip(mu, a, b)
    v, _ = quad(mu._psi, a, b, _panel_points(mu, a, b), epsabs=0.0)
    return v


def first_moment(mu: Density1D, a, b):
    """int_a^b r dmu(r)."""
    a, b = _clip(mu, a, b)
    _require_moment(mu, a, b)
    v, _ = quad(lambda r: r * mu._psi(r), a, b, _panel_points(mu, a, b), fail_abs=1e-12)
    return v


def _require_moment(mu, a, b):
    env = mu.tail_envelope
    if (math.isinf(a) or math.isinf(b)) and env is not None and not env.first_moment_finite():
        raise DomainError("tail envelope does not guarantee a finite first moment")


def truncated_barycenter(mu: Density1D, a, b):
    """g = int_a^b r dmu / mu((a, b))."""
    m0 = interval_mass(mu, a, b)
    if m0 <= 0.0:
        raise DomainError(f"mu(({a}, {b})) = 0")
    g = first_moment(mu, a, b) / m0
    a, b = _clip(mu, a, b)
    return min(max(g, a), b)


def barycenter(mu: Density1D):
    return truncated_barycenter(mu, *mu.support)


@dataclass(frozen=True)
class QuantileIntegral:
    """int_0^t Phi_mu^{-1} by two routes, plus the closed form
    ``g - Phi_mu^{-1}(t)(1 - t)`` evaluated for comparison only."""

    t: float
    direct: float
    moment: float
    closed_form: float

    @property
    def value(self):
        return self.direct

    @property
    def discrepancy(self):
        return abs(self.direct - self.moment)

    @property
    def closed_form_discrepancy(self):
        return abs(self.closed_form - self.direct)

    def __float__(self):
        return self.direct


def _quantile_quadrature(mu, t):
    # r = h e^{-y} on (0, h] and, at full mass, r = m - h e^{-y} on [h, m): both
    # endpoint singularities of the quantile become exponentially decaying tails
    m = mu.total_mass
    h = 0.5 * t
    q = lambda r: quantile(mu, min(r, np.nextafter(m, 0.0)))
    # levels below 1e-30 m are dropped: for tails decaying like |r|^-3 or faster
    # that costs under 1e-14
    Y = math.log(h / (1e-30 * m))
    pts = (2.0, 8.0, 40.0)
    low, _ = quad(lambda y: q(h * math.exp(-y)) * h * math.exp(-y), 0.0, Y, pts,
                  fail_rel=1e-9, fail_abs=1e-11)
    if t < m:
        high, _ = quad(q, h, t, fail_rel=1e-9, fail_abs=1e-11)
    else:
        high, _ = quad(lambda y: upper_quantile(mu, h * math.exp(-y)) * h * math.exp(-y), 0.0,
                       Y, pts, fail_rel=1e-9, fail_abs=1e-11)
    return low + high


def quantile_integral(mu: Density1D, t, *, agree=1e-6):
    """int_0^t Phi_mu^{-1}(r) dr, direct and via the truncated first moment.

    The direct quadrature is returned as ``value``; the two routes must agree
    to ``agree`` or :class:`InconsistencyError` is raised.
    """
    t = _check_level(mu, t)
    t = min(t, mu.total_mass)
    lo, hi = mu.support
    m = mu.total_mass
    q_t = quantile(mu, t)
    direct = _quantile_quadrature(mu, t)
    moment = first_moment(mu, lo, q_t) if q_t > lo else 0.0
    full = first_moment(mu, lo, hi)
    closed_form = full if t >= m else full - q_t * (m - t)
    if abs(direct - moment) > agree:
        raise InconsistencyError(
            f"quantile integral routes disagree at t={t}: {direct!r} vs {moment!r}",
            values=(direct, moment))
    return QuantileIntegral(t, float(direct), float(moment), float(closed_form))


# -- cut bounds -----------------------------------------------------------------------


def cdf_grunbaum_bound(mu: Density1D, a, b):
    """Phi_mu((1/t) int_0^t Phi_mu^{-1}) with t = mu((a, b))."""
    t = interval_mass(mu, a, b)
    if t <= 0.0:
        raise DomainError(f"mu(({a}, {b})) = 0")
    t = min(t, mu.total_mass)
    return cdf(mu, quantile_integral(mu, t).value / t)


def _level_window(mu, a, b, level=TAIL_LEVEL):
    """A finite sampling window inside (a, b) that leaves out relative mass
    ``level`` at each end (so infinite ends and massless stretches are cut)."""
    a, b = _clip(mu, a, b)
    ca = cdf(mu, a)
    cb = cdf(mu, b)
    span = cb - ca
    left = max(a, quantile(mu, ca + level * span))
    right = min(b, quantile(mu, cb - level * span))
    return left, right


def halfspace_profile_values(mu: Density1D, a, r):
    """f(r) = Phi_mu^{-1}(Phi_mu(r) - Phi_mu(a)) on an array of r."""
    ca = cdf(mu, a)
    return np.array([quantile(mu, cdf(mu, x) - ca) for x in np.atleast_1d(r)])


@dataclass(frozen=True)
class SampledShape:
    """Samples of a composed map together with its shape verdict."""

    x: np.ndarray
    values: np.ndarray
    verdict: ShapeVerdict
    affinity: float

    @property
    def holds(self):
        return self.verdict.holds


def halfspace_concavity_profile(mu: Density1D, a, n=512, tol=CONCAVITY_TOL):
    """Sample r -> Phi_mu^{-1}(Phi_mu(r) - Phi_mu(a)) and test it for concavity."""
    lo, hi = mu.support
    if not a < hi:
        raise DomainError("a must lie left of the support's right end")
    left, right = _level_window(mu, max(a, lo), hi)
    x = chebyshev_grid(left, right, n)
    f = halfspace_profile_values(mu, a, x)
    return SampledShape(x, f, shape_test(x, f, "concave", tol), affinity_score(x, f))


@dataclass(frozen=True)
class ConvexityVerdict:
    """Outcome of :func:`is_convex_measure`; ``holds`` is None when psi
    vanished at an interior sample (``zero_at`` gives the location)."""

    holds: bool | None
    worst: float
    triple: tuple
    zero_at: float | None = None

    def __bool__(self):
        return bool(self.holds)


def is_convex_measure(mu: Density1D, n=512, tol=CONCAVITY_TOL):
    """Test 1/psi for convexity on a Chebyshev grid of interior points."""
    left, right = _level_window(mu, *mu.support)
    x = chebyshev_grid(left, right, n)
    psi = mu.pdf_array(x)
    if np.any(psi <= 0.0):
        z = float(x[np.argmax(psi <= 0.0)])
        return ConvexityVerdict(None, math.inf, (), zero_at=z)
    v = shape_test(x, 1.0 / psi, "convex", tol)
    return ConvexityVerdict(v.holds, v.worst, v.triple)


def verify_cdf_grunbaum(mu: Density1D, a, b, n=256):
    """Compare mu((a, g]) with the CDF-Grunbaum bound on (a, b)."""
    a_c, b_c = _clip(mu, a, b)
    t = interval_mass(mu, a_c, b_c)
    g = truncated_barycenter(mu, a_c, b_c)
    measured = cdf(mu, g) - cdf(mu, a_c)
    bound = cdf_grunbaum_bound(mu, a_c, b_c)
    left, right = _level_window(mu, a_c, b_c)
    x = chebyshev_grid(left, right, n)
    aff = affinity_score(x, halfspace_profile_values(mu, a_c, x))
    return CutReport(measured, bound, g, (1.0,), t, equality_verdict(measured - bound, aff),
                     aff, "quadrature", 1e-10, label="convex")


# -- the generic F-concave bound --------------------------------------------------


@dataclass(frozen=True)
class BoundSpec:
    """A transform F on (0, domain_max) with declared monotonicity.

    ``inverse`` and ``primitive`` (an antiderivative vanishing at 0) are
    optional; without them root search and quadrature are used.
    """

    transform: object
    increasing: bool
    inverse: object = None
    primitive: object = None
    domain_max: float = 1.0
    name: str = ""

    def __post_init__(self):
        probes = np.linspace(0.0, self.domain_max, 66)[1:-1]
        vals = np.array([self.transform(float(p)) for p in probes])
        d = np.diff(vals)
        if not np.all(np.isfinite(vals)) or not (np.all(d > 0) if self.increasing else np.all(d < 0)):
            raise InvalidArgumentError(
                f"transform {self.name or self.transform!r} is not strictly "
                f"{'increasing' if self.increasing else 'decreasing'} on 64 probes")

    @property
    def primitive_available(self):
        return self.primitive is not None

    @property
    def shape(self):
        return "concave" if self.increasing else "convex"

    def __call__(self, r):
        return self.transform(r)

    @classmethod
    def identity(cls):
        return cls(lambda r: r, True, lambda y: y, lambda t: 0.5 * t * t, name="identity")

    @classmethod
    def log(cls):
        return cls(math.log, True, math.exp, lambda t: t * math.log(t) - t, name="log")

    @classmethod
    def power(cls, s):
        """F(r) = r^s, increasing for s > 0 and decreasing for s < 0."""
        s = float(s)
        if s == 0.0:
            return cls.log()
        prim = (lambda t: t ** (s + 1.0) / (s + 1.0)) if s > -1.0 else None
        return cls(lambda r: r ** s, s > 0, lambda y: y ** (1.0 / s), prim, name=f"power({s:g})")

    @classmethod
    def gaussian(cls):
        return cls(G.std_normal_quantile, True, G.std_normal_cdf,
                   lambda t: -G.gaussian_isoperimetric(t), name="gaussian")


def _integral_of_F(F, t):
    if F.primitive is not None:
        return F.primitive(t)
    # divergence probe: increments of int_eps^t F must shrink as eps -> 0
    eps = (1e-6, 1e-9, 1e-12)
    I = [quad(F.transform, e * t, t, fail_rel=1e-7, fail_abs=1e-9)[0] for e in eps]
    d1, d2 = abs(I[1] - I[0]), abs(I[2] - I[1])
    if d2 > 1e-10 and d2 >= 0.9 * d1:
        raise DomainError(f"int_0^t F diverges for {F.name or F.transform!r}")
    v, _ = quad(F.transform, 0.0, t, fail_rel=1e-8, fail_abs=1e-10)
    return v


def _invert(F, y, t):
    if F.inverse is not None:
        return F.inverse(y)
    h = lambda r: F.transform(r) - y
    hi = t
    lo = 0.5 * t
    for _ in range(2000):
        if (h(lo) < 0) == F.increasing or h(lo) == 0:
            break
        lo *= 0.5
    else:
        raise NumericFailure("no bracket for F^{-1}")
    return optimize.brentq(h, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)


def f_concave_bound(F: BoundSpec, t):
    """F^{-1}((1/t) int_0^t F): the lower bound on a barycentric cut for
    profiles that are F-concave (F increasing) or F-convex (F decreasing)."""
    t = float(t)
    if not 0.0 < t <= F.domain_max:
        raise DomainError(f"t={t!r} outside (0, {F.domain_max}]")
    return _invert(F, _integral_of_F(F, t) / t, t)


def verify_f_concave_cut(profile, F: BoundSpec, support, t=None, n=512):
    """Check the cut at the barycenter of a nondecreasing mass profile.

    ``profile(r)`` is the mass of {<x,u> <= r}; ``support = (r0, r1)`` the
    range where it rises from 0 to ``t``.
    """
    r0, r1 = (float(v) for v in support)
    P = profile
    if t is None:
        t = float(P(r1)) if math.isfinite(r1) else float(P(math.inf))
    if not t > 0:
        raise InvalidArgumentError("profile carries no mass")
    # sampling window away from infinite ends
    lo = r0 if math.isfinite(r0) else _profile_level(P, t * 1e-8, r1, -1.0)
    hi = r1 if math.isfinite(r1) else _profile_level(P, t * (1 - 1e-8), r0, 1.0)
    x = chebyshev_grid(lo, hi, n)
    vals = np.array([float(P(v)) for v in x])
    if np.any(np.diff(vals) < -1e-12 * t) or vals[0] < -1e-12 * t or vals[-1] > t * (1 + 1e-12):
        raise InvalidArgumentError("profile is not nondecreasing from 0 to t")
    vals = np.clip(vals, 1e-300, t)
    Fv = np.array([F.transform(float(v)) for v in vals])
    verdict = shape_test(x, Fv, F.shape)
    aff = affinity_score(x, Fv)
    pivot = r1 if math.isfinite(r1) else (r0 if math.isfinite(r0) else 0.0)
    below, _ = quad(lambda r: float(P(r)), r0, pivot, fail_rel=1e-9) if r0 < pivot else (0.0, 0.0)
    above, _ = quad(lambda r: t - float(P(r)), pivot, r1, fail_rel=1e-9) if pivot < r1 else (0.0, 0.0)
    g = pivot + (above - below) / t
    measured = float(P(g))
    bound = f_concave_bound(F, t) if F.domain_max >= t else math.nan
    notes = () if verdict.holds else (f"F-{F.shape}ity fails (worst {verdict.worst:.3g})",)
    return CutReport(measured, bound, g, (1.0,), t, equality_verdict(measured - bound, aff),
                     aff, "quadrature", 1e-9, label=F.name, notes=notes)


def _profile_level(P, level, finite_end, direction):
    # walk away from the finite end until the profile crosses `level`, then bisect
    start = finite_end if math.isfinite(finite_end) else 0.0
    h = lambda r: float(P(r)) - level
    prev, w = start, 1.0
    for _ in range(200):
        x = start + direction * w
        if (h(x) <= 0) if direction < 0 else (h(x) >= 0):
            break
        prev, w = x, 2.0 * w
    a, b = sorted((prev, x))
    if h(a) * h(b) < 0:
        return optimize.brentq(h, a, b, xtol=1e-12)
    return x


def half_space_cdf_inequality_gap(mu, a, r, s, lam):
    """LHS - RHS of mu((a,(1-lam)r+lam s]) >= Phi_mu((1-lam)Phi_mu^{-1}(mu((a,r])) +
    lam Phi_mu^{-1}(mu((a,s])))."""
    ca = cdf(mu, a)
    lhs = cdf(mu, (1 - lam) * r + lam * s) - ca
    qr = quantile(mu, cdf(mu, r) - ca)
    qs = quantile(mu, cdf(mu, s) - ca)
    return lhs - cdf(mu, (1 - lam) * qr + lam * qs)
