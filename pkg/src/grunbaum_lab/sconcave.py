"""s-concave measures: Borell's classification, sharp cut bounds, extremal
densities and the s <= -1 family for which no positive bound survives."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InvalidArgumentError, NumericFailure
from .measure1d import Density1D, TailEnvelope, barycenter, cdf
from .reports import CutReport, equality_verdict


def _check_n(n):
    if int(n) != n or n < 1:
        raise InvalidArgumentError(f"dimension must be a positive integer, got {n!r}")
    return int(n)


def p_from_s(s, n):
    """p = s / (1 - n s); ``inf`` at s = 1/n and -1/n at s = -inf."""
    n = _check_n(n)
    s = float(s)
    if math.isnan(s) or s > 1.0 / n:
        raise DomainError(f"s={s!r} exceeds 1/n={1.0 / n!r}")
    if s == -math.inf:
        return -1.0 / n
    if s * n == 1.0:
        return math.inf
    return s / (1.0 - n * s)


def s_from_p(p, n):
    """s = p / (1 + n p); ``-inf`` at p = -1/n and 1/n at p = inf."""
    n = _check_n(n)
    p = float(p)
    if math.isnan(p) or p < -1.0 / n:
        raise DomainError(f"p={p!r} is below -1/n={-1.0 / n!r}")
    if p == math.inf:
        return 1.0 / n
    if 1.0 + n * p == 0.0:
        return -math.inf
    return p / (1.0 + n * p)


@dataclass(frozen=True)
class SConcaveSpec:
    """The pair (s, n) together with Borell's exponent p."""

    s: float
    n: int = 1

    def __post_init__(self):
        p_from_s(self.s, self.n)

    @property
    def p(self):
        return p_from_s(self.s, self.n)

    @property
    def p_infinite(self):
        return math.isinf(self.p)

    @property
    def regime(self):
        return "positive" if self.s > 0 else ("zero" if self.s == 0 else "negative")


def s_grunbaum_bound(s):
    """(1/(1+s))^{1/s}, and 1/e at s = 0: the sharp barycentric cut for
    s-concave probability measures.  There is no positive bound for s <= -1."""
    s = float(s)
    if math.isnan(s):
        raise InvalidArgumentError("s is NaN")
    if s <= -1.0:
        raise DomainError("s <= -1: only the trivial bound 0 holds (mass can escape the cut)")
    if s > 1.0:
        raise DomainError("s-concave measures with s > 1 are degenerate")
    if s == 0.0:
        return math.exp(-1.0)
    return math.exp(-math.log1p(s) / s)


def classic_grunbaum_bound(n):
    """(n/(n+1))^n for convex bodies in R^n."""
    n = _check_n(n)
    return math.exp(-n * math.log1p(1.0 / n))


def c_np_bound(n, p):
    """C(n, p) = ((np+1)/((n+1)p+1))^{(np+1)/p}, with C(n, 0) = 1/e and the
    p -> inf limit (n/(n+1))^n."""
    n = _check_n(n)
    p = float(p)
    if math.isnan(p):
        raise InvalidArgumentError("p is NaN")
    if p == 0.0:
        return math.exp(-1.0)
    if p == math.inf:
        return classic_grunbaum_bound(n)
    if p <= -1.0 / (n + 1):
        raise DomainError(f"p={p!r} must exceed -1/(n+1)")
    # log of the base written as log1p(-p/((n+1)p+1)) to stay accurate near p = 0
    log_base = math.log1p(-p / ((n + 1) * p + 1.0))
    return math.exp((n * p + 1.0) / p * log_base)


# -- p-means and p-concavity ----------------------------------------------------


def p_mean(a, b, p, lam=0.5):
    """M_p^{(lam)}(a, b), with the usual conventions at p = 0, +-inf and for
    a zero argument."""
    a, b = float(a), float(b)
    if a < 0 or b < 0:
        raise InvalidArgumentError("p-means take nonnegative arguments")
    if p == math.inf:
        return max(a, b)
    if p == -math.inf:
        return min(a, b)
    if a == 0.0 or b == 0.0:
        if p <= 0:
            return 0.0
        return ((1 - lam) * a ** p + lam * b ** p) ** (1.0 / p)
    if abs(p) < 1e-150:
        # M_p differs from the geometric mean by O(p)
        return a ** (1 - lam) * b ** lam
    la, lb = math.log(a), math.log(b)
    if abs(p) * max(abs(la), abs(lb)) < 1.0:
        # log M_p = log1p((1-lam) expm1(p la) + lam expm1(p lb)) / p, exact as p -> 0
        return math.exp(math.log1p((1 - lam) * math.expm1(p * la)
                                   + lam * math.expm1(p * lb)) / p)
    return ((1 - lam) * a ** p + lam * b ** p) ** (1.0 / p)


def p_concavity_defect(psi, support, p, pairs=10_000, seed=0, window=None):
    """Largest relative shortfall of psi((x+y)/2) below M_p(psi(x), psi(y)) over
    random pairs inside the support (or ``window`` if the support is infinite)."""
    lo, hi = window if window is not None else support
    rng = np.random.default_rng(seed)
    xs = rng.uniform(lo, hi, size=(pairs, 2))
    worst = -math.inf
    for x, y in xs:
        fx, fy, fm = psi(x), psi(y), psi(0.5 * (x + y))
        m = p_mean(fx, fy, p)
        worst = max(worst, (m - fm) / max(m, fm, 1e-300))
    return worst


# -- extremal densities -------------------------------------------------------------


@dataclass(frozen=True)
class ExtremalParams:
    """Parameters of the equality cases.

    ``r1`` is the offset of the supporting face, ``a > 0`` the rate.  ``R``
    (negative regime, n >= 2) is the offset of the apex of the truncated cone;
    it defaults to ``r1 + 1/a``, the only value compatible with equality.
    ``u`` is the cut direction (default: last axis), ``v`` the cone/cylinder
    direction with ``<u, v> = 1`` (default ``u``) and ``base_profile`` a
    nonnegative p-concave function of z in u-perp (default: 1 on the face).
    """

    r1: float = 0.0
    a: float = 1.0
    R: float | None = None
    v: tuple | None = None
    base_profile: object = None
    u: tuple | None = None

    def __post_init__(self):
        if not (self.a > 0 and math.isfinite(self.a)):
            raise InvalidArgumentError("a must be a positive real")
        if not math.isfinite(self.r1):
            raise InvalidArgumentError("r1 must be finite")
        if self.R is not None and not self.R > self.r1:
            raise InvalidArgumentError("R must exceed r1")

    @property
    def r0(self):
        return self.r1 - 1.0 / self.a

    @property
    def apex(self):
        return self.r1 + 1.0 / self.a if self.R is None else self.R


# -log of the tail mass an extremal density may drop
TINY_TAIL_LOG = 46.0


def extremal_density_1d(spec: SConcaveSpec, params: ExtremalParams) -> Density1D:
    """The normalised density attaining the s-bound on the line.

    s > 0:  (1 + a(r - r1))^{1/p} on (r1 - 1/a, r1]  (constant when s = 1);
    s = 0:  a e^{a(r - r1)} on (-inf, r1];
    s < 0:  (1 + a(r1 - r))^{1/p} on (-inf, r1], which needs p in (-1/2, 0).
    """
    if spec.n != 1:
        raise InvalidArgumentError("extremal_density_1d needs n = 1")
    s, p, a, r1 = spec.s, spec.p, params.a, params.r1
    if s > 0:
        lo = params.r0
        if spec.p_infinite:
            return Density1D(lambda r: a, (lo, r1), 1.0, name="extremal(s=1)")
        k = a * (1.0 + 1.0 / p)  # 1 / int (1 + a(r - r1))^{1/p} dr
        e = 1.0 / p
        mass = 1.0
        # for small p the mass sits within ~p/a of r1; drop a left tail below 1e-20
        x = TINY_TAIL_LOG / (a * (1.0 + e))
        if x < 1.0 / a:
            lo = _narrow_end(r1, x)
            mass = -math.expm1((1.0 + e) * math.log1p(-a * x))
        def psi(r):
            d = a * (r - r1)
            return k * math.exp(e * math.log1p(d)) if d > -1.0 else 0.0

        return Density1D(psi, (lo, r1), mass,
                         name=f"extremal(s={s:g})", scale=min(1.0 / a, x))
    if s == 0:
        env = TailEnvelope("exponential", a * math.exp(-a * r1 + a * abs(r1)), a)
        return Density1D(lambda r: a * math.exp(a * (r - r1)), (-math.inf, r1), 1.0, env,
                         name="extremal(s=0)", scale=1.0 / a)
    if not -0.5 < p < 0:
        raise DomainError(f"s={s!r} gives p={p!r}; a half-line density needs p in (-1/2, 0)")
    e = 1.0 / p
    k = a * (-(1.0 + e))  # 1 / int_{-inf}^{r1} (1 + a(r1 - r))^{1/p} dr

    def psi(r):
        return k * math.exp(e * math.log1p(a * (r1 - r)))

    if -(1.0 + e) >= TINY_TAIL_LOG:
        # steep power: the mass sits within ~|p|/a of r1, so cut a tail below 1e-20
        x = math.expm1(TINY_TAIL_LOG / -(1.0 + e)) / a
        mass = -math.expm1((1.0 + e) * math.log1p(a * x))
        return Density1D(psi, (_narrow_end(r1, x), r1), mass, name=f"extremal(s={s:g})",
                         scale=x)
    start = max(2.0 * abs(1.0 + a * r1) / a, 1.0)
    env = TailEnvelope("power", k * (a / 2.0) ** e, -e, start)
    return Density1D(psi, (-math.inf, r1), 1.0, env, name=f"extremal(s={s:g})",
                     scale=1.0 / a)


def _narrow_end(r1, x):
    lo = r1 - x
    if not r1 - lo > 64 * math.ulp(r1):
        raise NumericFailure(f"extremal support of width {x:.3g} is below the float "
                             f"resolution at r1={r1!r}")
    return lo


def extremal_cut_report(spec: SConcaveSpec, params: ExtremalParams) -> CutReport:
    """Cut fraction of the 1-D extremal density at its barycenter vs the s-bound."""
    mu = extremal_density_1d(spec, params)
    g = barycenter(mu)
    measured = cdf(mu, g)
    bound = s_grunbaum_bound(spec.s)
    gap = measured - bound
    return CutReport(measured, bound, g, (1.0,), 1.0, equality_verdict(gap, 0.0), None,
                     "quadrature", 1e-10, label=f"sconcave({spec.s:g})")


def _profile_integral(s, a):
    # int of (1 + a(r - r1))^{1/s - 1} (s > 0), e^{a(r - r1)} (s = 0) or
    # (1 + a(r1 - r))^{1/s - 1} (s < 0) over its support
    return abs(s) / a if s != 0 else 1.0 / a


def extremal_body_nd(spec: SConcaveSpec, face, params: ExtremalParams):
    """Cone (s > 0), cylinder (s = 0) or truncated cone (s < 0) over the face
    ``face`` (points of R^n on {<x, u> = r1}), with the matching density.

    Without ``base_profile`` the density is normalised to a probability
    measure, except at s = 1/n where plain Lebesgue measure is kept so that
    exact polytope formulas apply.  For s < 0 the rate is tied to the apex: a = 1/(R - r1), and
    an inconsistent pair raises.
    """
    from . import bodies as B

    n = spec.n
    s, p = spec.s, spec.p
    L = np.atleast_2d(np.asarray(face, dtype=float))
    if L.shape[1] != n:
        raise InvalidArgumentError(f"face points must live in R^{n}")
    u = np.eye(n)[-1] if params.u is None else B._unit(params.u, n)
    v = u.copy() if params.v is None else np.asarray(params.v, dtype=float).ravel()
    if v.shape != (n,) or abs(float(v @ u) - 1.0) > 1e-12:
        raise InvalidArgumentError("need <u, v> = 1")
    r1 = params.r1
    if np.max(np.abs(L @ u - r1)) > 1e-9 * (1.0 + np.abs(L).max()):
        raise InvalidArgumentError("face must lie in the hyperplane <x, u> = r1")
    Q = B.orthonormal_complement(u) if n > 1 else np.zeros((1, 0))
    if n > 1:
        Y = L @ Q
        if np.linalg.matrix_rank(Y - Y[0], tol=1e-12 * (1 + np.abs(Y).max())) < n - 1:
            raise InvalidArgumentError("face is degenerate")
        nu = float(Y.max() - Y.min()) if n == 2 else float(B.ConvexHull(Y).volume)
    else:
        nu = 1.0
    a = params.a
    if s < 0:
        if n == 1 and not -0.5 < p_from_s(s, 1) < 0:
            raise DomainError("s must lie in (-1, 0)")
        if s <= -1:
            raise DomainError("s <= -1: only the trivial bound 0 holds")
        if params.R is not None and abs(a * (params.R - r1) - 1.0) > 1e-12:
            raise InvalidArgumentError(
                f"equality needs a = 1/(R - r1); got a={a!r}, R={params.R!r}, r1={r1!r}")
        R = params.apex
    w = params.base_profile
    C = 1.0 / (_profile_integral(s, a) * (nu if w is None else 1.0))
    e = 0.0 if spec.p_infinite or p == 0 else 1.0 / p

    def split(X):
        r = X @ u
        return r, X - np.outer(r, v)

    if s > 0:
        apex = params.r0 * v
        K = B.ConvexBody(np.vstack([L, apex]))

        def psi(X):
            r, Z = split(X)
            lam = 1.0 + a * (r - r1)
            ok = lam > 0
            out = np.zeros(len(X))
            lam_ok = lam[ok]
            base = 1.0 if w is None else np.array([w(z) for z in Z[ok] / lam_ok[:, None]])
            out[ok] = C * lam_ok ** e * base
            return out
        env, axis = None, None
    elif s == 0:
        K = B.ConvexBody(L, [-v])

        def psi(X):
            r, Z = split(X)
            base = 1.0 if w is None else np.array([w(z) for z in Z])
            return C * np.exp(a * (r - r1)) * base
        axis = tuple(u)
        # marginal C nu e^{a(t - r1)} for t <= r1
        env = TailEnvelope("exponential", C * (nu if w is None else 1.0) * math.exp(-a * r1), a)
    else:
        b = R * v
        K = B.ConvexBody(L, L - b)

        def psi(X):
            r, Z = split(X)
            m = (R - r) / (R - r1)
            ok = m > 0
            out = np.zeros(len(X))
            mk = m[ok]
            base = 1.0 if w is None else np.array([w(z) for z in Z[ok] / mk[:, None]])
            out[ok] = C * mk ** e * base
            return out
        axis = tuple(u)
        q = 1.0 / s - 1.0  # the marginal behaves like m^q
        start = max(2.0 * abs(R), 1.0)
        env = TailEnvelope("power", C * (nu if w is None else 1.0) * (2.0 * (R - r1)) ** (-q),
                           -q, start)
    kind = "uniform" if spec.p_infinite and w is None else "custom"
    dens = B.BodyDensity(kind, psi if kind == "custom" else None, name=f"extremal(s={s:g})",
                         params={"s": s, "n": n, "a": a, "r1": r1})
    return B.WeightedBody(K, dens, env, axis, body_id=f"extremal_s{s:g}_n{n}",
                          metadata={"s": s, "n": n, "u": tuple(u), "v": tuple(v), "r1": r1,
                                    "a": a, "nu": nu, "regime": spec.regime})


# -- the s <= -1 family --------------------------------------------------------------


@dataclass(frozen=True)
class CounterexampleClosedForms:
    p: float
    k: float
    mass: float
    g: float
    left_mass: float


def _one_minus_kpow(c, logk):
    # 1 - k^{-c} without cancellation
    return -math.expm1(-c * logk)


def counterexample_closed_forms(p, k) -> CounterexampleClosedForms:
    """Mass of (1-t)^{1/p} on [0, 1-1/k], its barycenter and the normalised
    mass left of the barycenter, in closed form."""
    p, k = _check_counterexample(p, k)
    logk = math.log(k)
    c1 = (p + 1.0) / p
    c2 = (2.0 * p + 1.0) / p
    B = _one_minus_kpow(c1, logk)
    mass = p / (p + 1.0) * B
    # (1 - k^{-c2}) / (2p + 1), continuous through p = -1/2 where it equals log(k)/(-p)...
    x = c2 * logk
    ratio = (-math.expm1(-x) / x if x != 0.0 else 1.0) * logk / p
    one_minus_g = (p + 1.0) * ratio / B
    g = 1.0 - one_minus_g
    left = _one_minus_kpow(c1, -math.log(one_minus_g)) / B
    return CounterexampleClosedForms(p, k, mass, g, left)


def _check_counterexample(p, k):
    p = float(p)
    if not -1.0 < p <= -0.5:
        raise DomainError(f"p={p!r} outside (-1, -1/2]")
    if not k >= 2:
        raise DomainError(f"k={k!r} must be at least 2")
    return p, float(k)


def counterexample_measure(p, k):
    """The normalised density (1-t)^{1/p} 1[0, 1-1/k] / mass and its closed forms."""
    cf = counterexample_closed_forms(p, k)
    p, k = cf.p, cf.k
    e = 1.0 / p
    m = cf.mass
    end = 1.0 - 1.0 / k
    # grade the panels towards the singular end 1 - 1/k
    bps = tuple(1.0 - k ** (-j / 24.0) for j in range(1, 24))
    mu = Density1D(lambda t: (1.0 - t) ** e / m, (0.0, end), 1.0, breakpoints=bps,
                   name=f"counterexample(p={p:g},k={k:g})")
    return mu, cf


@dataclass(frozen=True)
class CounterexampleRow:
    k: float
    g: float
    left_mass: float
    closed_form_left: float
    closed_form_g: float

    @property
    def closed_form_delta(self):
        return max(abs(self.left_mass - self.closed_form_left), abs(self.g - self.closed_form_g))


@dataclass(frozen=True)
class NoBoundReport:
    p: float
    rows: tuple
    threshold: float | None

    @property
    def values(self):
        return [r.left_mass for r in self.rows]

    @property
    def decreasing(self):
        v = self.values
        return all(b < a for a, b in zip(v, v[1:]))

    @property
    def below_threshold(self):
        return None if self.threshold is None else self.values[-1] < self.threshold

    @property
    def ok(self):
        return self.decreasing and self.below_threshold is not False


def counterexample_row(p, k):
    """Quadrature values for one member of the family (authoritative), with
    the closed forms alongside."""
    mu, cf = counterexample_measure(p, k)
    g = barycenter(mu)
    return CounterexampleRow(cf.k, g, cdf(mu, g), cf.left_mass, cf.g)


def verify_no_bound(p, ks, threshold=None):
    """Tabulate the left mass along ``ks``; see :class:`NoBoundReport` flags."""
    rows = tuple(counterexample_row(p, k) for k in ks)
    return NoBoundReport(float(p), rows, threshold)
