"""Weighted convex bodies in low dimension.

A body is given by vertices plus recession rays.  Three integration routes
are available and chosen per call:

``exact``
    uniform density on a bounded polytope: polygon clipping and shoelace
    formulas in the plane, convex-hull volumes and simplex decompositions
    in higher dimension;
``quadrature``
    planar bodies with any density: nested adaptive quadrature over chords
    (the chord integral is closed-form for the uniform and Gaussian cases);
``mc``
    importance-sampled Monte Carlo with batch-means standard errors and a
    recorded seed.
"""

from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog, minimize
from scipy.spatial import ConvexHull, Delaunay, HalfspaceIntersection, QhullError

from . import gaussian as G
from ._numerics import AFFINITY_TOL, EQUALITY_GAP_TOL, affinity_score, chebyshev_grid, quad
from .errors import DomainError, InvalidArgumentError, NumericFailure
from .measure1d import Density1D, TailEnvelope, cdf, quantile
from .reports import CutReport, equality_verdict
from .sconcave import classic_grunbaum_bound, s_grunbaum_bound

DEFAULT_MC_SAMPLES = 10_000_000
MC_BATCHES = 20
MC_CHUNK = 250_000
PROFILE_POINTS = 64
PROFILE_LEVEL = 1e-6
MAX_RAYS = 12


def worker_count():
    """Worker threads for Monte-Carlo batches (``GRUNBAUM_LAB_THREADS`` caps it)."""
    cap = os.environ.get("GRUNBAUM_LAB_THREADS")
    n = os.cpu_count() or 1
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            raise InvalidArgumentError(f"GRUNBAUM_LAB_THREADS={cap!r} is not an integer") from None
    return n


def _unit(u, n=None):
    u = np.asarray(u, dtype=float).ravel()
    if n is not None and u.shape != (n,):
        raise InvalidArgumentError(f"direction has dimension {u.size}, body has {n}")
    nrm = float(np.linalg.norm(u))
    if not np.all(np.isfinite(u)) or nrm == 0.0:
        raise InvalidArgumentError("direction must be a nonzero finite vector")
    return u / nrm


def orthonormal_complement(u):
    """Columns spanning u-perp (an n x (n-1) matrix)."""
    u = _unit(u)
    n = u.size
    q, _ = np.linalg.qr(np.column_stack([u, np.eye(n)]))
    Q = q[:, 1:n]
    # fix the sign so that n = 2 gives the rotation (-u2, u1)
    if n == 2 and Q[:, 0] @ np.array([-u[1], u[0]]) < 0:
        Q = -Q
    return Q


class Estimate(float):
    """A float carrying its standard error and provenance."""

    def __new__(cls, value, se=0.0, method="exact", samples=None, seed=None):
        obj = super().__new__(cls, value)
        obj.se = float(se)
        obj.method = method
        obj.samples = samples
        obj.seed = seed
        return obj


@dataclass(frozen=True)
class PointEstimate:
    point: np.ndarray
    se: np.ndarray | None = None
    method: str = "exact"
    samples: int | None = None
    seed: int | None = None


# -- bodies ---------------------------------------------------------------------------


class ConvexBody:
    """conv(vertices) + pos(rays), full-dimensional.

    Rays need not span a pointed cone (a half-plane uses three rays); the
    H-representation is recovered from a truncated hull by keeping the
    facets that every ray respects.
    """

    def __init__(self, vertices, rays=()):
        V = np.atleast_2d(np.asarray(vertices, dtype=float))
        if V.ndim != 2 or V.shape[0] == 0 or not np.all(np.isfinite(V)):
            raise InvalidArgumentError("vertices must be a nonempty finite point list")
        n = V.shape[1]
        R = np.asarray(rays, dtype=float).reshape(-1, n) if len(rays) else np.zeros((0, n))
        if not np.all(np.isfinite(R)):
            raise InvalidArgumentError("rays must be finite")
        norms = np.linalg.norm(R, axis=1)
        if np.any(norms == 0):
            raise InvalidArgumentError("zero recession ray")
        if len(R) > MAX_RAYS:
            raise InvalidArgumentError(f"at most {MAX_RAYS} rays are supported")
        R = R / norms[:, None]
        self.dim = n
        self.rays = R
        span = np.vstack([V[1:] - V[0], R])
        self.affine_dim = int(np.linalg.matrix_rank(span, tol=1e-12 * (1 + np.abs(V).max())))
        if self.affine_dim < n:
            raise InvalidArgumentError(
                f"body is degenerate: affine dimension {self.affine_dim} < {n}")
        self._scale = 1.0 + float(np.max(np.linalg.norm(V - V.mean(axis=0), axis=1)))
        self._build(V, R)

    def _build(self, V, R):
        n = self.dim
        if n == 1:
            lo, hi = float(V.min()), float(V.max())
            if np.any(R[:, 0] < 0):
                lo = -math.inf
            if np.any(R[:, 0] > 0):
                hi = math.inf
            rows, rhs = [], []
            if math.isfinite(hi):
                rows.append([1.0]); rhs.append(hi)
            if math.isfinite(lo):
                rows.append([-1.0]); rhs.append(-lo)
            self.A = np.array(rows).reshape(-1, 1)
            self.b = np.array(rhs)
            self.vertices = np.array([[v] for v in (lo, hi) if math.isfinite(v)])
            self._hull_points = V
            return
        H = 10.0 * self._scale
        if len(R):
            sums = [np.zeros(n)] + [R[list(c)].sum(axis=0)
                                    for k in range(1, len(R) + 1)
                                    for c in itertools.combinations(range(len(R)), k)]
            pts = (V[:, None, :] + H * np.array(sums)[None, :, :]).reshape(-1, n)
        else:
            pts = V
        hull = ConvexHull(pts)
        A = hull.equations[:, :-1]
        b = -hull.equations[:, -1]
        if len(R):
            keep = np.all(A @ R.T <= 1e-9, axis=1)
            A, b = A[keep], b[keep]
        # qhull splits facets into simplices; merge duplicate rows
        key = np.round(np.column_stack([A, b / self._scale]), 10)
        _, idx = np.unique(key, axis=0, return_index=True)
        idx = np.sort(idx)
        self.A, self.b = A[idx], b[idx]
        self._hull_points = pts
        # unbounded bodies keep their input points (only max/min over them are used)
        self.vertices = pts[hull.vertices] if not len(R) else V

    @property
    def bounded(self):
        return len(self.rays) == 0

    @property
    def scale(self):
        return self._scale

    def contains(self, X, tol=None):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        tol = 1e-12 * self._scale if tol is None else tol
        if len(self.A) == 0:
            return np.ones(len(X), dtype=bool)
        return np.all(X @ self.A.T <= self.b + tol, axis=1)

    def support_range(self, u):
        """(min, max) of <x, u> over the body."""
        u = np.asarray(u, dtype=float)
        proj = self.vertices @ u
        lo, hi = float(proj.min()), float(proj.max())
        if len(self.rays):
            ru = self.rays @ u
            if np.any(ru > 1e-12):
                hi = math.inf
            if np.any(ru < -1e-12):
                lo = -math.inf
        return lo, hi

    def polygon(self):
        """Counter-clockwise vertex cycle of a bounded planar body."""
        if self.dim != 2 or not self.bounded:
            raise InvalidArgumentError("polygon() needs a bounded planar body")
        P = self.vertices
        c = P.mean(axis=0)
        order = np.argsort(np.arctan2(P[:, 1] - c[1], P[:, 0] - c[0]))
        return P[order]

    def to_json(self):
        return {"vertices": self.vertices.tolist(), "rays": self.rays.tolist()}


@dataclass(frozen=True)
class BodyDensity:
    """A density on R^n: ``uniform`` (Lebesgue), ``gaussian`` (standard
    gamma_n) or ``custom`` with a vectorised ``evaluate`` (N x n -> N)."""

    kind: str = "uniform"
    evaluate: object = None
    name: str = ""
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("uniform", "gaussian", "custom"):
            raise InvalidArgumentError(f"unknown density kind {self.kind!r}")
        if self.kind == "custom" and self.evaluate is None:
            raise InvalidArgumentError("custom density needs an evaluator")

    def __call__(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.kind == "uniform":
            return np.ones(len(X))
        if self.kind == "gaussian":
            n = X.shape[1]
            return np.exp(-0.5 * np.einsum("ij,ij->i", X, X)) / (2 * math.pi) ** (n / 2)
        out = np.asarray(self.evaluate(X), dtype=float).reshape(-1)
        if out.shape != (len(X),):
            out = np.array([float(self.evaluate(x)) for x in X])
        return out

    def at(self, x):
        return float(self(np.asarray(x, dtype=float)[None, :])[0])


UNIFORM = BodyDensity("uniform")
GAUSSIAN = BodyDensity("gaussian")


@dataclass(frozen=True, eq=False)
class WeightedBody:
    """A convex body with a density.

    Unbounded bodies with a custom density need ``tail_envelope``: a bound
    on the marginal density along ``axis`` (a unit vector every recession
    ray points against).  It certifies finite mass and shapes the
    Monte-Carlo proposal.
    """

    body: ConvexBody
    density: BodyDensity = UNIFORM
    tail_envelope: TailEnvelope | None = None
    axis: tuple | None = None
    body_id: str = ""
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        K = self.body
        if K.bounded:
            return
        if self.density.kind == "uniform":
            raise DomainError("uniform density on an unbounded body has infinite mass")
        if self.density.kind == "custom":
            if self.tail_envelope is None or self.axis is None:
                raise DomainError("unbounded body with a custom density needs a tail envelope "
                                  "and its axis")
            e = _unit(self.axis, K.dim)
            if np.any(K.rays @ e >= -1e-12):
                raise DomainError("every recession ray must point against the envelope axis")
            if self.tail_envelope.kind == "power" and self.tail_envelope.rate <= 2:
                raise DomainError("power envelope must decay faster than r^-2 "
                                  "(finite first moment)")

    @property
    def dim(self):
        return self.body.dim


def weighted_body(vertices, rays=(), density="uniform", **kw):
    d = {"uniform": UNIFORM, "gaussian": GAUSSIAN}.get(density, density)
    return WeightedBody(ConvexBody(vertices, rays), d, **kw)


# -- exact uniform kernel --------------------------------------------------------------


def clip_polygon(P, u, c):
    """Sutherland-Hodgman clip of a polygon to {<x, u> <= c}."""
    out = []
    m = len(P)
    for i in range(m):
        a, b = P[i], P[(i + 1) % m]
        fa, fb = a @ u - c, b @ u - c
        if fa <= 0:
            out.append(a)
        if (fa < 0 < fb) or (fb < 0 < fa):
            lam = fa / (fa - fb)
            out.append(a + lam * (b - a))
    return np.array(out).reshape(-1, 2)


def polygon_area(P):
    if len(P) < 3:
        return 0.0
    x, y = P[:, 0], P[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def polygon_centroid(P):
    x, y = P[:, 0], P[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    A = 0.5 * cross.sum()
    return np.array([((x + xn) * cross).sum(), ((y + yn) * cross).sum()]) / (6.0 * A)


def _hull_volume(P):
    n = P.shape[1]
    if n == 1:
        return float(P.max() - P.min()) if len(P) else 0.0
    if len(P) < n + 1:
        return 0.0
    try:
        return float(ConvexHull(P).volume)
    except (QhullError, ValueError):
        return 0.0


def _clipped_points(V, u, c):
    """Vertices of conv(V) cut to {<x,u> <= c}, up to interior extras."""
    proj = V @ u
    keep = V[proj <= c]
    lo, hi = np.nonzero(proj < c)[0], np.nonzero(proj > c)[0]
    if len(lo) and len(hi):
        i, j = np.meshgrid(lo, hi, indexing="ij")
        i, j = i.ravel(), j.ravel()
        lam = ((c - proj[i]) / (proj[j] - proj[i]))[:, None]
        cut = V[i] + lam * (V[j] - V[i])
        keep = np.vstack([keep, cut])
    return keep


def _section_points(V, u, t):
    proj = V @ u
    on = V[proj == t]
    lo, hi = np.nonzero(proj < t)[0], np.nonzero(proj > t)[0]
    if len(lo) and len(hi):
        i, j = np.meshgrid(lo, hi, indexing="ij")
        i, j = i.ravel(), j.ravel()
        lam = ((t - proj[i]) / (proj[j] - proj[i]))[:, None]
        on = np.vstack([on, V[i] + lam * (V[j] - V[i])])
    return on


def _uniform_volume(K):
    if K.dim == 2:
        return polygon_area(K.polygon())
    return _hull_volume(K.vertices)


def _uniform_cut(K, u, c):
    if K.dim == 2:
        return polygon_area(clip_polygon(K.polygon(), u, c))
    lo, hi = K.support_range(u)
    if c <= lo:
        return 0.0
    if c >= hi:
        return _uniform_volume(K)
    return _hull_volume(_clipped_points(K.vertices, u, c))


def _uniform_centroid(K):
    if K.dim == 1:
        return np.array([0.5 * (K.vertices[0, 0] + K.vertices[-1, 0])])
    if K.dim == 2:
        return polygon_centroid(K.polygon())
    tri = Delaunay(K.vertices)
    S = K.vertices[tri.simplices]
    B = S[:, 1:, :] - S[:, :1, :]
    vol = np.abs(np.linalg.det(B))
    return (vol[:, None] * S.mean(axis=1)).sum(axis=0) / vol.sum()


def section_volume(K, u, t):
    """(n-1)-volume of K intersected with {<x,u> = t}."""
    u = _unit(u, K.dim)
    n = K.dim
    if n == 1:
        return 1.0 if K.contains([[t * u[0]]])[0] else 0.0
    Q = orthonormal_complement(u)
    if K.bounded:
        pts = _section_points(K.vertices, u, t)
        return _hull_volume(pts @ Q)
    # H-representation route for unbounded bodies
    A2 = K.A @ Q
    b2 = K.b - t * (K.A @ u)
    if n == 2:
        lo, hi = _interval(A2[:, 0], b2)
        return max(hi - lo, 0.0)
    norms = np.linalg.norm(A2, axis=1)
    res = linprog(np.r_[np.zeros(n - 1), -1.0], A_ub=np.column_stack([A2, norms]), b_ub=b2,
                  bounds=[(None, None)] * (n - 1) + [(0, None)], method="highs")
    if res.status == 3:
        raise DomainError("unbounded section")
    if res.status != 0 or res.x[-1] <= 1e-12 * K.scale:
        return 0.0
    hs = HalfspaceIntersection(np.column_stack([A2, -b2]), res.x[:-1])
    return _hull_volume(hs.intersections)


def _interval(a, rhs, eps=1e-14):
    """{z : a z <= rhs} for a row vector of coefficients."""
    lo, hi = -math.inf, math.inf
    pos, neg = a > eps, a < -eps
    zero = ~(pos | neg)
    if np.any(rhs[zero] < -eps):
        return 0.0, 0.0
    if np.any(pos):
        hi = float(np.min(rhs[pos] / a[pos]))
    if np.any(neg):
        lo = float(np.max(rhs[neg] / a[neg]))
    if hi <= lo:
        return 0.0, 0.0
    return lo, hi


# -- planar / linear quadrature kernel --------------------------------------------------


class _Strip:
    """Chord integrals f_u(t) = int over K cap {<x,u> = t} of psi."""

    def __init__(self, W, u):
        self.W = W
        K = W.body
        self.n = K.dim
        if self.n > 2:
            raise InvalidArgumentError("quadrature route is planar (n <= 2)")
        self.u = _unit(u, self.n)
        if self.n == 2:
            self.w = orthonormal_complement(self.u)[:, 0]
            self.au = K.A @ self.u
            self.aw = K.A @ self.w
        self.range = K.support_range(self.u)
        proj = K.vertices @ self.u
        self.points = tuple(sorted(set(float(p) for p in proj)))

    def chord(self, t):
        K = self.W.body
        if self.n == 1:
            x = t * self.u[0]
            return (0.0, 1.0) if K.contains([[x]])[0] else (0.0, 0.0)
        return _interval(self.aw, K.b - t * self.au)

    def __call__(self, t):
        lo, hi = self.chord(t)
        if hi <= lo:
            return 0.0
        d = self.W.density
        if self.n == 1:
            return d.at([t * self.u[0]])
        if d.kind == "uniform":
            return hi - lo
        if d.kind == "gaussian":
            if lo + hi > 0:
                diff = G.std_normal_cdf(-lo) - G.std_normal_cdf(-hi)
            else:
                diff = G.std_normal_cdf(hi) - G.std_normal_cdf(lo)
            return G.std_normal_pdf(t) * diff
        base = t * self.u
        f = lambda z: d.at(base + z * self.w)
        return quad(f, lo, hi, fail_rel=1e-9, fail_abs=1e-15)[0]

    def integral(self, lo, hi, order=0, fail_abs=1e-13):
        a, b = max(lo, self.range[0]), min(hi, self.range[1])
        if not a < b:
            return 0.0
        f = self if order == 0 else (lambda t: t ** order * self(t))
        return quad(f, a, b, self.points, fail_rel=1e-9, fail_abs=fail_abs)[0]

    def envelope(self):
        d = self.W.density
        if d.kind == "gaussian":
            return TailEnvelope("exponential", G.INV_SQRT2PI * math.exp(0.5), 1.0)
        if d.kind == "custom" and self.W.axis is not None and \
                np.allclose(_unit(self.W.axis), self.u, atol=1e-12):
            return self.W.tail_envelope
        return None

    def marginal(self):
        env = self.envelope()
        lo, hi = self.range
        if (math.isinf(lo) or math.isinf(hi)) and env is None:
            raise InvalidArgumentError("no tail envelope for this direction")
        return Density1D(self, (lo, hi), None, env, breakpoints=self.points, name="marginal")


# -- Monte Carlo kernel ---------------------------------------------------------------------


class _Proposal:
    """Importance proposal covering the body; ``draw`` returns points and weights
    psi * 1_K / q."""

    def __init__(self, W):
        self.W = W
        K = W.body
        n = K.dim
        d = W.density
        if d.kind == "gaussian":
            self.kind = "gaussian"
        elif K.bounded:
            self.kind = "box"
            self.lo = K.vertices.min(axis=0)
            self.hi = K.vertices.max(axis=0)
            self.vol = float(np.prod(self.hi - self.lo))
        else:
            self.kind = "axis"
            e = _unit(W.axis, n)
            self.e = e
            self.Q = orthonormal_complement(e) if n > 1 else np.zeros((1, 0))
            V = K.vertices
            self.top = float((V @ e).max())
            depth = self.top - V @ e
            Y = V @ self.Q
            self.cy = 0.5 * (Y.min(axis=0) + Y.max(axis=0)) if n > 1 else np.zeros(0)
            self.Y0 = float(np.max(np.abs(Y - self.cy))) + 1e-12 * K.scale if n > 1 else 0.0
            re = -(K.rays @ e)
            self.kappa = float(np.max(np.abs(K.rays @ self.Q).max(axis=1) / re)) if n > 1 else 0.0
            env = W.tail_envelope
            if env.kind == "exponential":
                self.tail = ("exponential", 0.5 * env.rate)
                width = 1.0 / env.rate
            else:
                self.tail = ("lomax", max(env.rate - 2.0, 0.25))
                width = 1.0
            self.D0 = float(depth.max()) + width

    def draw(self, rng, m):
        W = self.W
        n = W.dim
        if self.kind == "gaussian":
            X = rng.standard_normal((m, n))
            return X, W.body.contains(X).astype(float)
        if self.kind == "box":
            X = self.lo + (self.hi - self.lo) * rng.random((m, n))
            w = np.where(W.body.contains(X), W.density(X), 0.0) * self.vol
            return X, w
        half = rng.random(m) < 0.5
        D = np.empty(m)
        D[half] = self.D0 * rng.random(int(half.sum()))
        k = m - int(half.sum())
        kind, par = self.tail
        if kind == "exponential":
            D[~half] = rng.exponential(1.0 / par, k)
            tail_pdf = lambda d: par * np.exp(-par * d)
        else:
            lam = self.D0
            D[~half] = lam * (rng.random(k) ** (-1.0 / par) - 1.0)
            tail_pdf = lambda d: par / lam * (1.0 + d / lam) ** (-par - 1.0)
        q = 0.5 * (D <= self.D0) / self.D0 + 0.5 * tail_pdf(D)
        halfw = self.Y0 + self.kappa * D
        Y = self.cy + (2.0 * rng.random((m, n - 1)) - 1.0) * halfw[:, None]
        X = (self.top - D)[:, None] * self.e + Y @ self.Q.T
        q = q / (2.0 * halfw) ** (n - 1)
        inside = W.body.contains(X)
        w = np.zeros(m)
        w[inside] = W.density(X[inside]) / q[inside]
        return X, w


def _batch_rngs(seed, batches):
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(batches)]


def _mc_map(W, samples, seed, fn):
    """Apply ``fn(X, w)`` (returning an array of sums) over every batch; returns a
    (batches x k) array of per-batch sums and the per-batch sample count."""
    samples = int(samples)
    if samples < MC_BATCHES * 10:
        raise InvalidArgumentError(f"need at least {MC_BATCHES * 10} Monte-Carlo samples")
    prop = _Proposal(W)
    per = samples // MC_BATCHES

    def run(rng):
        acc = None
        left = per
        while left > 0:
            m = min(left, MC_CHUNK)
            X, w = prop.draw(rng, m)
            s = np.asarray(fn(X, w), dtype=float)
            acc = s if acc is None else acc + s
            left -= m
        return acc

    rngs = _batch_rngs(seed, MC_BATCHES)
    with ThreadPoolExecutor(max_workers=min(worker_count(), MC_BATCHES)) as ex:
        out = list(ex.map(run, rngs))
    return np.array(out), per


def _batch_se(values):
    values = np.asarray(values, dtype=float)
    return float(np.std(values, ddof=1) / math.sqrt(len(values)))


# -- public integrals ------------------------------------------------------------------


def default_method(W):
    if W.density.kind == "uniform" and W.body.bounded:
        return "exact"
    if W.dim <= 2:
        return "quadrature"
    return "mc"


def _method(W, method):
    method = default_method(W) if method is None else method
    if method not in ("exact", "quadrature", "mc"):
        raise InvalidArgumentError(f"unknown method {method!r}")
    if method == "exact" and not (W.density.kind == "uniform" and W.body.bounded):
        raise InvalidArgumentError("exact route needs a uniform density on a bounded body")
    if method == "quadrature" and W.dim > 2:
        raise InvalidArgumentError("quadrature route is planar (n <= 2)")
    return method


def total_mass(W, method=None, *, samples=DEFAULT_MC_SAMPLES, seed=0):
    method = _method(W, method)
    if method == "exact":
        if W.dim == 1:
            return Estimate(float(W.body.vertices[-1, 0] - W.body.vertices[0, 0]))
        return Estimate(_uniform_volume(W.body))
    if method == "quadrature":
        s = _Strip(W, np.eye(W.dim)[0])
        return Estimate(s.integral(-math.inf, math.inf), method="quadrature")
    sums, per = _mc_map(W, samples, seed, lambda X, w: [w.sum()])
    b = sums[:, 0] / per
    return Estimate(b.mean(), _batch_se(b), "mc", per * MC_BATCHES, seed)


def weighted_barycenter(W, method=None, *, samples=DEFAULT_MC_SAMPLES, seed=0):
    method = _method(W, method)
    n = W.dim
    if method == "exact":
        return PointEstimate(_uniform_centroid(W.body))
    if method == "quadrature":
        g = np.empty(n)
        for i in range(n):
            s = _Strip(W, np.eye(n)[i])
            m = s.integral(-math.inf, math.inf)
            # a first moment may vanish by symmetry: judge its error against the mass
            g[i] = s.integral(-math.inf, math.inf, 1, 1e-10 * m * W.body.scale) / m
        return PointEstimate(g, method="quadrature")
    sums, per = _mc_map(W, samples, seed, lambda X, w: np.r_[w.sum(), w @ X])
    tot = sums.sum(axis=0)
    g = tot[1:] / tot[0]
    gb = sums[:, 1:] / sums[:, :1]
    se = np.array([_batch_se(gb[:, i]) for i in range(n)])
    return PointEstimate(g, se, "mc", per * MC_BATCHES, seed)


def cut_mass(W, u, c, method=None, *, samples=DEFAULT_MC_SAMPLES, seed=0):
    """mu({x in K : <x, u> <= c})."""
    method = _method(W, method)
    u = _unit(u, W.dim)
    if method == "exact":
        if W.dim == 1:
            lo, hi = W.body.support_range(u)
            return Estimate(min(max(c - lo, 0.0), hi - lo))
        return Estimate(_uniform_cut(W.body, u, float(c)))
    if method == "quadrature":
        return Estimate(_Strip(W, u).integral(-math.inf, float(c)), method="quadrature")
    cs = np.atleast_1d(np.asarray(c, dtype=float))
    sums, per = _mc_map(W, samples, seed,
                        lambda X, w: [(w * (X @ u <= ci)).sum() for ci in cs])
    b = sums / per
    ests = [Estimate(b[:, i].mean(), _batch_se(b[:, i]), "mc", per * MC_BATCHES, seed)
            for i in range(len(cs))]
    return ests[0] if np.ndim(c) == 0 else ests


def cut_profile_mc(W, u, offsets, *, samples=DEFAULT_MC_SAMPLES, seed=0):
    """Cut fractions mu(K_r)/mu(K) at several offsets from one sample, with SEs."""
    u = _unit(u, W.dim)
    cs = np.asarray(offsets, dtype=float)
    sums, per = _mc_map(W, samples, seed,
                        lambda X, w: np.r_[w.sum(), [(w * (X @ u <= ci)).sum() for ci in cs]])
    tot = sums.sum(axis=0)
    frac = tot[1:] / tot[0]
    fb = sums[:, 1:] / sums[:, :1]
    return [Estimate(frac[i], _batch_se(fb[:, i]), "mc", per * MC_BATCHES, seed)
            for i in range(len(cs))]


def marginal_density(W, u):
    """The density of <X, u> under mu restricted to K (planar or linear bodies,
    or uniform polytopes in any dimension)."""
    u = _unit(u, W.dim)
    if W.dim <= 2:
        return _Strip(W, u).marginal()
    if W.density.kind != "uniform" or not W.body.bounded:
        raise InvalidArgumentError("marginals in dimension >= 3 need a uniform polytope")
    K = W.body
    lo, hi = K.support_range(u)
    pts = tuple(sorted(set(float(p) for p in K.vertices @ u)))
    return Density1D(lambda t: section_volume(K, u, t), (lo, hi), None, breakpoints=pts,
                     name="marginal", table_cells=64)


# -- skew slices ------------------------------------------------------------------------------


def skew_slice_mass(W, u, v, r, *, reference=None, checks=32, seed=0):
    """<v,u> int_{-inf}^{r/<v,u>} A(t) int_{z + t v in K} w(z) dz dt for a density
    that factorises as psi(z + t v) = A(t) w(z), z in u-perp."""
    K = W.body
    n = K.dim
    u = _unit(u, n)
    v = np.asarray(v, dtype=float).ravel()
    vu = float(v @ u)
    if not vu > 0:
        raise InvalidArgumentError("need <v, u> > 0")
    Q = orthonormal_complement(u) if n > 1 else np.zeros((1, 0))
    psi = W.density
    x0 = K.vertices.mean(axis=0) if reference is None else np.asarray(reference, dtype=float)
    t0 = float(x0 @ u) / vu
    z0 = x0 - t0 * v
    p0 = psi.at(x0)
    if not p0 > 0:
        raise InvalidArgumentError("density vanishes at the reference point")
    A = lambda t: psi.at(z0 + t * v)
    wz = lambda z: psi.at(z + t0 * v) / p0

    rng = np.random.default_rng(seed)
    lo, hi = K.support_range(u)
    hi_t = hi / vu if math.isfinite(hi) else t0 + 1.0
    lo_t = lo / vu if math.isfinite(lo) else t0 - 3.0
    zs = (K.vertices - np.outer(K.vertices @ u / vu, v)) @ Q if n > 1 else np.zeros((1, 0))
    constant_w = True
    for _ in range(checks):
        t = rng.uniform(lo_t, hi_t)
        y = rng.uniform(zs.min(axis=0), zs.max(axis=0)) if n > 1 else np.zeros(0)
        z = Q @ y if n > 1 else np.zeros(n)
        lhs = psi.at(z + t * v)
        rhs = A(t) * wz(z)
        if abs(lhs - rhs) > 1e-9 * max(abs(lhs), abs(rhs), 1e-300):
            raise InvalidArgumentError(
                f"density does not factorise along (u, v): {lhs:g} vs {rhs:g}")
        constant_w &= abs(wz(z) - 1.0) <= 1e-12

    def slice_integral(t):
        rho = t * vu
        if n == 1:
            return 1.0 if K.contains([[rho * u[0]]])[0] else 0.0
        if n == 2:
            w2 = Q[:, 0]
            a, b = _interval(K.A @ w2, K.b - t * (K.A @ v))
            if not b > a:
                return 0.0
            return quad(lambda y: wz(y * w2), a, b, fail_rel=1e-9)[0]
        if not constant_w:
            raise InvalidArgumentError("n >= 3 slices need a constant transverse factor")
        return section_volume(K, u, rho)

    f = lambda t: A(t) * slice_integral(t)
    pts = sorted(set(float(p) / vu for p in K.vertices @ u))
    upper = float(r) / vu
    lower = lo / vu if math.isfinite(lo) else -math.inf
    if upper <= lower:
        return 0.0
    return vu * quad(f, lower, upper, pts, fail_rel=1e-9)[0]


# -- verification -----------------------------------------------------------------------------


@dataclass(frozen=True)
class MeasureClass:
    """``lebesgue``, ``gaussian`` or ``sconcave`` with parameter ``s``."""

    kind: str
    s: float | None = None

    @classmethod
    def parse(cls, spec):
        if isinstance(spec, MeasureClass):
            return spec
        if isinstance(spec, tuple):
            return cls(spec[0], float(spec[1]) if len(spec) > 1 else None)
        text = str(spec).strip().lower()
        for sep in ("(", ":", "="):
            if sep in text:
                k, _, rest = text.partition(sep)
                return cls(k.strip(), float(rest.rstrip(")")))
        if text not in ("lebesgue", "gaussian"):
            raise InvalidArgumentError(f"unknown measure class {spec!r}")
        return cls(text)

    def __post_init__(self):
        if self.kind not in ("lebesgue", "gaussian", "sconcave"):
            raise InvalidArgumentError(f"unknown measure class {self.kind!r}")
        if self.kind == "sconcave" and self.s is None:
            raise InvalidArgumentError("sconcave class needs s")

    @property
    def label(self):
        return f"sconcave({self.s:g})" if self.kind == "sconcave" else self.kind

    def bound(self, n, mass):
        if self.kind == "lebesgue":
            return classic_grunbaum_bound(n)
        if self.kind == "gaussian":
            return G.ehrhard_grunbaum_bound(min(float(mass), 1.0))
        return s_grunbaum_bound(self.s)

    def transform(self, frac, mass, n):
        """The map that turns an equality-case cut profile into an affine one."""
        if self.kind == "lebesgue":
            return frac ** (1.0 / n)
        if self.kind == "gaussian":
            return G.std_normal_quantile(frac * mass)
        if self.s == 0:
            return math.log(frac)
        return frac ** self.s


def _profile_affinity(W, u, cls, method, total):
    """Affinity of the transformed cut profile on an interior window."""
    n = W.dim
    if method == "exact":
        lo, hi = W.body.support_range(u)
        x = chebyshev_grid(lo, hi, PROFILE_POINTS)
        frac = np.array([_uniform_cut(W.body, u, t) for t in x]) / total
    else:
        try:
            mu = marginal_density(W, u)
        except InvalidArgumentError:
            return None
        m = mu.total_mass
        left = quantile(mu, PROFILE_LEVEL * m)
        right = quantile(mu, (1 - PROFILE_LEVEL) * m)
        x = chebyshev_grid(left, right, PROFILE_POINTS)
        frac = np.array([cdf(mu, t) for t in x]) / m
    vals = np.array([cls.transform(f, total, n) for f in frac])
    return affinity_score(x, vals)


def grunbaum_verify(W, u, cls, *, method=None, samples=DEFAULT_MC_SAMPLES, seed=0,
                    tol=EQUALITY_GAP_TOL):
    """Cut at the barycenter along ``u`` and compare with the class bound.

    For the Gaussian class ``measured`` and ``bound`` are absolute masses
    (the bound depends on mu(K)); otherwise they are fractions of mu(K).
    """
    cls = MeasureClass.parse(cls)
    method = _method(W, method)
    u = _unit(u, W.dim)
    n = W.dim
    if method == "mc":
        return _verify_mc(W, u, cls, samples, seed)
    total = float(total_mass(W, method))
    g = weighted_barycenter(W, method).point
    c = float(g @ u)
    lower = float(cut_mass(W, u, c, method))
    if cls.kind == "gaussian":
        measured, bound = lower, cls.bound(n, total)
    else:
        measured, bound = lower / total, cls.bound(n, total)
    aff = _profile_affinity(W, u, cls, method, total)
    eq = equality_verdict(measured - bound, aff, max(tol, EQUALITY_GAP_TOL), AFFINITY_TOL)
    rep = CutReport(measured, bound, c, tuple(map(float, u)), total, eq, aff, method,
                    1e-10 if method == "quadrature" else 1e-12, label=cls.label,
                    body_id=W.body_id)
    return rep


def _verify_mc(W, u, cls, samples, seed):
    n = W.dim
    sums, per = _mc_map(W, samples, seed, lambda X, w: np.r_[w.sum(), w @ X])
    tot = sums.sum(axis=0)
    g = tot[1:] / tot[0]
    c = float(g @ u)
    cb = (sums[:, 1:] @ u) / sums[:, 0]
    # second pass on the same streams: cuts at the pooled and per-batch barycenters
    sums2, _ = _mc_map(W, samples, seed,
                       lambda X, w: np.r_[(w * (X @ u <= c)).sum(),
                                          [(w * (X @ u <= ci)).sum() for ci in cb]])
    lower = sums2[:, 0].sum()
    diag = np.diag(sums2[:, 1:])
    mass_b = sums[:, 0] / per
    total = float(tot[0] / (per * MC_BATCHES))
    if cls.kind == "gaussian":
        measured = lower / (per * MC_BATCHES)
        bound = cls.bound(n, total)
        gaps = diag / per - np.array([cls.bound(n, m) for m in mass_b])
    else:
        measured = lower / tot[0]
        bound = cls.bound(n, total)
        gaps = diag / sums[:, 0] - bound
    se = _batch_se(gaps)
    return CutReport(float(measured), float(bound), c, tuple(map(float, u)), total, None, None,
                     "mc", None, per * MC_BATCHES, seed, se, label=cls.label,
                     body_id=W.body_id,
                     notes=("equality not decided under Monte-Carlo noise",))


# -- worst direction ------------------------------------------------------------------------


def _sphere(theta):
    """Hyperspherical coordinates to a unit vector in R^{len(theta)+1}."""
    theta = np.atleast_1d(theta)
    n = len(theta) + 1
    x = np.ones(n)
    for i, a in enumerate(theta):
        x[i] *= math.cos(a)
        x[i + 1:] *= math.sin(a)
    return x


def _angles(u):
    u = _unit(u)
    n = len(u)
    th = np.zeros(n - 1)
    for i in range(n - 1):
        rest = np.linalg.norm(u[i:])
        th[i] = math.acos(max(-1.0, min(1.0, u[i] / rest))) if rest > 0 else 0.0
    if n >= 2 and u[-1] < 0:
        th[-1] = 2 * math.pi - th[-1]
    return th


class DirectionResult(tuple):
    """``(direction, report)`` with every start recorded in ``starts``."""

    def __new__(cls, direction, report, starts):
        obj = super().__new__(cls, (direction, report))
        obj.starts = starts
        return obj

    @property
    def direction(self):
        return self[0]

    @property
    def report(self):
        return self[1]


def min_cut_direction(W, cls, *, starts=32, seed=0, method=None, samples=200_000,
                      xatol=1e-4):
    """Two-sided minimum barycentric cut over unit directions (multi-start
    Nelder-Mead in angle coordinates)."""
    cls = MeasureClass.parse(cls)
    n = W.dim
    if n > 4:
        raise InvalidArgumentError("direction search supports n <= 4")
    if starts < 32:
        raise InvalidArgumentError("use at least 32 starts")
    method = _method(W, method)
    if method == "mc":
        prop = _Proposal(W)
        rng = np.random.default_rng(seed)
        X, wts = prop.draw(rng, int(samples))
        total = float(wts.mean())
        g = (wts @ X) / wts.sum()
        norm = 1.0 / len(wts)

        def lower_of(u):
            return float(wts[(X @ u) <= g @ u].sum() * norm)
    else:
        total = float(total_mass(W, method))
        g = weighted_barycenter(W, method).point

        def lower_of(u):
            return float(cut_mass(W, u, float(g @ u), method))

    scale = 1.0 if cls.kind == "gaussian" else 1.0 / total

    def value(u):
        lo = lower_of(u)
        return min(lo, total - lo) * scale

    bound = cls.bound(n, total)
    if n == 1:
        u = np.array([1.0])
        v = value(u)
        rep = CutReport(v, bound, float(g[0]), (1.0,), total, None, None, method, None,
                        samples if method == "mc" else None, seed if method == "mc" else None,
                        label=cls.label, body_id=W.body_id)
        return DirectionResult(u, rep, [((1.0,), (1.0,), v, True)])
    rng = np.random.default_rng(seed)
    inits = rng.standard_normal((starts, n))
    records = []
    best = None
    for x0 in inits:
        th0 = _angles(x0)
        f = lambda th: value(_sphere(th))
        res = minimize(f, th0, method="Nelder-Mead",
                       options={"xatol": xatol, "fatol": 1e-13, "maxiter": 400 * n,
                                "initial_simplex": th0 + 0.3 * np.vstack(
                                    [np.zeros(n - 1), np.eye(n - 1)])})
        u = _sphere(res.x)
        rec = (tuple(map(float, _unit(x0))), tuple(map(float, u)), float(res.fun),
               bool(res.success))
        records.append(rec)
        if best is None or res.fun < best[2]:
            best = rec
    u = np.array(best[1])
    rep = CutReport(best[2], bound, float(g @ u), best[1], total, None, None, method,
                    None, int(samples) if method == "mc" else None,
                    seed if method == "mc" else None, label=cls.label, body_id=W.body_id,
                    notes=() if best[3] else ("optimizer did not converge; best found",))
    return DirectionResult(u, rep, records)


# -- JSON -----------------------------------------------------------------------------------------


def body_from_json(spec, body_id=""):
    """{vertices, rays, density: {kind}} -> WeightedBody (uniform or gaussian)."""
    try:
        V = spec["vertices"]
    except (KeyError, TypeError):
        raise InvalidArgumentError("body JSON needs 'vertices'") from None
    rays = spec.get("rays", []) or []
    dens = spec.get("density", {"kind": "uniform"})
    kind = dens.get("kind", "uniform") if isinstance(dens, dict) else str(dens)
    if kind not in ("uniform", "gaussian"):
        raise InvalidArgumentError(f"body density kind {kind!r} is not supported in JSON")
    return weighted_body(V, rays, kind, body_id=spec.get("id", body_id))


def regular_polygon(m, radius=1.0, center=(0.0, 0.0)):
    k = np.arange(m)
    return np.column_stack([center[0] + radius * np.cos(2 * np.pi * k / m),
                            center[1] + radius * np.sin(2 * np.pi * k / m)])
