import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from grunbaum_lab import densities as D
from grunbaum_lab import gaussian as G
from grunbaum_lab.errors import DomainError, InvalidArgumentError
from grunbaum_lab.measure1d import (BoundSpec, Density1D, TailEnvelope, TruncationWarning,
                                    barycenter, cdf, cdf_grunbaum_bound, f_concave_bound,
                                    half_space_cdf_inequality_gap, halfspace_concavity_profile,
                                    interval_mass, is_convex_measure, iso_profile, quantile,
                                    quantile_integral, truncated_barycenter, verify_cdf_grunbaum,
                                    verify_f_concave_cut)

PHI0 = 1 / math.sqrt(2 * math.pi)
# mpmath (40 digits): truncated N(0,1) on (1,3), (a,b) = (1.5,3)
TRUNC_GAP = 0.03221976359293510532406957079481540885672
TRUNC_G = 1.910951735983111258329152355567209730838

UNIFORM = D.uniform()
EXPO = D.exponential()
GAUSS = D.gaussian()


def student2():
    # t distribution with 2 degrees of freedom: 1/psi convex, |r|^-3 tails
    return Density1D(lambda r: (2 + r * r) ** -1.5, (-math.inf, math.inf), 1.0,
                     TailEnvelope("power", 1.0, 3.0), name="t2")


CONVEX = {
    "uniform": UNIFORM,
    "exponential": EXPO,
    "gaussian": GAUSS,
    "trunc_gauss": D.gaussian(0, 1, (1, 3)),
    "power_m3": D.power(-1, 1, -3, (-math.inf, 0)),
    "linear": D.power(1, 0, 1, (0, 1)),
    "t2": student2(),
    "table": D.table([-1, 0, 0.5, 2], [-1, 0, -0.2, -2]),
}


def test_cdf_examples():
    assert cdf(UNIFORM, 0.3) == pytest.approx(0.3, abs=1e-15)
    assert abs(cdf(EXPO, 1.0) - (1 - 1 / math.e)) <= 1e-14
    assert abs(cdf(GAUSS, 0.0) - 0.5) <= 1e-14
    assert cdf(UNIFORM, -1) == 0.0 and cdf(UNIFORM, 2) == 1.0


def test_cdf_against_gaussian_core():
    for r in np.linspace(-9, 9, 37):
        assert abs(cdf(GAUSS, r) - G.std_normal_cdf(r)) <= 1e-10 * max(G.std_normal_cdf(r), 1e-300) + 1e-15


def test_quantile_examples():
    assert abs(quantile(UNIFORM, 0.25) - 0.25) <= 1e-14
    assert abs(quantile(EXPO, 0.5) - math.log(2)) <= 1e-14
    assert quantile(EXPO, 0.0) == 0.0 and quantile(EXPO, 1.0) == math.inf
    assert quantile(GAUSS, 0.0) == -math.inf


@pytest.mark.parametrize("name", sorted(CONVEX))
def test_round_trip(name):
    mu = CONVEX[name]
    m = mu.total_mass
    levels = m * (np.arange(1, 257) / 257)
    q = [quantile(mu, t) for t in levels]
    assert max(abs(cdf(mu, r) - t) for r, t in zip(q, levels)) <= 1e-8 * m
    assert np.all(np.diff(q) > 0)


def test_round_trip_deep_tails():
    for t in (1e-12, 1e-50, 1e-200):
        assert abs(quantile(GAUSS, t) - G.std_normal_quantile(t)) <= 1e-12


def test_truncated_barycenter_examples():
    assert abs(truncated_barycenter(UNIFORM, 0, 1) - 0.5) <= 1e-14
    assert abs(truncated_barycenter(EXPO, 0, math.inf) - 1.0) <= 1e-12
    assert abs(truncated_barycenter(UNIFORM, 0.5, 1) - 0.75) <= 1e-14
    with pytest.raises(DomainError):
        truncated_barycenter(UNIFORM, 2, 3)
    g = barycenter(CONVEX["power_m3"])
    assert abs(g + 1.0) <= 1e-10


def test_quantile_integral_examples():
    for t in (0.1, 0.5, 0.9):
        q = quantile_integral(UNIFORM, t)
        assert abs(q.value - t * t / 2) <= 1e-12
    q = quantile_integral(GAUSS, 0.5)
    assert abs(q.value + PHI0) <= 1e-9
    assert abs(q.moment + PHI0) <= 1e-12


def test_closed_form_discrepancy():
    q = quantile_integral(GAUSS, 0.5)
    assert abs(q.closed_form) <= 1e-12
    assert q.closed_form_discrepancy == pytest.approx(PHI0, abs=1e-9)


@pytest.mark.parametrize("name", sorted(CONVEX))
def test_quantile_integral_routes_agree(name):
    mu = CONVEX[name]
    m = mu.total_mass
    for t in (0.05 * m, 0.5 * m, 0.95 * m):
        q = quantile_integral(mu, t)
        assert q.discrepancy <= 1e-7
    full = quantile_integral(mu, m)
    g = barycenter(mu)
    assert abs(full.value - g * m) <= 1e-7
    assert abs(full.moment - g * m) <= 1e-7
    assert abs(full.closed_form - g * m) <= 1e-7


def test_cdf_grunbaum_examples():
    assert abs(cdf_grunbaum_bound(UNIFORM, 0, 1) - 0.5) <= 1e-12
    assert abs(cdf_grunbaum_bound(EXPO, 0, math.inf) - (1 - 1 / math.e)) <= 1e-10
    assert abs(cdf_grunbaum_bound(UNIFORM, 0.5, 1) - 0.25) <= 1e-12


def test_verify_cdf_grunbaum_examples():
    r = verify_cdf_grunbaum(EXPO, 0, math.inf)
    assert abs(r.gap) <= 1e-8 and r.equality
    r = verify_cdf_grunbaum(UNIFORM, 0, 1)
    assert abs(r.gap) <= 1e-12 and r.equality
    r = verify_cdf_grunbaum(UNIFORM, 0.5, 1)
    assert abs(r.gap) <= 1e-12 and r.equality
    r = verify_cdf_grunbaum(CONVEX["trunc_gauss"], 1.5, 3)
    assert abs(r.gap - TRUNC_GAP) <= 1e-9
    assert abs(r.cut_offset - TRUNC_G) <= 1e-10
    assert not r.equality and r.affinity > 1e-3


@pytest.mark.parametrize("name", sorted(CONVEX))
def test_cdf_grunbaum_inequality(name):
    mu = CONVEX[name]
    rng = np.random.default_rng(7)
    lo, hi = mu.support
    for _ in range(3):
        u1, u2 = np.sort(rng.uniform(0.02, 0.98, 2))
        a = quantile(mu, u1 * mu.total_mass) if rng.random() < 0.7 else lo
        b = quantile(mu, u2 * mu.total_mass) if rng.random() < 0.7 else hi
        assert verify_cdf_grunbaum(mu, a, b).gap >= -1e-8


def test_convexity_checks():
    assert is_convex_measure(UNIFORM).holds
    assert is_convex_measure(GAUSS).holds
    for mu in CONVEX.values():
        assert is_convex_measure(mu).holds
    mix = D.mixture([D.gaussian(-3), D.gaussian(3)], [0.5, 0.5])
    v = is_convex_measure(mix)
    assert v.holds is False and v.worst > 1e-4


def test_convexity_indeterminate_on_interior_zero():
    mu = Density1D(lambda r: max(abs(r - 0.5) - 0.1, 0.0), (0, 1), None, breakpoints=(0.4, 0.6))
    v = is_convex_measure(mu)
    assert v.holds is None and 0.4 <= v.zero_at <= 0.6


def test_halfspace_profile_examples():
    p = halfspace_concavity_profile(UNIFORM, 0.5)
    assert np.max(np.abs(p.values - (p.x - 0.5))) <= 1e-12
    assert p.holds and p.affinity <= 1e-10
    p = halfspace_concavity_profile(EXPO, 1.0)
    expect = -np.log(1 - math.exp(-1) + np.exp(-p.x))
    assert np.max(np.abs(p.values - expect)) <= 1e-9
    assert p.holds and p.affinity > 1e-3
    p = halfspace_concavity_profile(GAUSS, -math.inf)
    assert np.max(np.abs(p.values - p.x)) <= 1e-9 and p.affinity <= 1e-9


@pytest.mark.parametrize("name", ["gaussian", "exponential", "t2", "linear"])
def test_convex_measure_gives_concave_profiles(name):
    mu = CONVEX[name]
    lo, _ = mu.support
    for a in (lo - 1 if math.isfinite(lo) else -50.0, quantile(mu, 0.3), quantile(mu, 0.7)):
        assert halfspace_concavity_profile(mu, a, n=256).holds


def test_nonconvex_measure_has_nonconcave_profile():
    mix = D.mixture([D.gaussian(-3), D.gaussian(3)], [0.5, 0.5])
    worst = max(halfspace_concavity_profile(mix, a, n=256).verdict.worst for a in (-5.0, -3.0, -1.0))
    assert worst >= 1e-4


def test_iso_profile():
    for t in (0.01, 0.3, 0.5, 0.8):
        assert abs(iso_profile(GAUSS, t) - G.gaussian_isoperimetric(t)) <= 1e-9
        assert abs(iso_profile(UNIFORM, t) - 1.0) <= 1e-12
        assert abs(iso_profile(EXPO, t) - (1 - t)) <= 1e-12
    with pytest.raises(DomainError):
        iso_profile(GAUSS, 1.0)


def test_f_concave_bound_examples():
    assert abs(f_concave_bound(BoundSpec.log(), 1) - 1 / math.e) <= 1e-15
    assert abs(f_concave_bound(BoundSpec.identity(), 1) - 0.5) <= 1e-15
    for s in (-0.9, -0.5, 0.25, 0.5, 1.0, 3.0):
        expect = (1 / (1 + s)) ** (1 / s)
        assert abs(f_concave_bound(BoundSpec.power(s), 1) - expect) <= 1e-13


def test_f_concave_bound_numeric_routes():
    # no primitive, no inverse: quadrature plus root search
    F = BoundSpec(lambda r: r ** 0.5, True, name="sqrt")
    assert abs(f_concave_bound(F, 1.0) - 4 / 9) <= 1e-10
    F = BoundSpec(math.log, True)
    assert abs(f_concave_bound(F, 0.5) - 0.5 / math.e) <= 1e-10
    assert abs(f_concave_bound(BoundSpec.gaussian(), 0.5) - G.ehrhard_grunbaum_bound(0.5)) <= 1e-15


def test_f_concave_bound_divergence():
    F = BoundSpec(lambda r: 1.0 / r, False, name="1/r")
    with pytest.raises(DomainError):
        f_concave_bound(F, 1.0)


def test_boundspec_monotonicity_checked():
    with pytest.raises(InvalidArgumentError):
        BoundSpec(lambda r: (r - 0.5) ** 2, True)
    with pytest.raises(InvalidArgumentError):
        BoundSpec(lambda r: r, False)


def test_verify_f_concave_cut_examples():
    r = verify_f_concave_cut(G.std_normal_cdf, BoundSpec.gaussian(), (-math.inf, 0.0))
    assert r.t == pytest.approx(0.5)
    assert abs(r.cut_offset + 2 * PHI0) <= 1e-9
    assert abs(r.gap) <= 1e-9 and r.equality
    r = verify_f_concave_cut(lambda x: x * x, BoundSpec.power(0.5), (0.0, 1.0))
    assert abs(r.measured - 4 / 9) <= 1e-12 and abs(r.gap) <= 1e-12 and r.equality
    r = verify_f_concave_cut(lambda x: x, BoundSpec.identity(), (0.0, 0.8))
    assert abs(r.bound - 0.4) <= 1e-15 and r.equality


def test_verify_f_concave_cut_strict_and_invalid():
    # log-concave but not log-affine profile: strict inequality
    r = verify_f_concave_cut(lambda x: x ** 3, BoundSpec.log(), (0.0, 1.0))
    assert r.gap > 1e-3 and not r.equality
    with pytest.raises(InvalidArgumentError):
        verify_f_concave_cut(lambda x: math.sin(6 * x) + 1, BoundSpec.log(), (0.0, 1.0))


@settings(max_examples=40, deadline=None)
@given(st.floats(-2.0, 1.0), st.floats(0.01, 3.0), st.floats(0.01, 3.0), st.floats(0.0, 1.0))
def test_half_space_cdf_inequality(a, dr, ds, lam):
    # r and s inside the support, so both masses mu((a, .]) are positive
    for mu in (GAUSS, EXPO, CONVEX["t2"]):
        base = max(a, mu.support[0])
        assert half_space_cdf_inequality_gap(mu, a, base + dr, base + ds, lam) >= -1e-8


def test_density_construction_errors():
    with pytest.raises(InvalidArgumentError):
        Density1D(lambda r: 1.0, (0, 1), 2.0)
    with pytest.raises(InvalidArgumentError):
        Density1D(lambda r: math.exp(-r), (0, math.inf))
    with pytest.raises(InvalidArgumentError):
        Density1D(lambda r: math.exp(-r / 2), (0, math.inf), None, TailEnvelope("exponential", 1, 1))
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        mu = Density1D(lambda r: math.exp(-r), (0, math.inf), horizon=50.0)
    assert any(issubclass(x.category, TruncationWarning) for x in w)
    assert mu.support == (0.0, 50.0)
    assert abs(interval_mass(mu, 0, 50) - (1 - math.exp(-50))) <= 1e-12


def test_json_densities():
    mu = D.from_json({"kind": "gaussian", "params": {"mean": 1, "sigma": 2}})
    assert abs(cdf(mu, 1.0) - 0.5) <= 1e-12
    mu = D.from_json({"kind": "power", "params": {"a": -1, "b": 1, "q": -3}, "support": [-math.inf, 0]})
    assert abs(barycenter(mu) + 1) <= 1e-10
    mu = D.from_json({"kind": "table", "params": {"x": [0, 1], "log_density": [0, 0]}})
    assert abs(cdf(mu, 0.25) - 0.25) <= 1e-12
    with pytest.raises(InvalidArgumentError):
        D.from_json({"kind": "weird"})
