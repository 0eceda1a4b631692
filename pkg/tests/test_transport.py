import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from grunbaum_lab import densities as D
from grunbaum_lab import gaussian as G
from grunbaum_lab import transport as TR
from grunbaum_lab.errors import InvalidArgumentError, PreconditionError
from grunbaum_lab.measure1d import (Density1D, TailEnvelope, cdf, cdf_grunbaum_bound,
                                    interval_mass, quantile)

# mpmath (40 digits) values of phi(W(t)) / (t + e^{W(t)})
LAMBERT_PDF = {-0.3: 1.1307482255017488408, -0.1: 0.49919212343323896887,
               0.5: 0.19516331749048786681, 2.0: 0.063825330734551879079,
               10.0: 0.0055283054039333835229}
# the alternative form (1/sqrt(2 pi t^2)) W/(W+1) e^{-W^2/2} at t = -0.1
ALT_FORM_M01 = -0.49919212343323896887
# Lambert measure with the default cut: w0, mass, barycenter, cut mass, bound
LAMBERT_W0 = -0.99997668374188523918
LAMBERT_MASS = 0.84133910415090040735
LAMBERT_G = 2.0208626537373476251
LAMBERT_MEASURED = 0.6457240123409220665
LAMBERT_BOUND = 0.38682317848935514875
# gamma on (0, inf): mass below the barycenter 2 phi(0) and Phi(-2 phi(0))
HALF_MEASURED = 0.28753125815831900048
HALF_BOUND = 0.21246874184168099952
LOGNORMAL_AT_2 = 0.15687401927898109134
N04_AT_1 = 0.17603266338214973889

GAUSS = D.gaussian()
GAUSS2 = D.gaussian(0.0, 2.0)
SHIFTED = D.gaussian(1.0, 0.5)
EXPO = D.exponential()


@pytest.fixture(scope="module")
def lambert():
    return TR.lambert_measure()


@pytest.fixture(scope="module")
def lognormal():
    return TR.measure_from_convex_map(TR.exponential_map())


def student2():
    return Density1D(lambda r: (2 + r * r) ** -1.5, (-math.inf, math.inf), 1.0,
                     TailEnvelope("power", 1.0, 3.0), name="t2")


# -- Lambert W and the Lambert density ------------------------------------------------------


def test_lambert_w_branch_series():
    import mpmath as mp
    mp.mp.dps = 40
    for d in (1e-16, 1e-12, 1e-8, 1e-5, 3.6e-4, 3.7e-4, 1e-2):
        x = -G.INV_E + d
        exact = mp.lambertw(mp.mpf(x)).real + 1
        assert abs(G.lambert_w0_plus_one(x) / float(exact) - 1) <= 1e-13
        assert abs(G.lambert_w0(x) - float(exact - 1)) <= 1e-14


def test_lambert_density_values():
    for t, v in LAMBERT_PDF.items():
        assert TR.lambert_density(t) == pytest.approx(v, rel=1e-13)
    assert TR.lambert_density(0.0) == G.INV_SQRT2PI
    assert TR.lambert_density(-0.5) == 0.0


def test_lambert_density_continuous_at_zero():
    for h in (1e-6, -1e-6):
        assert TR.lambert_density(h) == pytest.approx(G.INV_SQRT2PI, rel=1e-5)


def test_alternative_form_has_wrong_sign_left_of_zero():
    # sqrt(t^2) = |t| where t belongs, so the form equals -psi(t) for t < 0
    assert ALT_FORM_M01 == pytest.approx(-LAMBERT_PDF[-0.1], rel=1e-15)


def test_lambert_measure(lambert):
    assert lambert.total_mass == pytest.approx(LAMBERT_MASS, rel=1e-12)
    T = TR.transport_from_measure(lambert)
    assert T.domain[0] == pytest.approx(LAMBERT_W0, abs=1e-12)
    for s in np.linspace(LAMBERT_W0 + 1e-3, 4.0, 41):
        x = s * math.exp(s)
        assert abs(T(s) - x) <= 1e-7 * max(1.0, abs(x))


def test_lambert_cut_arguments():
    with pytest.raises(InvalidArgumentError):
        TR.lambert_measure(0.0)


# -- maps ---------------------------------------------------------------------------------------


def test_transport_map_checks():
    with pytest.raises(InvalidArgumentError):
        TR.TransportMap(lambda s: -s, lambda x: -x)
    with pytest.raises(InvalidArgumentError):
        TR.TransportMap(lambda s: s, lambda x: x + 1e-3)
    with pytest.raises(InvalidArgumentError):
        TR.linear_map(0.0)


def test_numeric_derivative():
    T = TR.TransportMap(math.exp, math.log)
    for s in (-3.0, 0.0, 2.5):
        assert T.derivative(s) == pytest.approx(math.exp(s), rel=1e-8)


def test_map_from_json():
    assert TR.map_from_json({"kind": "linear", "params": {"sigma": 2}})(1.5) == 3.0
    assert TR.map_from_json({"kind": "lambert"})(1.0) == pytest.approx(math.e)
    T = TR.map_from_json({"kind": "custom-table",
                          "params": {"s": [-3, -1, 0, 1, 3], "t": [-9, -1, 0, 2, 10]}})
    xs = np.linspace(-2.9, 2.9, 59)
    assert np.all(np.diff([T(v) for v in xs]) > 0)
    assert T(0.0) == 0.0 and T(1.0) == 2.0
    with pytest.raises(InvalidArgumentError):
        TR.map_from_json({"kind": "quadratic"})
    with pytest.raises(InvalidArgumentError):
        TR.map_from_json({"kind": "custom-table", "params": {"s": [0, 1], "t": [1, 0]}})


@settings(max_examples=30, deadline=None)
@given(st.floats(-2.9, 2.9))
def test_table_map_inverse(x):
    T = TR.table_map([-3, -1, 0, 1, 3], [-9, -1, 0, 2, 10])
    y = T(x)
    assert abs(T(T.inverse(y)) - y) <= 1e-9


# -- transport_from_measure -----------------------------------------------------------------------


def test_identity_and_scaling():
    T = TR.transport_from_measure(GAUSS)
    T2 = TR.transport_from_measure(GAUSS2)
    for s in np.linspace(-6, 6, 25):
        assert abs(T(s) - s) <= 1e-8
        assert abs(T2(s) - 2 * s) <= 1e-8


@pytest.mark.parametrize("mu", [GAUSS2, SHIFTED, EXPO], ids=["n04", "shifted", "expo"])
def test_transport_pushes_gamma(mu):
    T = TR.transport_from_measure(mu)
    for s in np.linspace(-6, 6, 25):
        assert abs(cdf(mu, T(s)) - G.std_normal_cdf(s)) <= 1e-8


@settings(max_examples=40, deadline=None)
@given(st.floats(-5.0, 5.0))
def test_transport_inverse_round_trip(s):
    T = TR.transport_from_measure(EXPO)
    assert abs(T.inverse(T(s)) - s) <= 1e-8


def test_mass_above_one_rejected():
    mu = D.uniform(0.0, 1.0)
    big = Density1D(lambda r: 2.0, (0.0, 1.0), 2.0)
    assert TR.transport_from_measure(mu).domain[0] == -math.inf
    with pytest.raises(Exception):
        TR.transport_from_measure(big)


# -- measure_from_convex_map ------------------------------------------------------------------


def test_image_of_identity_and_scaling():
    mu = TR.measure_from_convex_map(TR.linear_map())
    assert mu.total_mass == pytest.approx(1.0, abs=1e-8)
    for x in (-3.0, 0.0, 1.7):
        assert mu.pdf(x) == pytest.approx(G.std_normal_pdf(x), rel=1e-12)
    mu2 = TR.measure_from_convex_map(TR.linear_map(2.0))
    assert mu2.pdf(1.0) == pytest.approx(N04_AT_1, rel=1e-12)


def test_image_of_exponential_map(lognormal):
    assert lognormal.total_mass == pytest.approx(1.0, abs=1e-8)
    assert lognormal.pdf(2.0) == pytest.approx(LOGNORMAL_AT_2, rel=1e-12)
    T = TR.transport_from_measure(lognormal)
    for s in np.linspace(-3, 3, 13):
        assert abs(T(s) - math.exp(s)) <= 1e-6


def test_image_of_lambert_map_matches_lambert_density():
    mu = TR.measure_from_convex_map(TR.lambert_map())
    assert mu.total_mass == pytest.approx(LAMBERT_MASS, rel=1e-9)
    for t in (-0.3, 0.5, 2.0):
        assert mu.pdf(t) == pytest.approx(LAMBERT_PDF[t], rel=1e-9)


def test_nonmonotone_map_rejected():
    T = TR.TransportMap(lambda s: s ** 3, lambda x: math.copysign(abs(x) ** (1 / 3), x),
                        lambda s: 3 * s * s, check=False)
    with pytest.raises(InvalidArgumentError):
        TR.measure_from_convex_map(T)


def test_round_trip_reconstruction():
    mu = EXPO
    back = TR.measure_from_convex_map(TR.transport_from_measure(mu))
    assert back.total_mass == pytest.approx(1.0, abs=1e-8)
    for x in np.geomspace(0.01, 20, 25):
        assert back.pdf(x) == pytest.approx(mu.pdf(x), rel=1e-6)


# -- concavity, Monge-Ampere, transport cut bound -----------------------------------------------


def test_gamma_transport_concavity(lambert, lognormal):
    assert TR.is_gamma_transport_concave(GAUSS2).holds
    assert TR.is_gamma_transport_concave(SHIFTED).holds
    assert TR.is_gamma_transport_concave(lambert).holds
    assert TR.is_gamma_transport_concave(lognormal).holds
    assert TR.is_gamma_transport_concave(EXPO).holds
    v = TR.is_gamma_transport_concave(D.uniform(0.0, 1.0))
    assert not v.holds and len(v.triple) == 3


def test_uniform_second_difference_oracle():
    # the uniform on [0, 1] has T = Phi, which is convex left of 0
    T = TR.transport_from_measure(D.uniform(0.0, 1.0))
    P = G.std_normal_cdf
    assert T(-1.0) - 0.5 * (T(-2.0) + T(0.0)) == pytest.approx(P(-1) - 0.5 * (P(-2) + 0.5),
                                                                 abs=1e-12)
    assert T(-1.0) - 0.5 * (T(-2.0) + T(0.0)) < -0.01


def test_affine_verdict_for_gaussians():
    assert TR.is_gamma_transport_concave(GAUSS2).affinity <= 1e-6
    assert TR.is_gamma_transport_concave(EXPO).affinity > 1e-3


def test_monge_ampere(lambert):
    grid = np.linspace(-4, 4, 81)
    assert TR.monge_ampere_residual(GAUSS, TR.linear_map(), grid) <= 1e-12
    assert TR.monge_ampere_residual(lambert, TR.lambert_map(), grid) <= 1e-7
    assert TR.monge_ampere_residual(lambert, TR.transport_from_measure(lambert), grid) <= 1e-6
    assert TR.monge_ampere_residual(EXPO, TR.transport_from_measure(EXPO), grid) <= 1e-6
    cube = TR.TransportMap(lambda s: s ** 3, lambda x: math.copysign(abs(x) ** (1 / 3), x),
                           lambda s: 3 * s * s, check=False)
    assert TR.monge_ampere_residual(GAUSS, cube, [1.0]) > 0.1


def test_transport_verify_examples(lambert):
    r = TR.transport_grunbaum_verify(GAUSS, -math.inf, math.inf)
    assert r.measured == pytest.approx(0.5, abs=1e-12) and r.bound == 0.5 and r.equality
    r = TR.transport_grunbaum_verify(GAUSS, 0.0, math.inf)
    assert r.measured == pytest.approx(HALF_MEASURED, abs=1e-10)
    assert r.bound == pytest.approx(HALF_BOUND, abs=1e-12)
    r = TR.transport_grunbaum_verify(lambert, *lambert.support)
    assert r.cut_offset == pytest.approx(LAMBERT_G, rel=1e-10)
    assert r.measured == pytest.approx(LAMBERT_MEASURED, abs=1e-10)
    assert r.bound == pytest.approx(LAMBERT_BOUND, abs=1e-10)
    assert r.gap >= 0 and not r.equality


def test_transport_verify_precondition():
    with pytest.raises(PreconditionError):
        TR.transport_grunbaum_verify(D.uniform(0.0, 1.0), 0.0, 1.0)


@pytest.mark.parametrize("name", ["gauss", "n04", "shifted", "expo", "lambert", "lognormal"])
def test_cut_bound_interval_grid(name, lambert, lognormal):
    mu = {"gauss": GAUSS, "n04": GAUSS2, "shifted": SHIFTED, "expo": EXPO,
          "lambert": lambert, "lognormal": lognormal}[name]
    m = mu.total_mass
    lo, hi = mu.support
    for la in (0.0, 0.05, 0.1, 0.2, 0.3):
        for lb in (0.4, 0.55, 0.7, 0.9, 1.0):
            a = lo if la == 0 else quantile(mu, la * m)
            b = hi if lb == 1 else quantile(mu, lb * m)
            assert TR.transport_grunbaum_verify(mu, a, b).gap >= -1e-7


@pytest.mark.parametrize("mu", [GAUSS, GAUSS2, SHIFTED, EXPO],
                         ids=["gauss", "n04", "shifted", "expo"])
def test_chain_consistency(mu):
    # each of these is both convex and gamma-transport concave: the cut mass clears both bounds,
    # and the convex bound itself sits above the Gaussian one at the relative mass
    lo, hi = mu.support
    for a, b in ((lo, hi), (lo, 0.5), (max(lo, -1.0), hi), (max(lo, -0.5), 1.5)):
        r = TR.transport_grunbaum_verify(mu, a, b)
        t = min(1.0, interval_mass(mu, a, b) / mu.total_mass)
        assert r.gap >= -1e-7
        assert r.measured >= cdf_grunbaum_bound(mu, a, b) - 1e-7
        assert cdf_grunbaum_bound(mu, a, b) >= G.ehrhard_grunbaum_bound(t) - 1e-7


# -- even measures ------------------------------------------------------------------------------


def test_even_gaussian_recovers_sigma():
    r = TR.even_transport_gaussian_test(GAUSS)
    assert r.accepted and abs(r.sigma - 1) <= 1e-8
    r = TR.even_transport_gaussian_test(GAUSS2)
    assert r.accepted and abs(r.sigma - 2) <= 1e-7


def test_even_non_gaussians_rejected():
    r = TR.even_transport_gaussian_test(D.uniform(-1.0, 1.0))
    assert not r.accepted
    # proportionality oracle: T(s) = 2 Phi(s) - 1 for the uniform on [-1, 1]
    T = TR.transport_from_measure(D.uniform(-1.0, 1.0))
    assert T(1.5) / 1.5 != pytest.approx(T(0.5) / 0.5, rel=1e-3)
    assert not TR.even_transport_gaussian_test(student2()).accepted


def test_even_test_needs_symmetry():
    with pytest.raises(PreconditionError):
        TR.even_transport_gaussian_test(SHIFTED)
    with pytest.raises(PreconditionError):
        TR.even_transport_gaussian_test(D.mixture([D.gaussian(-1, 1), D.gaussian(1, 0.5)],
                                                  [0.5, 0.5]))


def test_measure_from_json():
    assert TR.measure_from_json({"kind": "lambert"}).name == "lambert"
    mu = TR.measure_from_json({"kind": "image", "map": {"kind": "linear",
                                                          "params": {"sigma": 2}}})
    assert mu.pdf(1.0) == pytest.approx(N04_AT_1, rel=1e-12)
    assert TR.measure_from_json({"kind": "exponential"}).total_mass == pytest.approx(1.0)
