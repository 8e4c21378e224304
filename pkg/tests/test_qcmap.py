import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qccomp.distortion import psi
from qccomp.errors import DomainError, PreconditionError
from qccomp.qcmap import (
    AngularShear,
    Composition,
    Identity,
    RadialStretch,
    Rotation,
    Spiral,
    a_phi,
    boundary_lipschitz_estimate,
    boundary_map,
    builtin_zoo,
    counting_N,
    finite_difference_wirtinger,
    hersch_pfluger_violations,
    koskela_diameter_check,
    m_ratio,
    m_ratio_of_inverse,
    map_from_spec,
    max_beltrami,
    shear_with_slopes,
    sup_m_ratio,
)
from qccomp.quadrature import build_quadrature

ZOO = builtin_zoo()
ALL = dict(ZOO, identity=Identity(), rotation=Rotation(0.7))


def random_points(n, seed=0, rmax=0.999):
    rng = np.random.default_rng(seed)
    return rmax * np.sqrt(rng.random(n)) * np.exp(2j * np.pi * rng.random(n))


def test_closed_form_examples():
    assert RadialStretch(2).evaluate(0.25) == pytest.approx(0.5, abs=1e-15)
    assert Identity().evaluate(0.3 + 0.1j) == 0.3 + 0.1j
    assert Rotation(math.pi / 2).evaluate(0.3) == pytest.approx(0.3j, abs=1e-15)
    assert RadialStretch(2).inverse_evaluate(0.5) == pytest.approx(0.25, abs=1e-15)
    w = 0.2 - 0.4j
    assert Rotation(1.1).inverse_evaluate(w) == pytest.approx(cmath.exp(-1.1j) * w, abs=1e-15)


def test_spiral_closed_form():
    z = 0.6 * cmath.exp(0.4j)
    K, t = 1.5, 0.5
    expected = z * abs(z) ** complex(1 / K - 1, t)
    assert Spiral(K, t).evaluate(z) == pytest.approx(expected, abs=1e-14)


def test_origin_fixed_and_disk_preserved():
    z = random_points(2000)
    for phi in ALL.values():
        assert phi.evaluate(0j) == 0
        assert np.all(np.abs(phi.evaluate(z)) < 1)


def test_domain_errors():
    with pytest.raises(DomainError):
        RadialStretch(2).evaluate(1.0)
    with pytest.raises(DomainError):
        m_ratio(Identity(), 1.2)
    with pytest.raises(DomainError):
        counting_N(Identity(), 0j)
    with pytest.raises(DomainError):
        RadialStretch(2).beltrami(0j)


@pytest.mark.parametrize("name", list(ALL))
def test_inverse_round_trip(name):
    phi = ALL[name]
    z = random_points(1000, seed=1)
    assert np.max(np.abs(phi.inverse_evaluate(phi.evaluate(z)) - z)) <= 1e-9


@pytest.mark.parametrize("name", list(ALL))
def test_beltrami_bound_and_positive_jacobian(name):
    phi = ALL[name]
    z = random_points(10_000, seed=2)
    z = z[np.abs(z) > 1e-9]
    K = phi.K_bound
    assert max_beltrami(phi, z) <= (K - 1) / (K + 1) + 1e-6
    assert np.all(phi.jacobian(z) > 0)


def test_radial_stretch_beltrami_value():
    for z in (0.2, 0.5j, -0.7):
        assert abs(RadialStretch(2).beltrami(z)) == pytest.approx(1 / 3, abs=1e-12)


def test_identity_derivatives():
    z = random_points(50)
    assert np.allclose(Identity().jacobian(z), 1.0)
    assert np.allclose(Identity().beltrami(z), 0.0)


@pytest.mark.parametrize("name", list(ZOO))
def test_closed_form_derivatives_match_finite_differences(name):
    phi = ZOO[name]
    z = random_points(200, seed=3, rmax=0.95)
    z = z[np.abs(z) > 0.05]
    if phi.angular_breaks() is not None:
        # stay off the rays where the profile has kinks
        br = np.asarray(phi.angular_breaks())
        gap = np.min(np.abs(np.angle(np.exp(1j * (np.angle(z)[:, None] - br[None, :])))), axis=1)
        z = z[gap > 1e-3]
    a, b = phi.wirtinger(z)
    fa, fb = finite_difference_wirtinger(phi, z)
    assert np.max(np.abs(a - fa)) <= 1e-6
    assert np.max(np.abs(b - fb)) <= 1e-6


@pytest.mark.parametrize("name", list(ALL))
def test_change_of_variables(name):
    phi = ALL[name]
    q = build_quadrature(200, 512).adapted(phi.angular_breaks())
    lhs = q.integrate(np.abs(phi.evaluate(q.points)) ** 2 * phi.jacobian(np.where(q.points == 0, 1e-300, q.points)))
    assert lhs == pytest.approx(0.5, abs=1e-6)


def test_composition_dilatation_is_product():
    comp = ZOO["composition"]
    assert comp.K_bound == pytest.approx(np.prod([m.K_bound for m in comp.maps]))
    c2 = Composition((RadialStretch(2), Spiral(1.5, 0.5)))
    assert c2.K_bound == pytest.approx(2 * Spiral(1.5, 0.5).K_bound)
    assert hersch_pfluger_violations(c2, random_points(1000, 5)) == 0


@pytest.mark.parametrize("name", list(ALL))
def test_hersch_pfluger_sandwich(name):
    assert hersch_pfluger_violations(ALL[name], random_points(1000, seed=4)) == 0


def test_m_ratio_examples():
    z = random_points(100)
    assert np.allclose(m_ratio(Identity(), z), 1.0)
    # (1 - 0.99) / (1 - sqrt(0.99)), with the gap computed stably
    expected = 0.01 / -math.expm1(0.5 * math.log(0.99))
    assert m_ratio(RadialStretch(2), 0.99) == pytest.approx(expected, rel=1e-13)
    assert m_ratio(RadialStretch(2), 0.99) == pytest.approx(1.99499, abs=1e-5)
    for phi in ZOO.values():
        prod = m_ratio(phi, z) * m_ratio_of_inverse(phi, phi.evaluate(z))
        assert np.allclose(prod, 1.0, atol=1e-9)


def test_sup_m_ratio_values():
    assert sup_m_ratio(Identity()) == pytest.approx(1.0, abs=1e-12)
    for K in (1.5, 2.0, 4.0):
        assert sup_m_ratio(RadialStretch(K)) == pytest.approx(K, abs=1e-4)
    assert sup_m_ratio(RadialStretch(0.5)) == pytest.approx(1.0, abs=1e-6)


def test_a_phi():
    z = np.array([0.1, 0.5j, -0.9])
    assert np.allclose(a_phi(Identity(), z), 1.0)
    assert np.allclose(a_phi(Rotation(0.3), z), 1.0)
    r = np.array([0.1, 0.3, 0.5, 0.7, 0.9, 0.99, 0.999])
    prod = a_phi(RadialStretch(2), r) * m_ratio(RadialStretch(2), r)
    assert prod.max() / prod.min() <= 20


def test_counting_function():
    for r in (0.5, 0.9):
        assert counting_N(Identity(), r) == pytest.approx(-math.log(r), rel=1e-14)
        for K in (1.5, 2.0, 4.0):
            assert counting_N(RadialStretch(K), r * 1j) == pytest.approx(-K * math.log(r), rel=1e-12)


def test_boundary_lipschitz():
    assert boundary_lipschitz_estimate(Identity()) == pytest.approx(1.0)
    for K in (1.5, 2.0, 4.0):
        for d in ("forward", "inverse"):
            assert boundary_lipschitz_estimate(RadialStretch(K), d) == pytest.approx(1.0)
    shear = ZOO["angular_shear_half_2"]
    assert boundary_lipschitz_estimate(shear, "forward") == pytest.approx(2.0, rel=1e-9)
    assert boundary_lipschitz_estimate(shear, "inverse") == pytest.approx(2.0, rel=1e-9)
    bm = boundary_map(shear)
    th = np.linspace(0, 2 * np.pi, 50)
    assert np.allclose(bm.inverse(bm.forward(th)), th, atol=1e-12)


@pytest.mark.parametrize("name", list(ALL))
def test_boundary_trace_is_circle_homeomorphism(name):
    phi = ALL[name]
    th = np.linspace(0, 2 * np.pi, 4097)
    b = phi.boundary(th)
    assert np.all(np.diff(b) > 0)
    assert b[-1] - b[0] == pytest.approx(2 * np.pi, abs=1e-12)


def test_sup_m_and_boundary_refinement_stability():
    for phi in ALL.values():
        assert np.isfinite(sup_m_ratio(phi))
        a = boundary_lipschitz_estimate(phi, "inverse", 4096)
        b = boundary_lipschitz_estimate(phi, "inverse", 8192)
        assert b == pytest.approx(a, rel=0.05)


def test_shear_construction():
    shear = shear_with_slopes([0.5, 2.0])
    assert shear.K_bound == pytest.approx(2.0)
    assert np.allclose(sorted(set(np.round(shear.slopes, 12))), [0.5, 2.0])
    with pytest.raises(ValueError):
        AngularShear(np.array([0.0, 1.0]), np.array([0.0, -1.0]))


def test_map_specs_round_trip():
    for phi in ALL.values():
        again = map_from_spec(phi.to_spec())
        z = random_points(20)
        assert np.allclose(again.evaluate(z), phi.evaluate(z), atol=1e-15)
    with pytest.raises(ValueError):
        map_from_spec({"kind": "radial_stretch", "K": 2.0, "bogus": 1})
    with pytest.raises(ValueError):
        map_from_spec({"kind": "mobius"})


def test_koskela_check():
    arc = [0.5, 0.9]
    ident = koskela_diameter_check(Identity(), arc)
    assert ident.ratio <= 1.0 + 1e-9
    rot = koskela_diameter_check(Rotation(0.5), arc)
    assert rot.diameter_of_image == pytest.approx(0.4, rel=1e-9)
    assert rot.line_integral_of_a_phi == pytest.approx(0.4, rel=1e-6)
    coarse = koskela_diameter_check(RadialStretch(2), arc, n_samples=100).ratio
    fine = koskela_diameter_check(RadialStretch(2), arc, n_samples=1000).ratio
    assert np.isfinite(fine) and abs(coarse / fine - 1) <= 0.02
    with pytest.raises(PreconditionError):
        koskela_diameter_check(Identity(), [0.9, 0.9 + 0.01j])


@settings(max_examples=50, deadline=None)
@given(
    K=st.floats(0.25, 6.0),
    t=st.floats(-2.0, 2.0),
    r=st.floats(1e-3, 0.999),
    th=st.floats(-np.pi, np.pi),
)
def test_spiral_sandwich_property(K, t, r, th):
    phi = Spiral(K, t)
    z = r * np.exp(1j * th)
    w = abs(phi.evaluate(z))
    Kb = phi.K_bound
    assert psi(1 / Kb, r) - 1e-9 <= w <= psi(Kb, r) + 1e-9
    assert abs(phi.inverse_evaluate(phi.evaluate(z)) - z) <= 1e-9
