import math

import numpy as np
import pytest

from qccomp.errors import DomainError, PreconditionError
from qccomp.geometry import (
    Arc,
    CarlesonBox,
    DyadicGrid,
    DyadicInterval,
    PseudoHyperbolicDisk,
    box_area,
    box_center,
    box_contains,
    containing_box_for_pair,
    image_box_analysis,
    mei_cover,
    ph_area_check,
    ph_disk_area,
    ph_image_sandwich,
    ph_membership,
    rengel_bounds,
    side_lengths,
    tau,
)
from qccomp.qcmap import Identity, RadialStretch, Rotation, builtin_zoo

ZOO = builtin_zoo()


def uniform_disk(n, rng):
    z = rng.uniform(-1, 1, (4 * n, 2)) @ np.array([1, 1j])
    return z[np.abs(z) < 1][:n]


def test_ph_disk_realization():
    d = PseudoHyperbolicDisk(0.5, 0.5)
    assert d.euclidean_center == pytest.approx(0.375 / 0.9375)
    assert d.euclidean_radius == pytest.approx(0.75 * 0.5 / 0.9375)
    z = uniform_disk(10_000, np.random.default_rng(0))
    assert np.array_equal(d.contains(z), d.contains_euclidean(z))


def test_ph_membership_trivial_cases():
    z = uniform_disk(2000, np.random.default_rng(1))
    d0 = PseudoHyperbolicDisk(0, 0.4)
    assert np.array_equal(ph_membership(d0, z), np.abs(z) < 0.4)
    d = PseudoHyperbolicDisk(0.3 - 0.6j, 0.2)
    assert ph_membership(d, 0.3 - 0.6j)
    with pytest.raises(DomainError):
        ph_membership(d, 1.0)
    with pytest.raises(DomainError):
        PseudoHyperbolicDisk(0.2, 1.0)


def test_tau_is_involution():
    z = uniform_disk(100, np.random.default_rng(2))
    a = 0.4 + 0.3j
    assert np.allclose(tau(a, tau(a, z)), z, atol=1e-13)


def test_ph_disk_area_closed_form():
    rng = np.random.default_rng(3)
    for c, rho in [(0.0, 0.5), (0.6j, 0.3), (-0.8, 0.7)]:
        d = PseudoHyperbolicDisk(c, rho)
        assert ph_disk_area(c, rho) == pytest.approx(d.area, rel=1e-14)
        pts = uniform_disk(400_000, rng)
        frac = np.mean(d.contains(pts))
        sigma = math.sqrt(frac * (1 - frac) / pts.size)
        assert abs(frac - d.area) <= 4 * sigma


def test_sandwich_identity_and_radial_stretch():
    d = PseudoHyperbolicDisk(0.4, 0.3)
    rep = ph_image_sandwich(Identity(), d, 2000, seed=0)
    assert rep.outer_violations == rep.inner_violations == 0
    rep = ph_image_sandwich(RadialStretch(2), d, 10_000, seed=1)
    assert rep.outer_violations == rep.inner_violations == 0


@pytest.mark.parametrize("name", list(ZOO))
def test_sandwich_random_disks(name):
    phi = ZOO[name]
    rng = np.random.default_rng(4)
    for i in range(5):
        a = 0.95 * math.sqrt(rng.random()) * np.exp(2j * math.pi * rng.random())
        d = PseudoHyperbolicDisk(a, 0.05 + 0.9 * rng.random())
        rep = ph_image_sandwich(phi, d, 4000, seed=i)
        assert rep.outer_violations == 0 and rep.inner_violations == 0
        area = ph_area_check(phi, d, 50_000, seed=i)
        assert area.within_3sigma
        assert area.lower <= area.upper


def test_box_basics():
    assert box_area(1.0) == 1.0
    assert box_area(0.5) == pytest.approx(3 / 8)
    b = CarlesonBox(0.3, 0.25)
    assert box_contains(b, box_center(b))
    assert box_center(b) == pytest.approx((1 - 0.125) * np.exp(0.3j))
    assert not box_contains(b, 0.5 * np.exp(0.3j))
    assert not box_contains(b, 0.95 * np.exp(0.3j + 1j * math.pi * 0.26))
    with pytest.raises(DomainError):
        box_area(0.0)
    with pytest.raises(DomainError):
        CarlesonBox(0.0, 1.5)


def test_box_area_monte_carlo():
    rng = np.random.default_rng(5)
    pts = uniform_disk(1_000_000, rng)
    for t in (0.5, 0.125):
        b = CarlesonBox(2.0, t)
        frac = np.mean(b.contains(pts))
        sigma = math.sqrt(box_area(t) * (1 - box_area(t)) / pts.size)
        assert abs(frac - box_area(t)) <= 3 * sigma


def test_dyadic_grid_tiles_circle():
    for g in (DyadicGrid(0.0), DyadicGrid(1 / 3)):
        for level in (0, 1, 4):
            starts = np.sort(g.starts(level))
            assert np.allclose(np.diff(starts), 2.0**-level)
            assert len(g.intervals(level)) == 2**level


def test_mei_cover_on_grid_interval():
    J = DyadicInterval(0.0, 5, 7).arc
    I = mei_cover(J)
    assert I.arc.contains_arc(J)
    assert I.length / J.length <= 2


def test_mei_cover_random_intervals():
    rng = np.random.default_rng(6)
    worst = 0.0
    for _ in range(10_000):
        J = Arc(rng.random(), 2.0 ** rng.uniform(-12, -3))
        I = mei_cover(J)
        assert I.arc.contains_arc(J)
        worst = max(worst, I.length / J.length)
    assert worst <= 6.0


def test_mei_cover_straddling_zero():
    J = Arc(-0.005, 0.01)
    I = mei_cover(J)
    assert I.shift == pytest.approx(1 / 3)
    assert I.arc.contains_arc(J) and I.length <= 0.06
    with pytest.raises(DomainError):
        mei_cover(Arc(0.0, 0.2))


def test_pair_box_examples():
    b = containing_box_for_pair(0, 0)
    assert b.t == 1.0 and b.area == 1.0
    b = containing_box_for_pair(0.9, 0.9)
    d2 = (1 - 0.81) ** 2
    assert d2 / 8 <= b.area <= 16 * d2
    assert b.contains(0.9)


def test_pair_box_random():
    rng = np.random.default_rng(7)
    for i in range(10_000):
        if i % 2:
            z, w = uniform_disk(2, rng)
        else:
            th = 2 * math.pi * rng.random()
            z = (1 - 2.0 ** rng.uniform(-14, 0)) * np.exp(1j * th)
            w = (1 - 2.0 ** rng.uniform(-14, 0)) * np.exp(1j * (th + 2.0 ** rng.uniform(-14, 1.5)))
        b = containing_box_for_pair(z, w)
        d2 = abs(1 - z * np.conj(w)) ** 2
        assert b.contains(z) and b.contains(w)
        assert b.area / 16 <= d2 <= 8 * b.area


def test_image_box_identity_and_rotation():
    box = CarlesonBox(1.0, 1 / 16)
    rep = image_box_analysis(Identity(), box)
    assert rep.area_ratio == pytest.approx(1.0)
    assert rep.bounding_box.t == pytest.approx(box.t)
    rep = image_box_analysis(Rotation(0.5), box)
    assert rep.area_ratio == pytest.approx(1.0)
    assert rep.bounding_box.theta_center == pytest.approx(0.5)


def test_image_box_scale_stability():
    for name in ZOO:
        ratios = [image_box_analysis(ZOO[name], CarlesonBox(1.0, 2.0**-k)).area_ratio for k in range(3, 8)]
        assert max(ratios) / min(ratios) <= 4.0
    rs = [image_box_analysis(RadialStretch(2), CarlesonBox(0.2, t)).area_ratio for t in (1 / 8, 1 / 16, 1 / 32)]
    assert max(rs) / min(rs) <= 2.0


def test_image_box_preconditions():
    with pytest.raises(PreconditionError):
        image_box_analysis(Identity(), CarlesonBox(0.0, 0.5))
    with pytest.raises(PreconditionError):
        image_box_analysis(Identity(), CarlesonBox(0.0, 1 / 4), t0=1 / 8)


def test_rengel_and_sides():
    lo, hi = rengel_bounds(0.5)
    assert lo == pytest.approx(1 / (1.5 * math.pi), abs=1e-12)
    assert hi == pytest.approx(1.5 / math.pi, abs=1e-12)
    assert side_lengths(0.5) == pytest.approx((math.pi / 2, 0.5), abs=1e-15)
    for t in np.linspace(0.01, 0.89, 40):
        lo, hi = rengel_bounds(t)
        assert lo < hi
    for bad in (0.0, 1.0):
        with pytest.raises(DomainError):
            rengel_bounds(bad)
        with pytest.raises(DomainError):
            side_lengths(bad)
