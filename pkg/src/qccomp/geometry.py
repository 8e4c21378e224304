"""Pseudohyperbolic disks, Carleson boxes and shifted dyadic grids on the circle.

Arcs of the unit circle are measured in normalized length (full circle = 1),
so an arc I has |I| in (0, 1] and its Carleson box is
Q_I = {z : 1 - |I| <= |z| < 1, z/|z| in I}.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist

from .distortion import psi
from .errors import ConstructionFailed, CoverNotFound, DomainError, PreconditionError
from .qcmap import QcMap, boundary_lipschitz_estimate
from .quadrature import TWO_PI

MEMBERSHIP_TOL = 1e-9


def tau(a: complex, z):
    """Disk automorphism tau_a(z) = (a - z) / (1 - conj(a) z)."""
    z = np.asarray(z, complex)
    return (a - z) / (1.0 - np.conj(a) * z)


def _open_disk(z):
    z = np.asarray(z, complex)
    if np.any(~(np.abs(z) < 1.0)):
        raise DomainError("point outside the open unit disk")
    return z


@dataclass(frozen=True)
class PseudoHyperbolicDisk:
    center: complex
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", complex(self.center))
        if not abs(self.center) < 1:
            raise DomainError("center must lie in the open disk")
        if not 0 < self.radius < 1:
            raise DomainError("radius must lie in (0, 1)")

    @property
    def euclidean_center(self) -> complex:
        a, r = self.center, self.radius
        return (1 - r * r) * a / (1 - r * r * abs(a) ** 2)

    @property
    def euclidean_radius(self) -> float:
        a, r = self.center, self.radius
        return (1 - abs(a) ** 2) * r / (1 - r * r * abs(a) ** 2)

    @property
    def area(self) -> float:
        """Normalized area (Euclidean radius squared)."""
        return self.euclidean_radius**2

    def contains(self, z):
        return np.abs(tau(self.center, _open_disk(z))) < self.radius

    def contains_euclidean(self, z):
        return np.abs(_open_disk(z) - self.euclidean_center) < self.euclidean_radius

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Uniform points of the Euclidean realization."""
        rho = self.euclidean_radius * np.sqrt(rng.random(n))
        return self.euclidean_center + rho * np.exp(1j * TWO_PI * rng.random(n))

    def boundary_points(self, n: int) -> np.ndarray:
        th = TWO_PI * np.arange(n) / n
        return self.euclidean_center + self.euclidean_radius * np.exp(1j * th)


def ph_membership(d: PseudoHyperbolicDisk, z):
    out = d.contains(z)
    return bool(out) if out.ndim == 0 else out


def ph_disk_area(center: complex, rho: float) -> float:
    """Normalized area of D^ph(center, rho)."""
    c2 = abs(center) ** 2
    return rho * rho * (1 - c2) ** 2 / (1 - rho * rho * c2) ** 2


@dataclass(frozen=True)
class SandwichReport:
    outer_violations: int
    inner_violations: int
    n_outer: int
    n_inner: int
    worst_outer_excess: float
    worst_inner_excess: float


def ph_image_sandwich(phi: QcMap, d: PseudoHyperbolicDisk, n_samples: int = 10_000, seed: int = 0,
                      tol: float = MEMBERSHIP_TOL) -> SandwichReport:
    """Count sample points violating D^ph(phi(a), psi_{1/K}(r)) in phi(d) in D^ph(phi(a), psi_K(r))."""
    rng = np.random.default_rng(seed)
    K, a, r = phi.K_bound, d.center, d.radius
    fa = complex(phi.evaluate(a))

    n_b = n_samples // 2
    src = np.concatenate([d.boundary_points(n_b), d.sample(n_samples - n_b, rng)])
    src = src[np.abs(src) < 1]
    outer = np.abs(tau(fa, phi.evaluate(src))) - psi(K, r)

    inner_disk = PseudoHyperbolicDisk(fa, psi(1.0 / K, r))
    tgt = np.concatenate([inner_disk.boundary_points(n_b), inner_disk.sample(n_samples - n_b, rng)])
    tgt = tgt[np.abs(tgt) < 1]
    inner = np.abs(tau(a, phi.inverse_evaluate(tgt))) - r

    return SandwichReport(
        int(np.count_nonzero(outer > tol)),
        int(np.count_nonzero(inner > tol)),
        int(src.size),
        int(tgt.size),
        float(outer.max()),
        float(inner.max()),
    )


@dataclass(frozen=True)
class AreaCheck:
    estimate: float
    sigma: float
    lower: float
    upper: float

    @property
    def within_3sigma(self) -> bool:
        return self.lower - 3 * self.sigma <= self.estimate <= self.upper + 3 * self.sigma


def ph_area_check(phi: QcMap, d: PseudoHyperbolicDisk, n_samples: int = 100_000, seed: int = 0) -> AreaCheck:
    """Hit-or-miss area of phi(d) inside the outer disk, with the closed-form bounds."""
    rng = np.random.default_rng(seed)
    K = phi.K_bound
    fa = complex(phi.evaluate(d.center))
    outer = PseudoHyperbolicDisk(fa, psi(K, d.radius))
    u = outer.sample(n_samples, rng)
    u = u[np.abs(u) < 1]
    hit = np.abs(tau(d.center, phi.inverse_evaluate(u))) < d.radius
    p = np.count_nonzero(hit) / n_samples
    return AreaCheck(
        outer.area * p,
        outer.area * math.sqrt(p * (1 - p) / n_samples),
        ph_disk_area(fa, psi(1.0 / K, d.radius)),
        outer.area,
    )


# --- arcs, boxes, dyadic grids ----------------------------------------------


def _check_t(t: float) -> float:
    if not 0 < t <= 1:
        raise DomainError("box length must lie in (0, 1]")
    return float(t)


@dataclass(frozen=True)
class Arc:
    """Arc [start, start + length) of the circle in normalized units."""

    start: float
    length: float

    def __post_init__(self):
        object.__setattr__(self, "start", float(self.start) % 1.0)
        if not 0 < self.length <= 1:
            raise DomainError("arc length must lie in (0, 1]")

    @property
    def midpoint(self) -> float:
        return (self.start + 0.5 * self.length) % 1.0

    def contains_arc(self, other: "Arc", tol: float = 1e-12) -> bool:
        if self.length >= 1.0:
            return True
        offset = (other.start - self.start) % 1.0
        if offset > 1.0 - tol:
            offset -= 1.0
        return offset >= -tol and offset + other.length <= self.length + tol


@dataclass(frozen=True)
class CarlesonBox:
    theta_center: float
    t: float

    def __post_init__(self):
        _check_t(self.t)

    @property
    def area(self) -> float:
        return box_area(self.t)

    @property
    def center(self) -> complex:
        return (1.0 - 0.5 * self.t) * complex(math.cos(self.theta_center), math.sin(self.theta_center))

    @property
    def arc(self) -> Arc:
        return Arc(self.theta_center / TWO_PI - 0.5 * self.t, self.t)

    def contains_polar(self, s, theta):
        """Membership for points (1 - s) e^{i theta}."""
        s = np.asarray(s, float)
        dth = np.abs(np.angle(np.exp(1j * (np.asarray(theta, float) - self.theta_center))))
        angular = dth <= math.pi * self.t if self.t < 1 else np.ones_like(s, bool)
        return (s <= self.t) & (s > 0) & angular

    def contains(self, z):
        z = np.asarray(z, complex)
        out = self.contains_polar(1.0 - np.abs(z), np.angle(z))
        return bool(out) if out.ndim == 0 else out


def box_area(t: float) -> float:
    t = _check_t(t)
    return t * t * (2.0 - t)


def box_contains(b: CarlesonBox, z):
    return b.contains(z)


def box_center(b: CarlesonBox) -> complex:
    return b.center


def box_from_arc(arc: Arc) -> CarlesonBox:
    return CarlesonBox(TWO_PI * (arc.start + 0.5 * arc.length), arc.length)


@dataclass(frozen=True)
class DyadicInterval:
    shift: float
    level: int
    index: int

    @property
    def length(self) -> float:
        return 2.0**-self.level

    @property
    def arc(self) -> Arc:
        return Arc(self.index * self.length + self.shift, self.length)

    @property
    def box(self) -> CarlesonBox:
        return box_from_arc(self.arc)


@dataclass(frozen=True)
class DyadicGrid:
    shift: float = 0.0
    max_level: int = 20

    def intervals(self, level: int) -> list[DyadicInterval]:
        return [DyadicInterval(self.shift, level, m) for m in range(2**level)]

    def starts(self, level: int) -> np.ndarray:
        return (np.arange(2**level) * 2.0**-level + self.shift) % 1.0

    def locate(self, x, level: int):
        """Index of the level-j interval containing the normalized angle x."""
        return np.floor(((np.asarray(x, float) - self.shift) % 1.0) * 2**level).astype(int) % 2**level


GRIDS = (DyadicGrid(0.0), DyadicGrid(1.0 / 3.0))


def mei_cover(J: Arc, max_level: int = 60) -> DyadicInterval:
    """Finest interval of D^0 u D^{1/3} containing J, of length at most 6|J|."""
    if J.length > 1.0 / 6.0:
        raise DomainError("mei_cover requires |J| <= 1/6")
    j_lo = max(0, math.ceil(math.log2(1.0 / (6.0 * J.length)) - 1e-12))
    j_hi = min(max_level, math.floor(math.log2(1.0 / J.length) + 1e-12))
    for level in range(j_hi, j_lo - 1, -1):
        for grid in GRIDS:
            cand = DyadicInterval(grid.shift, level, int(grid.locate(J.start, level)))
            if cand.arc.contains_arc(J):
                return cand
    raise CoverNotFound(f"no grid interval covers {J}")


def _arc_midpoint(a: float, b: float) -> tuple[float, float]:
    """Midpoint angle of the shorter arc between a and b, and that arc's normalized length."""
    d = math.remainder(b - a, TWO_PI)
    return a + 0.5 * d, abs(d) / TWO_PI


def containing_box_for_pair(z: complex, w: complex, k_range=range(-3, 4)) -> CarlesonBox:
    """Box Q_I containing z and w with |Q_I|/16 <= |1 - z conj(w)|^2 <= 8 |Q_I|."""
    z, w = complex(z), complex(w)
    if not (abs(z) < 1 and abs(w) < 1):
        raise DomainError("points must lie in the open disk")
    d = abs(1.0 - z * w.conjugate())
    lo = max(1.0 - abs(z), 1.0 - abs(w))
    mid, gap = _arc_midpoint(math.atan2(z.imag, z.real), math.atan2(w.imag, w.real))
    for k in k_range:
        t = min(max(2.0**k * d, lo), 1.0)
        box = CarlesonBox(mid, t)
        inside = t >= 1.0 or (gap <= t and box.contains(z) and box.contains(w))
        if inside and box.area / 16.0 <= d * d <= 8.0 * box.area:
            return box
    raise ConstructionFailed(f"no candidate box for ({z}, {w})")


@dataclass(frozen=True)
class ImageBoxReport:
    bounding_box: CarlesonBox
    area_ratio: float
    diameter_estimate: float
    preimage_area: float
    sigma: float


def _sample_box_polar(t: float, theta_c: float, n: int, rng):
    """Area-uniform points of Q_I in (s, theta) form."""
    rho = np.sqrt(1.0 - rng.random(n) * (1.0 - (1.0 - t) ** 2))
    theta = theta_c + math.pi * t * (2.0 * rng.random(n) - 1.0)
    return 1.0 - rho, theta


def _box_outline(t: float, theta_c: float, n: int):
    """Dense samples of the boundary of Q_I in (s, theta) form."""
    half = math.pi * t
    u = np.linspace(-1.0, 1.0, n)
    v = np.linspace(0.0, 1.0, n)
    s = np.concatenate([np.zeros(n), np.full(n, t), t * v, t * v])
    th = np.concatenate([theta_c + half * u, theta_c + half * u, np.full(n, theta_c - half), np.full(n, theta_c + half)])
    return s, th


def image_box_analysis(phi: QcMap, box: CarlesonBox, t0: float = 1.0 / 8.0, n_boundary: int = 2048,
                       n_samples: int = 100_000, seed: int = 0) -> ImageBoxReport:
    """Smallest box Q_J aligned with phi^{-1}(midpoint of I) containing phi^{-1}(Q_I), and |Q_J| / |phi^{-1}(Q_I)|."""
    if box.t > t0:
        raise PreconditionError(f"box length {box.t} exceeds t0 = {t0}")
    coarse = boundary_lipschitz_estimate(phi, "inverse", 4096)
    fine = boundary_lipschitz_estimate(phi, "inverse", 8192)
    if not (math.isfinite(fine) and fine <= 1.5 * coarse):
        raise PreconditionError("inverse boundary trace is not bi-Lipschitz at sampled resolution")
    inv = phi.inverse()
    s, th = _box_outline(box.t, box.theta_center, n_boundary)
    s_img, th_img = inv.polar(s, th)
    theta_J = float(inv.boundary(box.theta_center))
    dth = np.abs(np.angle(np.exp(1j * (th_img - theta_J))))
    t_J = min(1.0, max(float(np.max(s_img)), float(np.max(dth)) / math.pi))
    Q_J = CarlesonBox(theta_J, t_J)

    rng = np.random.default_rng(seed)
    su, tu = _sample_box_polar(t_J, theta_J, n_samples, rng)
    sf, tf = phi.polar(su, tu)
    p = np.count_nonzero(box.contains_polar(sf, tf)) / n_samples
    if p == 0:
        raise PreconditionError("preimage area not resolved by sampling")
    pts = (1.0 - s_img) * np.exp(1j * th_img)
    step = max(1, pts.size // 2000)
    diam = float(np.max(pdist(np.column_stack([pts.real, pts.imag])[::step])))
    return ImageBoxReport(Q_J, 1.0 / p, diam, Q_J.area * p, Q_J.area * math.sqrt(p * (1 - p) / n_samples))


def side_lengths(t: float) -> tuple[float, float]:
    """(s_a, s_b) of Q_I viewed as a quadrilateral."""
    if not 0 < t < 1:
        raise DomainError("need 0 < t < 1")
    return TWO_PI * t * (1.0 - t), float(t)


def rengel_bounds(t: float) -> tuple[float, float]:
    """Explicit lower and upper bounds for the conformal module of Q_I."""
    if not 0 < t < 1:
        raise DomainError("need 0 < t < 1")
    return 1.0 / (math.pi * (2.0 - t)), (2.0 - t) / (4.0 * math.pi * (1.0 - t) ** 2)
