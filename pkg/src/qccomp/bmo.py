"""Sampled BMO seminorms on the disk over three region flavors, and the Bloch seminorm.

Flavors:
    H  truncated Euclidean balls {w in D : |w - c| < r}, c in D
    B  Euclidean balls contained in D
    C  axis-parallel squares contained in D

Each seminorm is the maximum mean oscillation over a seeded family whose
i-th member depends only on (seed, i), so families for growing region
counts are nested.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import erf

from .bergman import GridFunction, apply_P_phi
from .errors import DivisionByZero, EmptyRegion, ParameterError
from .qcmap import QcMap
from .quadrature import TWO_PI, DiskQuadrature, build_quadrature, gauss_legendre_unit

FLAVORS = ("H", "C", "B")
MIN_SCALE = 2.0**-12
SMOOTHING = 2.0**-8
_NODES = 32


def _unit_rule(n: int = _NODES):
    return gauss_legendre_unit(n)


@dataclass(frozen=True)
class Ball:
    center: complex
    radius: float

    def rule(self, n: int = _NODES):
        x, w = _unit_rule(n)
        r = self.radius * x
        th = TWO_PI * np.arange(n) / n
        pts = self.center + (r[:, None] * np.exp(1j * th)[None, :]).ravel()
        wts = np.repeat(self.radius**2 * 2.0 * x * w / n, n)
        return pts, wts


@dataclass(frozen=True)
class Cube:
    center: complex
    half_side: float

    def rule(self, n: int = _NODES):
        x, w = _unit_rule(n)
        u = self.half_side * (2.0 * x - 1.0)
        wu = 2.0 * self.half_side * w
        pts = self.center + (u[:, None] + 1j * u[None, :]).ravel()
        return pts, np.outer(wu, wu).ravel() / math.pi


@dataclass(frozen=True)
class HBall:
    """{w : |w - center| < radius, |w| < bound}."""

    center: complex
    radius: float
    bound: float = 1.0

    def _reach(self, alpha):
        # distance from the center to the circle |w| = bound along direction alpha
        p = np.real(np.conj(self.center) * np.exp(1j * alpha))
        return -p + np.sqrt(p * p + self.bound**2 - abs(self.center) ** 2)

    def _kinks(self):
        c, r, R = self.center, self.radius, self.bound
        if abs(c) == 0:
            return []
        cosv = (R * R - abs(c) ** 2 - r * r) / (2.0 * r * abs(c))
        if abs(cosv) >= 1:
            return []
        base, off = math.atan2(c.imag, c.real), math.acos(cosv)
        return [base - off, base + off]

    def rule(self, n: int = _NODES):
        x, w = _unit_rule(n)
        kinks = self._kinks()
        if kinks:
            a0 = kinks[0]
            span = (kinks[1] - kinks[0]) % TWO_PI
            pieces = [(a0, a0 + span), (a0 + span, a0 + TWO_PI)]
            th, tw = [], []
            for a, b in pieces:
                m = max(4, int(round(n * (b - a) / TWO_PI)))
                xa, wa = gauss_legendre_unit(m)
                th.append(a + (b - a) * xa)
                tw.append((b - a) * wa)
            th, tw = np.concatenate(th), np.concatenate(tw)
        else:
            th = TWO_PI * np.arange(n) / n
            tw = np.full(n, TWO_PI / n)
        rho = np.minimum(self.radius, self._reach(th))
        r = rho[:, None] * x[None, :]
        pts = (self.center + r * np.exp(1j * th)[:, None]).ravel()
        wts = ((tw * rho**2)[:, None] * (x * w)[None, :]).ravel() / math.pi
        return pts, wts


def _values(f, pts):
    if isinstance(f, GridFunction):
        vals = np.asarray(f.values)
        if vals.size != pts.size:
            raise ParameterError("GridFunction must carry values at the region's nodes")
        return vals
    return np.asarray(f(pts))


def mean_oscillation(f, region) -> float:
    """Average of |f - average(f)| over the region, by its local rule."""
    pts, wts = region.rule()
    area = float(np.sum(wts))
    if area < 1e-12:
        raise EmptyRegion("region has (almost) no area inside the disk")
    vals = _values(f, pts)
    mean = np.dot(wts, vals) / area
    return float(np.dot(wts, np.abs(vals - mean)) / area)


@dataclass(frozen=True)
class BmoEstimate:
    flavor: str
    value: float
    n_regions: int
    seed: int


def _center_and_scale(rng: np.random.Generator):
    theta = TWO_PI * rng.random()
    if rng.random() < 0.5:
        rad = math.sqrt(rng.random())
    else:
        rad = 1.0 - 2.0 ** -int(rng.integers(1, 13))
    scale = 2.0 ** (math.log2(MIN_SCALE) * rng.random())
    return rad * complex(math.cos(theta), math.sin(theta)), scale


def region_family(flavor: str, index: int, seed: int, bound: float = 1.0) -> list:
    """Regions contributed by family member `index` (H also carries the B and C witnesses)."""
    if flavor not in FLAVORS:
        raise ParameterError(f"unknown flavor {flavor!r}")
    c, rho = _center_and_scale(np.random.default_rng([seed, index]))
    c, rho = bound * c, bound * rho
    gap = bound - abs(c)
    ball = Ball(c, min(rho, gap))
    h = min(rho, gap / math.sqrt(2.0))
    if flavor == "B":
        return [ball]
    if flavor == "C":
        return [Cube(c, h)]
    return [HBall(c, rho, bound), HBall(c, ball.radius, bound), HBall(c, h * math.sqrt(2.0), bound)]


def region_oscillations(f, flavor: str, n_regions: int, seed: int = 0, bound: float = 1.0) -> np.ndarray:
    """Per-member maximum mean oscillation, in family order."""
    return np.array([
        max(mean_oscillation(f, reg) for reg in region_family(flavor, i, seed, bound))
        for i in range(n_regions)
    ])


def bmo_seminorm(f, flavor: str, n_regions: int = 400, seed: int = 0) -> BmoEstimate:
    if n_regions < 100:
        raise ParameterError("n_regions must be at least 100")
    osc = region_oscillations(f, flavor, n_regions, seed)
    return BmoEstimate(flavor, float(osc.max()), n_regions, seed)


def _fd_derivative(f: Callable, z):
    # fourth-order central difference with a step scaled to the boundary distance
    h = np.minimum(1e-3, (1.0 - np.abs(z)) / 16.0)
    return (-f(z + 2 * h) + 8 * f(z + h) - 8 * f(z - h) + f(z - 2 * h)) / (12 * h)


def bloch_seminorm(f: Callable, derivative: Callable | None = None, n_angles: int = 256, max_level: int = 30) -> float:
    """sup (1 - |z|^2) |f'(z)| over a grid refined toward the circle."""
    radii = np.unique(np.concatenate([np.linspace(0.0, 0.9, 91), 1.0 - 2.0 ** -np.arange(4, max_level + 1, 0.25)]))
    th = TWO_PI * np.arange(n_angles) / n_angles
    z = (radii[:, None] * np.exp(1j * th)[None, :]).ravel()
    d = derivative(z) if derivative is not None else _fd_derivative(f, z)
    return float(np.max((1.0 - np.abs(z) ** 2) * np.abs(d)))


def reimann_composition_ratio(phi: QcMap, f: Callable, n_regions: int = 400, seed: int = 0) -> float:
    """BMO_C(f o phi) / BMO_C(f) on a shared family."""
    base = bmo_seminorm(f, "C", n_regions, seed).value
    if base < 1e-14:
        raise DivisionByZero("f has vanishing BMO_C estimate")
    comp = bmo_seminorm(lambda z: f(phi.evaluate(z)), "C", n_regions, seed).value
    return comp / base


def pphi_oscillations(phi: QcMap, f: Callable, n_regions: int, seed: int = 0,
                      q_source: DiskQuadrature | None = None, bound: float = 0.9,
                      n_nodes: int = 16) -> np.ndarray:
    """Per-member oscillations of P_phi f over the H family truncated to |w| < bound.

    Targets stay inside |w| < bound because the source quadrature cannot
    resolve the kernel at targets closer to the circle.
    """
    q = q_source or build_quadrature(32, 256)
    fv = GridFunction(np.asarray(f(q.points), complex), "source")
    rules = [region_family("H", i, seed, bound)[0].rule(n_nodes) for i in range(n_regions)]
    targets = np.concatenate([p for p, _ in rules])
    vals = apply_P_phi(phi, fv, q, targets=targets).values
    chunks = np.split(vals, np.cumsum([p.size for p, _ in rules])[:-1])
    return np.array([mean_oscillation(GridFunction(v), _Frozen(*r)) for v, r in zip(chunks, rules)])


@dataclass(frozen=True, eq=False)
class _Frozen:
    pts: np.ndarray
    wts: np.ndarray

    def rule(self):
        return self.pts, self.wts


def pphi_linf_to_bmo(phi: QcMap, f_bounded: Callable, n_regions: int = 100, seed: int = 0,
                     q_source: DiskQuadrature | None = None, bound: float = 0.9) -> float:
    return float(pphi_oscillations(phi, f_bounded, n_regions, seed, q_source, bound).max())


# test functions (discontinuous ones mollified at scale 2^-8)


def log_weight(z):
    return np.log1p(-np.abs(z) ** 2)


def real_part(z):
    return np.real(z)


def smoothed_sign_real(z):
    return erf(np.real(z) / SMOOTHING)


def smoothed_radial_sign(z, radius: float = 0.5):
    return erf((np.abs(z) - radius) / SMOOTHING)


TEST_FAMILY = {
    "log_weight": log_weight,
    "real_part": real_part,
    "smoothed_sign": smoothed_sign_real,
}
