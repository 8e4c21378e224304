"""Closed-form quasiconformal self-maps of the disk and their functionals.

Every built-in acts on polar coordinates separately in the sense that it
maps (s, theta), with s = 1 - |z|, to (s', theta') without forming z.  Keeping
the boundary distance s explicit lets m_phi and N_phi be evaluated to full
relative precision even at 1 - |z| ~ 1e-12.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy.spatial.distance import pdist

from .distortion import psi
from .errors import DomainError, NumericalError, PreconditionError
from .quadrature import TWO_PI, build_quadrature

__all__ = [
    "QcMap", "Identity", "Rotation", "RadialStretch", "Spiral", "AngularShear", "Composition",
    "BoundaryMap", "map_from_spec", "builtin_zoo", "shear_with_slopes",
    "m_ratio", "m_ratio_of_inverse", "sup_m_ratio", "a_phi", "counting_N", "counting_N_polar",
    "boundary_lipschitz_estimate", "boundary_map", "koskela_diameter_check", "KoskelaCheck",
    "hersch_pfluger_violations", "max_beltrami", "finite_difference_wirtinger",
]


def _check_disk(z) -> tuple[np.ndarray, bool]:
    z = np.asarray(z, dtype=complex)
    if np.any(~(np.abs(z) < 1)):
        raise DomainError("point outside the open unit disk")
    return z, z.ndim == 0


def _ret(x, scalar):
    return x[()] if scalar else x


class QcMap:
    """Base class; subclasses supply polar(), wirtinger(), boundary() and inverse()."""

    K_bound: float = 1.0
    preserves_rays = True
    singular_at_origin = False

    def polar(self, s, theta):
        raise NotImplementedError

    def wirtinger(self, z):
        """(d phi/dz, d phi/dzbar) at z; z != 0 for maps singular at the origin."""
        raise NotImplementedError

    def boundary(self, theta):
        """Lift of the boundary trace: an increasing map R -> R, theta + 2pi -> value + 2pi."""
        raise NotImplementedError

    def inverse(self) -> "QcMap":
        raise NotImplementedError

    def angular_breaks(self):
        """Angles in the domain along whose rays the map fails to be smooth."""
        return None

    def to_spec(self) -> dict:
        raise NotImplementedError

    # derived operations

    def evaluate(self, z):
        z, scalar = _check_disk(z)
        r = np.abs(z)
        s, th = self.polar(1.0 - r, np.angle(z))
        w = np.where(r == 0, 0j, (1.0 - s) * np.exp(1j * np.where(r == 0, 0.0, th)))
        return _ret(w, scalar)

    def inverse_evaluate(self, w):
        return self.inverse().evaluate(w)

    def _derivatives(self, z):
        z, scalar = _check_disk(z)
        if self.singular_at_origin and np.any(z == 0):
            raise DomainError("map is not differentiable at the origin")
        a, b = self.wirtinger(z)
        return np.asarray(a), np.asarray(b), scalar

    def jacobian(self, z):
        a, b, scalar = self._derivatives(z)
        return _ret(np.abs(a) ** 2 - np.abs(b) ** 2, scalar)

    def beltrami(self, z):
        a, b, scalar = self._derivatives(z)
        return _ret(b / a, scalar)


@dataclass(frozen=True)
class Identity(QcMap):
    K_bound: float = field(default=1.0, init=False)

    def polar(self, s, theta):
        return np.asarray(s, float), np.asarray(theta, float)

    def evaluate(self, z):
        z, scalar = _check_disk(z)
        return _ret(z.copy(), scalar)

    def wirtinger(self, z):
        return np.ones_like(z), np.zeros_like(z)

    def boundary(self, theta):
        return np.asarray(theta, float)

    def inverse(self):
        return self

    def to_spec(self):
        return {"kind": "identity"}


@dataclass(frozen=True)
class Rotation(QcMap):
    angle: float = 0.0
    K_bound: float = field(default=1.0, init=False)

    def polar(self, s, theta):
        return np.asarray(s, float), np.asarray(theta, float) + self.angle

    def evaluate(self, z):
        z, scalar = _check_disk(z)
        return _ret(z * np.exp(1j * self.angle), scalar)

    def wirtinger(self, z):
        return np.full(np.shape(z), np.exp(1j * self.angle)), np.zeros(np.shape(z), complex)

    def boundary(self, theta):
        return np.asarray(theta, float) + self.angle

    def inverse(self):
        return Rotation(-self.angle)

    def to_spec(self):
        return {"kind": "rotation", "angle": self.angle}


def _power_gap(s, exponent):
    """1 - (1 - s)^exponent without cancellation."""
    with np.errstate(divide="ignore"):
        return -np.expm1(exponent * np.log1p(-np.asarray(s, float)))


@dataclass(frozen=True)
class Spiral(QcMap):
    """z |z|^{1/K - 1 + i twist}: radial stretch followed by a log-spiral twist."""

    K: float = 1.0
    twist: float = 0.0
    preserves_rays = False

    def __post_init__(self):
        if not self.K > 0:
            raise DomainError("K must be positive")

    @property
    def _beta(self) -> complex:
        return complex(1.0 / self.K - 1.0, self.twist)

    @property
    def singular_at_origin(self):
        return self._beta != 0

    @cached_property
    def K_bound(self) -> float:
        b = self._beta
        k = abs(b) / abs(2.0 + b)
        return (1.0 + k) / (1.0 - k)

    def polar(self, s, theta):
        s = np.asarray(s, float)
        th = np.asarray(theta, float)
        if self.twist:
            with np.errstate(divide="ignore", invalid="ignore"):
                th = th + self.twist * np.log1p(-s)
        return _power_gap(s, 1.0 / self.K), th

    def evaluate(self, z):
        # the polar form keeps precision near the circle, z |z|^beta near the origin
        out = np.atleast_1d(np.asarray(QcMap.evaluate(self, z), complex)).copy()
        z, scalar = _check_disk(z)
        z = np.atleast_1d(z)
        r = np.abs(z)
        inner = (r > 0) & (r < 0.5)
        out[inner] = z[inner] * np.exp(self._beta * np.log(r[inner]))
        return _ret(out[0] if scalar else out, scalar)

    def wirtinger(self, z):
        b = self._beta
        z = np.asarray(z, complex)
        zb = np.exp(b * np.log(np.abs(z)))
        return (1.0 + 0.5 * b) * zb, 0.5 * b * zb * z / np.conj(z)

    def boundary(self, theta):
        return np.asarray(theta, float)

    def inverse(self):
        return Spiral(1.0 / self.K, -self.twist * self.K)

    def to_spec(self):
        return {"kind": "spiral", "K": self.K, "twist": self.twist}


@dataclass(frozen=True)
class RadialStretch(Spiral):
    """z |z|^{1/K - 1}."""

    twist: float = field(default=0.0, init=False)
    preserves_rays = True

    def inverse(self):
        return RadialStretch(1.0 / self.K)

    def to_spec(self):
        return {"kind": "radial_stretch", "K": self.K}


@dataclass(frozen=True, eq=False)
class AngularShear(QcMap):
    """r e^{i theta} -> r e^{i h(theta)} with h piecewise linear.

    `knots` (x_0 < ... < x_n = x_0 + 2pi) and `values` (y_0 < ... < y_n = y_0 + 2pi)
    define one period of the lift h; the inverse swaps the two arrays.
    """

    knots: tuple
    values: tuple
    singular_at_origin = True

    def __post_init__(self):
        x = np.asarray(self.knots, float)
        y = np.asarray(self.values, float)
        if x.shape != y.shape or x.size < 2:
            raise DomainError("knots and values must be equal-length arrays")
        if not (np.all(np.diff(x) > 0) and np.all(np.diff(y) > 0)):
            raise DomainError("profile must be strictly increasing")
        if not (math.isclose(x[-1] - x[0], TWO_PI) and math.isclose(y[-1] - y[0], TWO_PI)):
            raise DomainError("profile must advance by 2pi over one period")
        object.__setattr__(self, "knots", tuple(map(float, x)))
        object.__setattr__(self, "values", tuple(map(float, y)))

    @cached_property
    def _x(self):
        return np.asarray(self.knots)

    @cached_property
    def _y(self):
        return np.asarray(self.values)

    @cached_property
    def slopes(self) -> np.ndarray:
        return np.diff(self._y) / np.diff(self._x)

    @cached_property
    def K_bound(self) -> float:
        return float(max(self.slopes.max(), 1.0 / self.slopes.min()))

    def _reduce(self, theta):
        theta = np.asarray(theta, float)
        k = np.floor((theta - self._x[0]) / TWO_PI)
        return theta - TWO_PI * k, k

    def boundary(self, theta):
        t, k = self._reduce(theta)
        return np.interp(t, self._x, self._y) + TWO_PI * k

    def _slope_at(self, theta):
        t, _ = self._reduce(theta)
        idx = np.clip(np.searchsorted(self._x, t, side="right") - 1, 0, self.slopes.size - 1)
        return self.slopes[idx]

    def polar(self, s, theta):
        return np.asarray(s, float), self.boundary(theta)

    def wirtinger(self, z):
        z = np.asarray(z, complex)
        th = np.angle(z)
        h = self.boundary(th)
        d = self._slope_at(th)
        return 0.5 * (1.0 + d) * np.exp(1j * (h - th)), 0.5 * (1.0 - d) * np.exp(1j * (h + th))

    def inverse(self):
        return AngularShear(self.values, self.knots)

    def angular_breaks(self):
        return np.mod(self._x[:-1], TWO_PI)

    def to_spec(self):
        return {"kind": "angular_shear", "knots": list(self.knots), "values": list(self.values)}


def shear_with_slopes(slopes: Sequence[float], fractions: Sequence[float] | None = None, offset: float = 0.0) -> AngularShear:
    """Piecewise-linear shear built from piece slopes.

    With two slopes s1 < 1 < s2 and no `fractions`, the piece widths are the
    unique ones giving total advance 2pi; slopes (1/2, 2) split the circle as
    (4pi/3, 2pi/3).  With `fractions`, the slopes are taken as relative and
    rescaled so the lift advances by exactly 2pi.
    """
    slopes = np.asarray(slopes, float)
    if fractions is None:
        if slopes.size != 2 or not slopes[0] < 1.0 < slopes[1]:
            raise DomainError("without fractions, give two slopes s1 < 1 < s2")
        s1, s2 = slopes
        widths = TWO_PI * np.array([s2 - 1.0, 1.0 - s1]) / (s2 - s1)
    else:
        widths = TWO_PI * np.asarray(fractions, float) / np.sum(fractions)
        slopes = slopes * TWO_PI / np.sum(slopes * widths)
    x = offset + np.concatenate([[0.0], np.cumsum(widths)])
    y = offset + np.concatenate([[0.0], np.cumsum(slopes * widths)])
    x[-1] = x[0] + TWO_PI
    y[-1] = y[0] + TWO_PI
    return AngularShear(tuple(x), tuple(y))


@dataclass(frozen=True, eq=False)
class Composition(QcMap):
    """maps[0] applied first, then maps[1], and so on."""

    maps: tuple

    def __post_init__(self):
        if len(self.maps) == 0:
            raise DomainError("composition needs at least one map")
        object.__setattr__(self, "maps", tuple(self.maps))

    @property
    def K_bound(self):
        return float(np.prod([m.K_bound for m in self.maps]))

    @property
    def preserves_rays(self):
        return all(m.preserves_rays for m in self.maps)

    @property
    def singular_at_origin(self):
        return any(m.singular_at_origin for m in self.maps)

    def polar(self, s, theta):
        for m in self.maps:
            s, theta = m.polar(s, theta)
        return s, theta

    def wirtinger(self, z):
        p = np.asarray(z, complex)
        a = np.ones_like(p)
        b = np.zeros_like(p)
        for m in self.maps:
            ga, gb = m.wirtinger(p)
            a, b = ga * a + gb * np.conj(b), ga * b + gb * np.conj(a)
            p = m.evaluate(p)
        return a, b

    def boundary(self, theta):
        for m in self.maps:
            theta = m.boundary(theta)
        return theta

    def inverse(self):
        return Composition(tuple(m.inverse() for m in reversed(self.maps)))

    def angular_breaks(self):
        out = []
        pull = []  # inverse boundary maps of the stages already applied
        for m in self.maps:
            br = m.angular_breaks()
            if br is not None:
                b = np.asarray(br, float)
                for inv in reversed(pull):
                    b = inv.boundary(b)
                out.append(b)
            if not m.preserves_rays:
                break
            pull.append(m.inverse())
        return np.mod(np.concatenate(out), TWO_PI) if out else None

    def to_spec(self):
        return {"kind": "composition", "maps": [m.to_spec() for m in self.maps]}


def map_from_spec(spec: dict) -> QcMap:
    kind = spec.get("kind")
    extra = set(spec) - {"kind"}
    if kind == "identity":
        allowed = set()
        m = Identity()
    elif kind == "rotation":
        allowed = {"angle"}
        m = Rotation(float(spec.get("angle", 0.0)))
    elif kind == "radial_stretch":
        allowed = {"K"}
        m = RadialStretch(float(spec["K"]))
    elif kind == "spiral":
        allowed = {"K", "twist"}
        m = Spiral(float(spec["K"]), float(spec.get("twist", 0.0)))
    elif kind == "angular_shear":
        if "slopes" in spec:
            allowed = {"slopes", "fractions", "offset"}
            m = shear_with_slopes(spec["slopes"], spec.get("fractions"), float(spec.get("offset", 0.0)))
        else:
            allowed = {"knots", "values"}
            m = AngularShear(tuple(spec["knots"]), tuple(spec["values"]))
    elif kind == "composition":
        allowed = {"maps"}
        m = Composition(tuple(map_from_spec(s) for s in spec["maps"]))
    else:
        raise DomainError(f"unknown map kind {kind!r}")
    if extra - allowed:
        raise DomainError(f"unknown keys for {kind}: {sorted(extra - allowed)}")
    return m


def builtin_zoo() -> dict[str, QcMap]:
    """The four non-conformal maps used by the invariant suites."""
    return {
        "radial_stretch_2": RadialStretch(2.0),
        "spiral_1.5_0.5": Spiral(1.5, 0.5),
        "angular_shear_half_2": shear_with_slopes([0.5, 2.0]),
        "composition": Composition((shear_with_slopes([0.5, 2.0], offset=0.3), RadialStretch(1.5), Rotation(0.7))),
    }


# --- functionals -----------------------------------------------------------


def m_ratio(phi: QcMap, z):
    """(1 - |z|) / (1 - |phi(z)|)."""
    z, scalar = _check_disk(z)
    s = 1.0 - np.abs(z)
    s_img, _ = phi.polar(s, np.angle(z))
    return _ret(s / s_img, scalar)


def m_ratio_of_inverse(phi: QcMap, w):
    return m_ratio(phi.inverse(), w)


def _golden_max(f, a, b, iters=40):
    g = (math.sqrt(5.0) - 1.0) / 2.0
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = f(d)
    return (c, fc) if fc >= fd else (d, fd)


def sup_m_ratio(phi: QcMap, levels: int = 40, n_angles: int = 256, rounds: int = 3) -> float:
    """Sampled supremum of m_phi with local golden-section refinement."""
    s_grid = np.concatenate([1.0 - np.linspace(0.0, 0.5, 17)[:-1], 2.0 ** -np.arange(1, levels + 1)])
    log_s = np.log(s_grid)
    th_grid = TWO_PI * np.arange(n_angles) / n_angles
    S, T = np.meshgrid(s_grid, th_grid, indexing="ij")
    vals = S / phi.polar(S, T)[0]
    i, j = np.unravel_index(np.argmax(vals), vals.shape)
    best = float(vals[i, j])

    def m_at(ls, th):
        s = math.exp(ls)
        return float(s / phi.polar(np.array(s), np.array(th))[0])

    ls, th = log_s[i], th_grid[j]
    lo_ls, hi_ls = log_s[min(i + 1, log_s.size - 1)], log_s[max(i - 1, 0)]
    dth = TWO_PI / n_angles
    for _ in range(rounds):
        if hi_ls > lo_ls:
            ls, v = _golden_max(lambda x: m_at(x, th), lo_ls, hi_ls)
            best = max(best, v)
        th, v = _golden_max(lambda t: m_at(ls, t), th - dth, th + dth)
        best = max(best, v)
    return best


def a_phi(phi: QcMap, z, n: int = 64):
    """exp of half the mean of log J(., phi) over B_z = D(z, (1 - |z|)/2)."""
    z, scalar = _check_disk(z)
    zf = np.atleast_1d(z)
    base = build_quadrature(n, n)
    local = base.radial_nodes[:, None] * np.exp(1j * base.angles)[None, :]
    wts = (base.radial_weights[:, None] * base.angle_weights[None, :]).ravel()
    rho = 0.5 * (1.0 - np.abs(zf))
    pts = zf[:, None] + rho[:, None] * local.ravel()[None, :]
    J = phi.jacobian(pts)
    if np.any(~(J > 0)):
        raise NumericalError("non-positive Jacobian at a quadrature node")
    out = np.exp(0.5 * (np.log(J) @ wts))
    return _ret(out.reshape(np.shape(z)), scalar)


def counting_N(phi: QcMap, z):
    """log(1 / |phi^{-1}(z)|), evaluated through the boundary gap of the preimage."""
    z, scalar = _check_disk(z)
    if np.any(z == 0):
        raise DomainError("counting function undefined at 0")
    s_pre, _ = phi.inverse().polar(1.0 - np.abs(z), np.angle(z))
    return _ret(-np.log1p(-s_pre), scalar)


def counting_N_polar(phi: QcMap, s, theta):
    """counting_N at (1 - s) e^{i theta}; keeps full precision for tiny s."""
    s = np.asarray(s, float)
    if np.any(~((s > 0) & (s < 1))):
        raise DomainError("need 0 < s < 1")
    s_pre, _ = phi.inverse().polar(s, np.asarray(theta, float))
    return -np.log1p(-s_pre)


@dataclass(frozen=True)
class BoundaryMap:
    phi: QcMap
    sampled_lipschitz: float
    sampled_inverse_lipschitz: float

    def forward(self, theta):
        return self.phi.boundary(theta)

    def inverse(self, theta):
        return self.phi.inverse().boundary(theta)


def boundary_lipschitz_estimate(phi: QcMap, direction: str = "forward", n_points: int = 4096, max_level: int = 12) -> float:
    """Largest difference quotient of the boundary lift over dyadic separations."""
    if direction not in ("forward", "inverse"):
        raise ValueError("direction must be 'forward' or 'inverse'")
    trace = phi.boundary if direction == "forward" else phi.inverse().boundary
    theta = TWO_PI * np.arange(n_points) / n_points
    base = trace(theta)
    best = 0.0
    for k in range(1, max_level + 1):
        delta = TWO_PI * 2.0**-k
        best = max(best, float(np.max((trace(theta + delta) - base) / delta)))
    return best


def boundary_map(phi: QcMap) -> BoundaryMap:
    return BoundaryMap(phi, boundary_lipschitz_estimate(phi, "forward"), boundary_lipschitz_estimate(phi, "inverse"))


@dataclass(frozen=True)
class KoskelaCheck:
    diameter_of_image: float
    line_integral_of_a_phi: float
    ratio: float
    arc_length: float
    distance_to_boundary: float


def _resample_polyline(vertices, n):
    v = np.asarray(vertices, complex)
    seg = np.abs(np.diff(v))
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    t = np.linspace(0.0, cum[-1], n + 1)
    return np.interp(t, cum, v.real) + 1j * np.interp(t, cum, v.imag), cum[-1]


def koskela_diameter_check(phi: QcMap, arc, n_samples: int = 1000, n_quad: int = 32) -> KoskelaCheck:
    """Both sides of diam(phi(gamma)) <~ int_gamma a_phi |dz| on a polyline arc."""
    arc = np.asarray(arc, complex)
    _check_disk(arc)
    pts, length = _resample_polyline(arc, n_samples)
    dist = 1.0 - float(np.max(np.abs(pts)))
    if length < dist:
        raise PreconditionError(f"arc length {length:.3g} below its distance {dist:.3g} to the circle")
    image = phi.evaluate(pts)
    diam = float(pdist(np.column_stack([image.real, image.imag])).max())
    mids = 0.5 * (pts[1:] + pts[:-1])
    integral = float(np.sum(a_phi(phi, mids, n=n_quad) * np.abs(np.diff(pts))))
    return KoskelaCheck(diam, integral, diam / integral, float(length), dist)


def hersch_pfluger_violations(phi: QcMap, z, tol: float = 1e-9) -> int:
    """Count z with |phi(z)| outside [psi_{1/K}(|z|), psi_K(|z|)]."""
    z, _ = _check_disk(z)
    r = np.abs(np.atleast_1d(z))
    w = np.abs(np.atleast_1d(phi.evaluate(z)))
    K = phi.K_bound
    lower = psi(1.0 / K, r)
    upper = psi(K, r)
    return int(np.count_nonzero((w < lower - tol) | (w > upper + tol)))


def max_beltrami(phi: QcMap, z) -> float:
    return float(np.max(np.abs(phi.beltrami(z))))


def finite_difference_wirtinger(phi: QcMap, z, h: float = 1e-6, rel_threshold: float = 1e-3):
    """Wirtinger derivatives by central differences with one Richardson step."""
    z = np.asarray(z, complex)

    def partials(step):
        fx = (phi.evaluate(z + step) - phi.evaluate(z - step)) / (2 * step)
        fy = (phi.evaluate(z + 1j * step) - phi.evaluate(z - 1j * step)) / (2 * step)
        return fx, fy

    fx1, fy1 = partials(h)
    fx2, fy2 = partials(h / 2)
    fx = (4 * fx2 - fx1) / 3
    fy = (4 * fy2 - fy1) / 3
    scale = np.maximum(np.abs(fx) + np.abs(fy), 1e-300)
    if np.any((np.abs(fx2 - fx1) + np.abs(fy2 - fy1)) / scale > rel_threshold):
        raise NumericalError("finite-difference derivative is ill-conditioned here")
    return 0.5 * (fx - 1j * fy), 0.5 * (fx + 1j * fy)
