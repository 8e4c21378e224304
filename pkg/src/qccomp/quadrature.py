"""Polar product quadrature on the unit disk and on subdisks.

Weights integrate against the normalized area measure dA = dx dy / pi, so
the weights of the unit-disk rule sum to 1 and those of a subdisk of
radius s sum to s^2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import ParameterError

TWO_PI = 2.0 * math.pi


def gauss_legendre_unit(n: int) -> tuple[np.ndarray, np.ndarray]:
    """n-point Gauss-Legendre rule on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


@dataclass(frozen=True, eq=False)
class DiskQuadrature:
    radial_nodes: np.ndarray
    radial_weights: np.ndarray
    angles: np.ndarray
    angle_weights: np.ndarray
    center: complex = 0j
    scale: float = 1.0
    uniform_angles: bool = field(default=True)

    @property
    def n_radial(self) -> int:
        return self.radial_nodes.size

    @property
    def n_angles(self) -> int:
        return self.angles.size

    @cached_property
    def points(self) -> np.ndarray:
        z = self.radial_nodes[:, None] * np.exp(1j * self.angles)[None, :]
        return (self.center + self.scale * z).ravel()

    @cached_property
    def weights(self) -> np.ndarray:
        w = self.radial_weights[:, None] * self.angle_weights[None, :]
        return (self.scale**2 * w).ravel()

    def integrate(self, values) -> complex | float:
        return np.dot(self.weights, np.asarray(values).ravel())

    def adapted(self, breaks) -> "DiskQuadrature":
        """Same radial rule, angular Gauss-Legendre panels split at `breaks`.

        Used when the integrand has kinks along rays (piecewise-linear
        angular profiles); roughly the same total number of angular nodes.
        """
        if breaks is None or len(breaks) == 0:
            return self
        cuts = np.unique(np.mod(np.asarray(breaks, float), TWO_PI))
        cuts = np.append(cuts, cuts[0] + TWO_PI)
        angles, weights = [], []
        for a, b in zip(cuts[:-1], cuts[1:]):
            m = max(8, int(round(self.n_angles * (b - a) / TWO_PI)))
            x, w = gauss_legendre_unit(m)
            angles.append(a + (b - a) * x)
            weights.append((b - a) / TWO_PI * w)
        return DiskQuadrature(
            self.radial_nodes,
            self.radial_weights,
            np.concatenate(angles),
            np.concatenate(weights),
            self.center,
            self.scale,
            uniform_angles=False,
        )


def build_quadrature(n_radial: int = 200, n_angles: int = 512) -> DiskQuadrature:
    """Gauss-Legendre in r against 2r dr, uniform angles.

    Exact for r^{2k} e^{i m theta} with k < n_radial and |m| < n_angles.
    """
    if n_radial < 4 or n_angles < 8:
        raise ParameterError("need n_radial >= 4 and n_angles >= 8")
    x, w = gauss_legendre_unit(n_radial)
    rw = 2.0 * x * w
    rw /= math.fsum(rw)
    angles = TWO_PI * np.arange(n_angles) / n_angles
    aw = np.full(n_angles, 1.0 / n_angles)
    return DiskQuadrature(x, rw, angles, aw)


def local_disk_quadrature(center: complex, radius: float, n_radial: int = 32, n_angles: int = 32) -> DiskQuadrature:
    """Polar rule on the Euclidean disk D(center, radius)."""
    if radius <= 0:
        raise ParameterError("radius must be positive")
    base = build_quadrature(max(4, n_radial), max(8, n_angles))
    return DiskQuadrature(
        base.radial_nodes, base.radial_weights, base.angles, base.angle_weights, complex(center), float(radius)
    )


@dataclass(frozen=True, eq=False)
class NodeSet:
    """Bare quadrature nodes and weights (normalized area measure)."""

    points: np.ndarray
    weights: np.ndarray

    def integrate(self, values) -> complex | float:
        return np.dot(self.weights, np.asarray(values).ravel())


def clip_to_disk(q) -> NodeSet:
    """Drop the nodes of a rule that fall outside the open unit disk."""
    keep = np.abs(q.points) < 1.0
    return NodeSet(q.points[keep], q.weights[keep])
