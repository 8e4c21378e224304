"""Extremal distortion function psi_K via the Groetzsch ring modulus.

psi_K(r) = mu^{-1}(mu(r) / K), where

    mu(r) = (pi/2) K(sqrt(1 - r^2)) / K(r)

and K(.) is the complete elliptic integral of the first kind, computed
through the arithmetic-geometric mean.  All functions accept scalars or
numpy arrays and return the same shape.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, DomainError, NonPositiveInput

HALF_PI = 0.5 * math.pi
_EPS = np.finfo(float).eps
# mu(r) = log(4/r) + O(r^2 log r); beyond this the correction is below eps.
_MU_ASYMPTOTIC = 40.0


def _as_float(x):
    arr = np.asarray(x, dtype=float)
    return arr, arr.ndim == 0


def _ret(arr, scalar):
    return float(arr) if scalar else arr


@dataclass(frozen=True)
class DistortionEvaluator:
    tolerance: float = 1e-12
    max_iterations: int = 64

    def agm(self, a, b):
        a, sa = _as_float(a)
        b, sb = _as_float(b)
        if np.any(~(a > 0)) or np.any(~(b > 0)):
            raise NonPositiveInput("agm requires a > 0 and b > 0")
        a, b = np.broadcast_arrays(a, b)
        a = a.astype(float, copy=True)
        b = b.astype(float, copy=True)
        for _ in range(self.max_iterations):
            gap = np.abs(a - b)
            if np.all(gap <= 4 * _EPS * np.maximum(a, b)):
                break
            a, b = 0.5 * (a + b), np.sqrt(a * b)
        else:
            if np.any(np.abs(a - b) > self.tolerance):
                raise ConvergenceError("agm did not converge")
        return _ret(0.5 * (a + b), sa and sb)

    def complete_elliptic_k(self, r):
        r, scalar = _as_float(r)
        if np.any(~((r >= 0) & (r < 1))):
            raise DomainError("complete_elliptic_k requires 0 <= r < 1")
        rc = np.sqrt((1.0 - r) * (1.0 + r))
        return _ret(HALF_PI / self.agm(1.0, rc), scalar)

    def grotzsch_mu(self, r):
        r, scalar = _as_float(r)
        if np.any(~((r > 0) & (r < 1))):
            raise DomainError("grotzsch_mu requires 0 < r < 1")
        return _ret(self._mu(r), scalar)

    def _mu(self, r):
        # K(r')/K(r) = agm(1, r')/agm(1, r); no cancellation at either end.
        rc = np.sqrt((1.0 - r) * (1.0 + r))
        return HALF_PI * self.agm(1.0, rc) / self.agm(1.0, r)

    def _mu_inverse(self, m):
        """Solve mu(r) = m for r, elementwise over m > 0."""
        m = np.asarray(m, dtype=float)
        shape = m.shape
        m = m.ravel()
        # mu(r) mu(r') = (pi/2)^2: always solve on the branch r <= 1/sqrt(2)
        flip = m < HALF_PI
        mm = np.where(flip, HALF_PI**2 / m, m)
        small = np.empty_like(mm)
        asym = mm > _MU_ASYMPTOTIC
        with np.errstate(under="ignore"):
            small[asym] = 4.0 * np.exp(-mm[asym])
        if not np.all(asym):
            small[~asym] = self._newton_log_r(mm[~asym])
        # sqrt(1 - s^2) written so that rounding stays monotone in s near 1
        big = 1.0 - small * small / (1.0 + np.sqrt((1.0 - small) * (1.0 + small)))
        return np.where(flip, big, small).reshape(shape)

    def _newton_log_r(self, m):
        # log(1/r) < mu(r) < log(4/r); iterate on u = log r, bracket-guarded.
        lo = -m
        hi = np.minimum(math.log(4.0) - m, -0.5 * math.log(2.0))
        u = np.clip(math.log(4.0) - m, lo, hi)
        for _ in range(self.max_iterations):
            r = np.exp(u)
            g = self._mu(r) - m
            lo = np.where(g > 0, u, lo)
            hi = np.where(g > 0, hi, u)
            kr = HALF_PI / self.agm(1.0, np.sqrt((1.0 - r) * (1.0 + r)))
            slope = -(math.pi**2) / (4.0 * (1.0 - r * r) * kr * kr)
            u_new = u - g / slope
            u_new = np.where((u_new > lo) & (u_new < hi), u_new, 0.5 * (lo + hi))
            thresh = np.maximum(1e-3 * self.tolerance, 8 * _EPS * np.abs(u))
            converged = (np.abs(u_new - u) <= thresh) | (hi - lo <= thresh)
            u = u_new
            if np.all(converged):
                return np.exp(u)
        raise ConvergenceError("inversion of the Groetzsch modulus did not converge")

    def psi(self, K, r):
        K = float(K)
        if not K > 0:
            raise DomainError("psi requires K > 0")
        r, scalar = _as_float(r)
        if np.any(~((r >= 0) & (r <= 1))):
            raise DomainError("psi requires 0 <= r <= 1")
        if K == 1.0:
            return _ret(r.copy(), scalar)
        out = np.atleast_1d(r).astype(float, copy=True)
        inner = (out > 0) & (out < 1)
        if np.any(inner):
            out[inner] = self._mu_inverse(self._mu(out[inner]) / K)
        out = np.clip(out, 0.0, 1.0).reshape(r.shape)
        return _ret(out, scalar)

    def psi_inverse(self, K, s):
        K = float(K)
        if not K > 0:
            raise DomainError("psi_inverse requires K > 0")
        return self.psi(1.0 / K, s)


DEFAULT = DistortionEvaluator()

agm = DEFAULT.agm
complete_elliptic_k = DEFAULT.complete_elliptic_k
grotzsch_mu = DEFAULT.grotzsch_mu
psi = DEFAULT.psi
psi_inverse = DEFAULT.psi_inverse
