"""Discretized Bergman-space operators attached to a quasiconformal symbol.

The composition operator is studied through its Gram matrix
G_mn = <C_phi e_n, C_phi e_m> on the orthonormal monomials
e_n(z) = sqrt(n + 1) z^n, which equals the Toeplitz matrix of T_J with
symbol J(., phi^{-1}).  Kernel operators (P_phi, P_phi^+, I_phi) act on
GridFunctions by direct quadrature sums, evaluated at arbitrary target
points.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .distortion import psi
from .errors import ConvergenceError, NumericalError, ParameterError, QuadratureWarning, SingularKernel
from .qcmap import QcMap, counting_N, counting_N_polar
from .quadrature import TWO_PI, DiskQuadrature, build_quadrature, clip_to_disk, gauss_legendre_unit, local_disk_quadrature

GRAM = "gram_CstarC"
TOEPLITZ = "toeplitz_TJ"
KERNEL = "kernel_Pphi"

_CHUNK = 2_000_000  # kernel entries per block


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    entries: np.ndarray
    basis_degree: int
    meaning: str

    def hermitian_defect(self) -> float:
        return float(np.max(np.abs(self.entries - self.entries.conj().T)))


@dataclass(frozen=True, eq=False)
class GridFunction:
    values: np.ndarray
    description: str = ""
    points: np.ndarray | None = None


def bergman_basis(n: int, z):
    return math.sqrt(n + 1) * np.asarray(z, complex) ** n


def basis_matrix(z, N: int) -> np.ndarray:
    """Columns e_0 .. e_N evaluated at the points z."""
    z = np.asarray(z, complex).ravel()
    powers = np.ones((z.size, N + 1), complex)
    for n in range(1, N + 1):
        powers[:, n] = powers[:, n - 1] * z
    return powers * np.sqrt(np.arange(1, N + 2))[None, :]


def _default_quadrature(q):
    return build_quadrature() if q is None else q


def composition_gram(phi: QcMap, N: int, q: DiskQuadrature | None = None, adapt: bool = True) -> OperatorMatrix:
    """G_mn = int e_n(phi(z)) conj(e_m(phi(z))) dA(z)."""
    if N < 1:
        raise ParameterError("basis degree must be >= 1")
    q = _default_quadrature(q)
    if adapt:
        q = q.adapted(phi.angular_breaks())
    E = basis_matrix(phi.evaluate(q.points), N)
    G = E.conj().T @ (q.weights[:, None] * E)
    return OperatorMatrix(0.5 * (G + G.conj().T), N, GRAM)


def toeplitz_direct(phi: QcMap, N: int, q: DiskQuadrature | None = None, adapt: bool = True,
                    jacobian_cap: float = 1e12) -> OperatorMatrix:
    """(T_J)_mn = int e_n(w) conj(e_m(w)) J(w, phi^{-1}) dA(w)."""
    if N < 1:
        raise ParameterError("basis degree must be >= 1")
    q = _default_quadrature(q)
    inv = phi.inverse()
    if adapt:
        q = q.adapted(inv.angular_breaks())
    J = inv.jacobian(q.points)
    if not np.all(np.isfinite(J)) or np.max(J) > jacobian_cap:
        raise NumericalError("Jacobian of the inverse map exceeds the configured cap")
    E = basis_matrix(q.points, N)
    T = E.conj().T @ ((q.weights * J)[:, None] * E)
    return OperatorMatrix(0.5 * (T + T.conj().T), N, TOEPLITZ)


def operator_norm(m, method: str = "eigh", tol: float = 1e-10, max_iter: int = 100_000, seed: int = 0) -> float:
    """sqrt of the largest eigenvalue of a Hermitian PSD matrix."""
    A = m.entries if isinstance(m, OperatorMatrix) else np.asarray(m)
    if method == "eigh":
        lam = float(np.linalg.eigvalsh(A)[-1])
    elif method == "power":
        rng = np.random.default_rng(seed)
        x = rng.normal(size=A.shape[0]) + 0j
        x /= np.linalg.norm(x)
        lam = 0.0
        for _ in range(max_iter):
            y = A @ x
            lam_new = float(np.real(np.vdot(x, y)))
            ny = np.linalg.norm(y)
            if ny == 0:
                return 0.0
            x = y / ny
            if abs(lam_new - lam) <= tol * max(abs(lam_new), 1e-300):
                lam = lam_new
                break
            lam = lam_new
        else:
            raise ConvergenceError("power iteration did not converge")
    else:
        raise ParameterError(f"unknown method {method!r}")
    return math.sqrt(max(lam, 0.0))


def test_kernel_lower_bound(phi: QcMap, z0: complex, q: DiskQuadrature | None = None) -> float:
    """||C_phi f||_2 for the normalized kernel f at phi(z0)."""
    q = _default_quadrature(q)
    a = complex(phi.evaluate(z0))
    fw = normalized_kernel(a, phi.evaluate(q.points))
    return math.sqrt(float(np.dot(q.weights, np.abs(fw) ** 2)))


def normalized_kernel(a: complex, w):
    """(1 - |a|^2) / (1 - conj(a) w)^2, unit norm in L^2(dA)."""
    return (1.0 - abs(a) ** 2) / (1.0 - np.conj(a) * np.asarray(w, complex)) ** 2


test_kernel_lower_bound.__test__ = False


@dataclass(frozen=True)
class EssentialNormProxy:
    proxy: float
    full_norm: float
    geometric: float
    geometric_spread: float


def counting_ratio_grid(phi: QcMap, levels=range(10, 41), n_angles: int = 256) -> np.ndarray:
    """N_phi(z) / log(1/|z|) on |z| = 1 - 2^{-j}."""
    s = 2.0 ** -np.asarray(list(levels), float)
    th = TWO_PI * np.arange(n_angles) / n_angles
    S, T = np.meshgrid(s, th, indexing="ij")
    return counting_N_polar(phi, S, T) / -np.log1p(-S)


def essential_norm_proxy(phi: QcMap, N: int, n_cut: int, q: DiskQuadrature | None = None,
                         gram: OperatorMatrix | None = None) -> EssentialNormProxy:
    """Norm of the Gram block on indices > n_cut, with the boundary counting ratio."""
    if n_cut > N / 2:
        raise ParameterError("n_cut must not exceed N/2")
    if n_cut > N / 4:
        warnings.warn("n_cut above N/4 is exposed to truncation artifacts", stacklevel=2)
    G = gram if gram is not None else composition_gram(phi, N, q)
    tail = G.entries[n_cut + 1:, n_cut + 1:]
    ratios = counting_ratio_grid(phi)
    return EssentialNormProxy(
        proxy=operator_norm(tail),
        full_norm=operator_norm(G),
        geometric=float(np.max(ratios)),
        geometric_spread=float(np.max(ratios) - np.min(ratios)),
    )


# --- kernel operators -------------------------------------------------------


def _block_rows(n_targets: int, n_sources: int) -> int:
    return max(1, _CHUNK // max(n_sources, 1))


def _kernel_sum(zeta, src_conj, fw, eps: float, absolute: bool, split: float | None = None):
    """sum_j fw_j k(zeta_i, src_j), k = (1 - zeta conj(phi_j))^{-2} or its modulus."""
    zeta = np.asarray(zeta, complex).ravel()
    out = np.empty(zeta.size, complex)
    near = np.empty(zeta.size, complex) if split is not None else None
    step = _block_rows(zeta.size, src_conj.size)
    for i in range(0, zeta.size, step):
        D = 1.0 - zeta[i:i + step, None] * src_conj[None, :]
        mag2 = D.real**2 + D.imag**2
        if eps > 0:
            small = mag2 < eps
            if np.any(small):
                D = np.where(small, D * np.sqrt(eps / np.where(small, mag2, 1.0)), D)
                mag2 = np.maximum(mag2, eps)
        elif np.min(mag2) < 1e-28:
            raise SingularKernel("kernel denominator below 1e-14")
        K = 1.0 / mag2 if absolute else 1.0 / (D * D)
        if split is None:
            out[i:i + step] = K @ fw
        else:
            is_near = mag2 < split * split
            out[i:i + step] = np.where(is_near, 0.0, K) @ fw
            near[i:i + step] = np.where(is_near, K, 0.0) @ fw
    return out if split is None else (near, out)


def _targets(q: DiskQuadrature, targets):
    return q.points if targets is None else np.asarray(targets, complex).ravel()


def apply_P_phi(phi: QcMap, f: GridFunction, q: DiskQuadrature, eps: float = 0.0, targets=None) -> GridFunction:
    """(P_phi f)(z) = sum_j w_j f(z_j) / (1 - phi(z) conj(phi(z_j)))^2 at the targets."""
    pts = _targets(q, targets)
    fw = q.weights * np.asarray(f.values, complex)
    vals = _kernel_sum(phi.evaluate(pts), np.conj(phi.evaluate(q.points)), fw, eps, absolute=False)
    return GridFunction(vals, f"P_phi[{f.description}]", pts)


@dataclass(frozen=True, eq=False)
class PPlusSplit:
    near: GridFunction
    far: GridFunction
    total: GridFunction


def apply_P_phi_plus(phi: QcMap, f: GridFunction, q: DiskQuadrature, r0: float = 1.0 / 64,
                     eps: float = 0.0, targets=None) -> PPlusSplit:
    """Absolute-kernel operator split at |1 - phi(z) conj(phi(w))| = r0."""
    if not 0 < r0 < 1:
        raise ParameterError("r0 must lie in (0, 1)")
    pts = _targets(q, targets)
    fw = q.weights * np.asarray(f.values, complex)
    near, far = _kernel_sum(phi.evaluate(pts), np.conj(phi.evaluate(q.points)), fw, eps, absolute=True, split=r0)
    return PPlusSplit(
        GridFunction(near, "near", pts),
        GridFunction(far, "far", pts),
        GridFunction(near + far, "P_phi_plus", pts),
    )


def apply_I_phi(phi: QcMap, f: GridFunction, q: DiskQuadrature, z_grid) -> GridFunction:
    """I_phi f(z) = int f(w) / (1 - z conj(phi(w)))^2 dA(w)."""
    z = np.asarray(z_grid, complex).ravel()
    if np.any(~(np.abs(z) < 1)):
        raise ParameterError("I_phi targets must lie in the open disk")
    src = phi.evaluate(q.points)
    fw = q.weights * np.asarray(f.values, complex)
    out = np.empty(z.size, complex)
    step = _block_rows(z.size, src.size)
    for i in range(0, z.size, step):
        denom = 1.0 - np.outer(z[i:i + step], src.conj())
        out[i:i + step] = (1.0 / (denom * denom)) @ fw
    return GridFunction(out, f"I_phi[{f.description}]", z)


# --- dyadic domination of the near part --------------------------------------


@dataclass(frozen=True)
class DyadicDomination:
    c3: float
    n_targets: int
    n_dominated_zero: int


def dyadic_box_sums(q: DiskQuadrature, absf: np.ndarray, targets: np.ndarray, max_level: int = 12) -> np.ndarray:
    """sum over I in D^0 u D^{1/3}, level <= max_level, of chi_{Q_I}(z) / |Q_I| int_{Q_I} |f|."""
    src_s = 1.0 - np.abs(q.points)
    src_u = np.mod(np.angle(q.points) / TWO_PI, 1.0)
    tgt_s = 1.0 - np.abs(targets)
    tgt_u = np.mod(np.angle(targets) / TWO_PI, 1.0)
    mass = q.weights * absf
    total = np.zeros(targets.size)
    for beta in (0.0, 1.0 / 3.0):
        for j in range(max_level + 1):
            n = 2**j
            t = 1.0 / n
            area = t * t * (2.0 - t)
            inside = src_s <= t
            idx = np.floor(np.mod(src_u - beta, 1.0) * n).astype(int) % n
            box_mass = np.bincount(idx[inside], weights=mass[inside], minlength=n)
            tidx = np.floor(np.mod(tgt_u - beta, 1.0) * n).astype(int) % n
            total += np.where(tgt_s <= t, box_mass[tidx] / area, 0.0)
    return total


def dyadic_domination(phi: QcMap, f: GridFunction, q: DiskQuadrature, r0: float = 1.0 / 64,
                      n_targets: int = 1000, max_level: int = 12, seed: int = 0) -> DyadicDomination:
    """Measured constant c3 in near-part(z) <= c3 * dyadic box sum at z."""
    rng = np.random.default_rng(seed)
    pick = rng.choice(q.points.size, size=min(n_targets, q.points.size), replace=False)
    targets = q.points[pick]
    split = apply_P_phi_plus(phi, f, q, r0=r0, targets=targets)
    near = np.abs(split.near.values)
    dom = dyadic_box_sums(q, np.abs(np.asarray(f.values)), targets, max_level)
    pos = near > 0
    zero_dom = int(np.count_nonzero(pos & (dom <= 0)))
    ok = pos & (dom > 0)
    c3 = float(np.max(near[ok] / dom[ok])) if np.any(ok) else 0.0
    return DyadicDomination(c3 if zero_dom == 0 else math.inf, int(targets.size), zero_dom)


# --- L^p diagnostics ---------------------------------------------------------


def lp_norm(f: GridFunction, p: float, q: DiskQuadrature) -> float:
    if not p > 0:
        raise ParameterError("p must be positive")
    return float(np.dot(q.weights, np.abs(np.asarray(f.values)) ** p) ** (1.0 / p))


def _distribution_sup(absg: np.ndarray, weights: np.ndarray, alphas) -> float:
    if alphas is None:
        # sup over alpha is approached from below each attained value
        order = np.argsort(-absg, kind="stable")
        g = absg[order]
        cum = np.cumsum(weights[order])
        return float(np.max(g * cum))
    alphas = np.asarray(alphas, float)
    meas = np.array([np.sum(weights[absg > a]) for a in alphas])
    return float(np.max(alphas * meas))


def weak11_ratio(phi: QcMap, f: GridFunction, q_source: DiskQuadrature, q_target: DiskQuadrature | None = None,
                 alphas=None) -> float:
    """sup_alpha alpha |{|P_phi f| > alpha}| / ||f||_1."""
    q_target = q_target or q_source
    l1 = lp_norm(f, 1.0, q_source)
    if not l1 > 0:
        raise ParameterError("f must have positive L^1 norm")
    Pf = apply_P_phi(phi, f, q_source, targets=q_target.points)
    return _distribution_sup(np.abs(Pf.values), q_target.weights, alphas) / l1


def weak11_distribution(phi: QcMap, f: GridFunction, q_source: DiskQuadrature, q_target: DiskQuadrature,
                        alphas) -> tuple[np.ndarray, np.ndarray]:
    """(alphas, |{|P_phi f| > alpha}|)."""
    Pf = np.abs(apply_P_phi(phi, f, q_source, targets=q_target.points).values)
    alphas = np.asarray(alphas, float)
    return alphas, np.array([np.sum(q_target.weights[Pf > a]) for a in alphas])


def weak11_sup(phi: QcMap, f: GridFunction, q_source: DiskQuadrature, q_target: DiskQuadrature, alphas=None) -> float:
    """Unnormalized sup_alpha alpha |{|P_phi f| > alpha}|."""
    Pf = apply_P_phi(phi, f, q_source, targets=q_target.points)
    return _distribution_sup(np.abs(Pf.values), q_target.weights, alphas)


def lp_to_l1_check(phi: QcMap, f: GridFunction, p: float, q_source: DiskQuadrature,
                   q_target: DiskQuadrature | None = None) -> float:
    """||P_phi f||_1 / ||f||_p."""
    q_target = q_target or q_source
    Pf = apply_P_phi(phi, f, q_source, targets=q_target.points)
    return lp_norm(Pf, 1.0, q_target) / lp_norm(f, p, q_source)


def kolmogorov_check(phi: QcMap, f: GridFunction, p: float, q_source: DiskQuadrature,
                     q_target: DiskQuadrature | None = None) -> float:
    """||P_phi f||_p / ||f||_1 for 0 < p < 1 (weak-(1,1) implies this is bounded)."""
    q_target = q_target or q_source
    Pf = apply_P_phi(phi, f, q_source, targets=q_target.points)
    return lp_norm(Pf, p, q_target) / lp_norm(f, 1.0, q_source)


def normalized_indicator(center: complex, radius: float, n_radial: int = 16, n_angles: int = 32):
    """chi_D / |D| for D = D(center, radius) intersected with the disk, with its local rule."""
    ql = clip_to_disk(local_disk_quadrature(center, radius, n_radial, n_angles))
    area = float(np.sum(ql.weights))
    if not area > 0:
        raise ParameterError("indicator region misses the disk")
    vals = np.full(ql.points.size, 1.0 / area)
    return GridFunction(vals, f"indicator D({center}, {radius:.3g})", ql.points), ql


# --- integral estimates -------------------------------------------------------


def integral_estimate_Ict(c: float, t: float, z_list, q: DiskQuadrature | None = None):
    """[(z, I_{c,t}(z), I_{c,t}(z) (1 - |z|^2)^c)] by quadrature."""
    if not (c > 0 and t > -1):
        raise ParameterError("need c > 0 and t > -1")
    q = _default_quadrature(q)
    w = q.points
    base = (1.0 - np.abs(w) ** 2) ** t
    rows = []
    for z in np.atleast_1d(np.asarray(z_list, complex)):
        if abs(z) > 1.0 - 2.0 / q.n_radial:
            warnings.warn(f"|z| = {abs(z):.4g} is beyond the resolved range of the radial grid",
                          QuadratureWarning, stacklevel=2)
        val = float(np.dot(q.weights, base / np.abs(1.0 - z * np.conj(w)) ** (2.0 + t + c)))
        rows.append((complex(z), val, float(val * (1.0 - abs(z) ** 2) ** c)))
    return rows


@dataclass(frozen=True)
class SubordinationCheck:
    ratio: float
    bound: float
    lhs_mean: float
    sup_mean: float


def subordination_ratio(phi: QcMap, f: Callable, r: float, n_theta: int = 1024, t_grid=None) -> SubordinationCheck:
    """Circle mean of f o phi at radius r over the sup of circle means of f."""
    if not 0 < r < 1:
        raise ParameterError("r must lie in (0, 1)")
    th = TWO_PI * np.arange(n_theta) / n_theta
    lhs = float(np.mean(f(phi.evaluate(r * np.exp(1j * th)))))
    if t_grid is None:
        t_grid = np.concatenate([np.linspace(0.0, 0.99, 100), 1.0 - 2.0 ** -np.arange(7, 30)])
    means = [float(np.mean(f(t * np.exp(1j * th)))) for t in t_grid]
    sup = max(means)
    return SubordinationCheck(lhs / sup, 4.0 / (1.0 - psi(phi.K_bound, r)), lhs, sup)


@dataclass(frozen=True)
class SchattenResult:
    integral: float
    diverged: bool
    partial_sums: tuple
    level_radii: tuple
    integrand_range: tuple


def lambda_measure(r_in: float, r_out: float) -> float:
    """Mobius-invariant measure of the annulus r_in < |z| < r_out (normalized dA)."""
    return 1.0 / (1.0 - r_out**2) - 1.0 / (1.0 - r_in**2)


def schatten_criterion(phi: QcMap, p: float, r_inner: float = 0.5, levels: int = 20,
                       n_radial: int = 32, n_angles: int = 256, threshold: float = 1.5,
                       tail_levels: int = 3) -> SchattenResult:
    """int_{r_inner<|z|<1} (N_phi / log(1/|z|))^p dlambda on dyadic annuli toward the circle."""
    if not (p > 0 and 0 < r_inner < 1):
        raise ParameterError("need p > 0 and 0 < r_inner < 1")
    j0 = max(1, math.ceil(-math.log2(1.0 - r_inner)))
    edges = [r_inner] + [1.0 - 2.0**-j for j in range(j0 + 1, j0 + levels + 1)]
    x, w = gauss_legendre_unit(n_radial)
    th = TWO_PI * np.arange(n_angles) / n_angles
    partial, total, lo, hi = [], 0.0, math.inf, -math.inf
    for a, b in zip(edges[:-1], edges[1:]):
        # work in s = 1 - r so that the outermost annuli keep full precision
        s = (1.0 - a) - (b - a) * x
        r = 1.0 - s
        rw = (b - a) * w * 2.0 * r / (s * (2.0 - s)) ** 2
        g = (counting_N_polar(phi, s[:, None], th[None, :]) / -np.log1p(-s)[:, None]) ** p
        lo, hi = min(lo, float(g.min())), max(hi, float(g.max()))
        total += float(rw @ g.mean(axis=1))
        partial.append(total)
    growth = [partial[k] / partial[k - 1] for k in range(len(partial) - tail_levels, len(partial))]
    diverged = all(gr >= threshold for gr in growth)
    return SchattenResult(total, diverged, tuple(partial), tuple(edges), (lo, hi))
