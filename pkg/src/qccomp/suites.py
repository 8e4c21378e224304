"""Invariant suites: each runs a pipeline and returns scalars, verdicts and tables.

Verdicts compare measured quantities against the tolerances in the config;
tables are column-major dicts of equal-length lists.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import bergman as bg
from . import bmo
from . import geometry as geo
from .config import ExperimentConfig
from .distortion import grotzsch_mu, psi
from .qcmap import (
    Identity,
    RadialStretch,
    Rotation,
    boundary_lipschitz_estimate,
    builtin_zoo,
    hersch_pfluger_violations,
    m_ratio,
    max_beltrami,
    sup_m_ratio,
)
from .quadrature import build_quadrature


@dataclass
class SuiteResult:
    scalars: dict = field(default_factory=dict)
    verdicts: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)

    def merge(self, other: "SuiteResult", prefix: str = "") -> "SuiteResult":
        for mine, theirs in ((self.scalars, other.scalars), (self.verdicts, other.verdicts)):
            mine.update({prefix + k: v for k, v in theirs.items()})
        self.tables.update(other.tables)
        return self


def _quad(cfg: ExperimentConfig):
    return build_quadrature(cfg.quadrature.n_radial, cfg.quadrature.n_angles)


def _random_disk_points(rng, n, rmax=0.999):
    return rmax * np.sqrt(rng.random(n)) * np.exp(2j * math.pi * rng.random(n))


# --- distortion ---------------------------------------------------------------


def r_grid(n: int = 99) -> np.ndarray:
    return np.arange(1, n + 1) / (n + 1)


def distortion_suite(cfg: ExperimentConfig) -> SuiteResult:
    d, tol = cfg.distortion, cfg.tolerances
    r = r_grid(d.n_r)
    semigroup = max(
        float(np.max(np.abs(psi(K1 * K2, r) - psi(K1, psi(K2, r)))))
        for K1 in d.K_values for K2 in d.K_values
    )
    landen = float(np.max(np.abs(psi(2.0, r) - 2.0 * np.sqrt(r) / (1.0 + r))))
    symmetry = float(np.max(np.abs(grotzsch_mu(r) * grotzsch_mu(np.sqrt(1.0 - r * r)) - (math.pi / 2) ** 2)))
    involution = max(float(np.max(np.abs(psi(1.0 / K, psi(K, r)) - r))) for K in d.K_values)
    table = {"r": r.tolist()}
    for K in d.curve_K:
        table[f"psi_{K:g}"] = psi(K, r).tolist()
    return SuiteResult(
        {"semigroup_max_dev": semigroup, "landen_max_dev": landen, "mu_symmetry_max_dev": symmetry,
         "involution_max_dev": involution},
        {"semigroup": semigroup <= tol.semigroup, "landen": landen <= tol.landen,
         "mu_symmetry": symmetry <= tol.symmetry},
        {"psi_curves": table},
    )


# --- maps ---------------------------------------------------------------------


def hersch_suite(cfg: ExperimentConfig) -> SuiteResult:
    rng = np.random.default_rng([cfg.seed, 2])
    out = SuiteResult()
    total = 0
    for name, phi in builtin_zoo().items():
        z = _random_disk_points(rng, cfg.map_report.n_points)
        v = hersch_pfluger_violations(phi, z, cfg.tolerances.membership)
        out.scalars[f"hersch_violations.{name}"] = v
        total += v
    out.scalars["hersch_violations_total"] = total
    out.verdicts["hersch_pfluger"] = total == 0
    return out


def map_report_suite(cfg: ExperimentConfig) -> SuiteResult:
    phi = cfg.build_map()
    rng = np.random.default_rng([cfg.seed, 1])
    z = _random_disk_points(rng, cfg.map_report.n_points)
    z = z[np.abs(z) > 1e-12]
    K = phi.K_bound
    beltrami = max_beltrami(phi, z)
    violations = hersch_pfluger_violations(phi, z, cfg.tolerances.membership)
    radii = np.asarray(cfg.map_report.profile_radii, float)
    out = SuiteResult(
        {
            "K_bound": float(K),
            "sup_m_ratio": sup_m_ratio(phi),
            "sup_m_ratio_inverse": sup_m_ratio(phi.inverse()),
            "max_beltrami": beltrami,
            "beltrami_bound": (K - 1) / (K + 1),
            "hersch_violations": violations,
            "boundary_lipschitz": boundary_lipschitz_estimate(phi, "forward"),
            "boundary_lipschitz_inverse": boundary_lipschitz_estimate(phi, "inverse"),
        },
        {
            "beltrami_bound": beltrami <= (K - 1) / (K + 1) + 1e-12,
            "hersch_pfluger_map": violations == 0,
        },
        {"m_profile": {"r": radii.tolist(), "m_ratio": np.atleast_1d(m_ratio(phi, radii + 0j)).tolist()}},
    )
    return out


# --- geometry -----------------------------------------------------------------


def ph_inclusion_suite(cfg: ExperimentConfig) -> SuiteResult:
    g = cfg.geometry
    out = SuiteResult()
    outer = inner = area_fail = 0
    for name, phi in builtin_zoo().items():
        rng = np.random.default_rng([cfg.seed, 3])
        for i in range(g.n_disks):
            a = complex(_random_disk_points(rng, 1, 0.9)[0])
            d = geo.PseudoHyperbolicDisk(a, 0.05 + 0.85 * rng.random())
            rep = geo.ph_image_sandwich(phi, d, g.n_membership, seed=cfg.seed * 1000 + i, tol=cfg.tolerances.membership)
            outer += rep.outer_violations
            inner += rep.inner_violations
            area = geo.ph_area_check(phi, d, g.n_area, seed=cfg.seed * 1000 + i)
            area_fail += not area.within_3sigma
    out.scalars.update(outer_violations=outer, inner_violations=inner, area_outside_3sigma=area_fail)
    out.verdicts.update(ph_inclusion=outer == 0 and inner == 0, ph_area_bounds=area_fail == 0)
    return out


def rengel_table(ts) -> dict:
    rows = {"t": [], "lower": [], "upper": [], "lower_from_sides": [], "upper_from_sides": []}
    for t in ts:
        lo, hi = geo.rengel_bounds(t)
        s_a, s_b = geo.side_lengths(t)
        area = math.pi * geo.box_area(t)  # Euclidean area of Q_I
        rows["t"].append(t)
        rows["lower"].append(lo)
        rows["upper"].append(hi)
        rows["lower_from_sides"].append(s_b**2 / area)
        rows["upper_from_sides"].append(area / s_a**2)
    return rows


def carleson_suite(cfg: ExperimentConfig) -> SuiteResult:
    g = cfg.geometry
    rng = np.random.default_rng([cfg.seed, 6])
    worst = 0.0
    mei_fail = 0
    for _ in range(g.n_intervals):
        J = geo.Arc(rng.random(), 2.0 ** rng.uniform(-12.0, -3.0))
        try:
            I = geo.mei_cover(J)
            ok = I.arc.contains_arc(J) and I.length <= 6.0 * J.length * (1 + 1e-12)
            worst = max(worst, I.length / J.length)
        except geo.CoverNotFound:
            ok = False
        mei_fail += not ok
    pair_fail = 0
    for i in range(g.n_pairs):
        if i % 2:
            z, w = _random_disk_points(rng, 2)
        else:
            # clustered pairs near the circle
            th = 2 * math.pi * rng.random()
            z = (1 - 2.0 ** rng.uniform(-12, 0)) * np.exp(1j * th)
            w = (1 - 2.0 ** rng.uniform(-12, 0)) * np.exp(1j * (th + 2.0 ** rng.uniform(-12, 1)))
        try:
            box = geo.containing_box_for_pair(z, w)
            d2 = abs(1 - z * np.conj(w)) ** 2
            pair_fail += not (box.contains(z) and box.contains(w) and box.area / 16 <= d2 <= 8 * box.area)
        except geo.ConstructionFailed:
            pair_fail += 1
    spreads = {}
    maps = dict(builtin_zoo(), identity=Identity(), rotation=Rotation(0.4))
    for name, phi in maps.items():
        ratios = [
            geo.image_box_analysis(phi, geo.CarlesonBox(1.0, 2.0**-k), t0=g.t0, seed=cfg.seed).area_ratio
            for k in g.box_levels
        ]
        spreads[name] = max(ratios) / min(ratios)
    rt = rengel_table(np.linspace(0.05, 0.9, 18))
    rengel_dev = max(
        max(abs(a - b) for a, b in zip(rt["lower"], rt["lower_from_sides"])),
        max(abs(a - b) for a, b in zip(rt["upper"], rt["upper_from_sides"])),
    )
    out = SuiteResult(
        {"mei_failures": mei_fail, "mei_worst_ratio": worst, "pair_failures": pair_fail,
         "image_box_worst_spread": max(spreads.values()), "rengel_max_dev": rengel_dev},
        {"mei_cover": mei_fail == 0 and worst <= 6.0, "pair_box": pair_fail == 0,
         "image_box_spread": max(spreads.values()) <= 4.0, "rengel": rengel_dev <= cfg.tolerances.rengel},
        {"rengel": rt},
    )
    out.scalars.update({f"image_box_spread.{k}": v for k, v in spreads.items()})
    return out


def geometry_suite(cfg: ExperimentConfig) -> SuiteResult:
    return ph_inclusion_suite(cfg).merge(carleson_suite(cfg))


# --- operator norms -----------------------------------------------------------


def norm_suite(cfg: ExperimentConfig, N: int | None = None) -> SuiteResult:
    N = N or cfg.basis_degree
    q, tol, nc = _quad(cfg), cfg.tolerances, cfg.norm
    out = SuiteResult()
    ident = bg.operator_norm(bg.composition_gram(Identity(), N, q))
    out.scalars["identity_norm"] = ident
    out.verdicts["identity_norm"] = abs(ident - 1.0) <= tol.identity_norm

    route, lower_ok, herm = 0.0, True, 0.0
    for name, phi in builtin_zoo().items():
        G = bg.composition_gram(phi, nc.route_degree, q)
        T = bg.toeplitz_direct(phi, nc.route_degree, q)
        route = max(route, float(np.max(np.abs(G.entries - T.entries))))
        full = bg.composition_gram(phi, N, q)
        herm = max(herm, full.hermitian_defect())
        norm = bg.operator_norm(full)
        lbs = [bg.test_kernel_lower_bound(phi, z0, q) for z0 in nc.kernel_points]
        out.scalars[f"norm.{name}"] = norm
        out.scalars[f"kernel_lower_bound.{name}"] = max(lbs)
        lower_ok &= max(lbs) <= norm + 1e-6
    out.scalars["route_max_dev"] = route
    out.scalars["hermitian_defect"] = herm
    out.verdicts.update(route_equivalence=route <= tol.route, kernel_lower_bound=lower_ok)

    norms, ratios = [], []
    phi_cfg = cfg.build_map()
    for K in nc.K_values:
        phi = RadialStretch(K)
        norms.append(bg.operator_norm(bg.composition_gram(phi, N, q)))
        ratios.append(norms[-1] / sup_m_ratio(phi))
    out.scalars["norm_over_sup_m_min"] = min(ratios)
    out.scalars["norm_over_sup_m_max"] = max(ratios)
    out.scalars["config_map_norm"] = bg.operator_norm(bg.composition_gram(phi_cfg, N, q))
    out.verdicts["norm_band"] = 0.2 <= min(ratios) and max(ratios) <= 50.0
    out.verdicts["norm_monotone_in_K"] = all(b >= a - 1e-12 for a, b in zip(norms, norms[1:]))
    out.tables["norm_vs_K"] = {"K": list(map(float, nc.K_values)), "operator_norm": norms, "norm_over_sup_m": ratios}
    return out


def essential_suite(cfg: ExperimentConfig, N: int | None = None) -> SuiteResult:
    N = N or cfg.basis_degree
    q = _quad(cfg)
    out = SuiteResult()
    geo_dev, worst_frac = 0.0, math.inf
    for K in [K for K in cfg.norm.K_values if K != 1.0]:
        phi = RadialStretch(K)
        geo_dev = max(geo_dev, float(np.max(np.abs(bg.counting_ratio_grid(phi) - K))))
        G = bg.composition_gram(phi, N, q)
        for n_cut in range(1, N // 4 + 1):
            p = bg.essential_norm_proxy(phi, N, n_cut, gram=G)
            worst_frac = min(worst_frac, p.proxy / p.full_norm)
    out.scalars.update(geometric_max_dev=geo_dev, proxy_fraction_min=worst_frac)
    out.verdicts.update(geometric_equals_K=geo_dev <= cfg.tolerances.geometric, proxy_retained=worst_frac >= 0.1)
    return out


# --- kernel operators ---------------------------------------------------------


def weak11_suite(cfg: ExperimentConfig) -> SuiteResult:
    w, tol = cfg.weak11, cfg.tolerances
    phi = RadialStretch(w.K)
    qt = _quad(cfg)
    ratios, homog, unnorm, lit, kol = [], 0.0, 0.0, [], []
    table = {}
    for k in w.k_values:
        f, ql = bg.normalized_indicator(w.center, 2.0**-k)
        f2 = bg.GridFunction(2.0 * f.values, f.description, f.points)
        r1 = bg.weak11_ratio(phi, f, ql, qt)
        r2 = bg.weak11_ratio(phi, f2, ql, qt)
        s1 = bg.weak11_sup(phi, f, ql, qt)
        s2 = bg.weak11_sup(phi, f2, ql, qt)
        ratios.append(r1)
        homog = max(homog, abs(r2 - r1))
        unnorm = max(unnorm, abs(s2 - 2.0 * s1) / s1)
        lit.append(bg.lp_to_l1_check(phi, f, w.p, ql, qt))
        kol.append(bg.kolmogorov_check(phi, f, w.p, ql, qt))
        if k == w.distribution_k:
            Pf = np.abs(bg.apply_P_phi(phi, f, ql, targets=qt.points).values)
            alphas = np.geomspace(Pf.min() * 0.5, Pf.max(), w.n_alphas)
            a, m = bg.weak11_distribution(phi, f, ql, qt, alphas)
            table = {"alpha": a.tolist(), "measure": m.tolist(), "alpha_times_measure": (a * m).tolist()}
    growth = [b / a for a, b in zip(ratios, ratios[1:])]
    out = SuiteResult(
        {
            "weak11_max_growth": max(growth),
            "weak11_min_ratio": min(ratios),
            "weak11_max_ratio": max(ratios),
            "homogeneity_normalized_dev": homog,
            "homogeneity_unnormalized_rel_dev": unnorm,
            "lp_to_l1_literal_growth": max(b / a for a, b in zip(lit, lit[1:])),
            "kolmogorov_max_growth": max(b / a for a, b in zip(kol, kol[1:])),
        },
        {
            "weak11_bounded_growth": max(growth) <= 3.0,
            "weak11_homogeneity": homog <= tol.homogeneity and unnorm <= tol.homogeneity,
        },
        {"weak11_distribution": table},
    )
    for k, r in zip(w.k_values, ratios):
        out.scalars[f"weak11_ratio.k{k}"] = r
    return out


def factorization_suite(cfg: ExperimentConfig) -> SuiteResult:
    tol = cfg.tolerances
    q = build_quadrature(64, 128)
    rng = np.random.default_rng([cfg.seed, 8])
    targets = _random_disk_points(rng, 200, 0.95)
    fact = 0.0
    for name, phi in dict(builtin_zoo(), identity=Identity()).items():
        for f in (np.ones(q.points.size), np.real(q.points) + 0.5 * np.abs(q.points) ** 2):
            g = bg.GridFunction(f.astype(complex))
            P = bg.apply_P_phi(phi, g, q, targets=targets).values
            I = bg.apply_I_phi(phi, g, q, phi.evaluate(targets)).values
            fact = max(fact, float(np.max(np.abs(P - I))))
    qp = _quad(cfg)
    inner = _random_disk_points(rng, 200, 0.7)
    proj = 0.0
    for n in (0, 1):
        e = bg.GridFunction(bg.bergman_basis(n, qp.points))
        P = bg.apply_P_phi(Identity(), e, qp, targets=inner).values
        proj = max(proj, float(np.max(np.abs(P - bg.bergman_basis(n, inner)))))
    return SuiteResult(
        {"factorization_max_dev": fact, "projection_max_dev": proj},
        {"factorization": fact <= tol.factorization, "projection_fixes_e0_e1": proj <= tol.projection},
    )


# --- BMO ----------------------------------------------------------------------


def bmo_suite(cfg: ExperimentConfig) -> SuiteResult:
    b = cfg.bmo
    out = SuiteResult()
    band_lo, band_hi, pi_ratio = math.inf, 0.0, 0.0
    for name, f in bmo.TEST_FAMILY.items():
        est = {fl: bmo.bmo_seminorm(f, fl, b.n_regions, cfg.seed).value for fl in bmo.FLAVORS}
        for fl, v in est.items():
            out.scalars[f"bmo.{name}.{fl}"] = v
        vals = list(est.values())
        for x in vals:
            for y in vals:
                band_lo, band_hi = min(band_lo, x / y), max(band_hi, x / y)
        pi_ratio = max(pi_ratio, est["C"] / (math.pi * est["H"]))
    stab = 0.0
    for name, phi in (("identity", Identity()), ("radial_stretch_2", RadialStretch(2.0))):
        osc = bmo.pphi_oscillations(phi, bmo.smoothed_sign_real, 2 * b.pphi_regions, cfg.seed)
        small, big = osc[: b.pphi_regions].max(), osc.max()
        out.scalars[f"pphi_bmo.{name}.n"] = float(small)
        out.scalars[f"pphi_bmo.{name}.2n"] = float(big)
        stab = max(stab, abs(big / small - 1.0))
    out.scalars.update(flavor_ratio_min=band_lo, flavor_ratio_max=band_hi, c_over_pi_h_max=pi_ratio,
                       pphi_doubling_rel_change=stab)
    out.verdicts.update(
        flavor_comparability=band_lo >= 1 / 20 and band_hi <= 20,
        c_le_pi_h=pi_ratio <= 1.1,
        pphi_stability=stab <= 0.2,
    )
    return out


# --- Schatten -----------------------------------------------------------------


def schatten_suite(cfg: ExperimentConfig) -> SuiteResult:
    s, tol = cfg.schatten, cfg.tolerances
    integrand_dev, area_dev, diverged = 0.0, 0.0, True
    for K in [1.0] + list(s.K_values):
        phi = Identity() if K == 1.0 else RadialStretch(K)
        res = bg.schatten_criterion(phi, s.p, s.r_inner, s.levels)
        target = K**s.p
        integrand_dev = max(integrand_dev, abs(res.integrand_range[0] - target), abs(res.integrand_range[1] - target))
        closed = target * bg.lambda_measure(s.r_inner, res.level_radii[-1])
        area_dev = max(area_dev, abs(res.integral / closed - 1.0))
        diverged &= res.diverged
    return SuiteResult(
        {"schatten_integrand_max_dev": integrand_dev, "schatten_area_rel_dev": area_dev},
        {"schatten_integrand": integrand_dev <= tol.schatten_integrand, "schatten_diverged": bool(diverged),
         "schatten_area": area_dev <= tol.schatten_area},
    )


SUBCOMMANDS = {
    "distortion": [distortion_suite],
    "map-report": [map_report_suite, hersch_suite],
    "norm": [norm_suite, essential_suite],
    "weak11": [weak11_suite, factorization_suite],
    "bmo": [bmo_suite],
    "geometry-audit": [geometry_suite],
    "schatten": [schatten_suite],
}
SUBCOMMANDS["full-report"] = [s for name in list(SUBCOMMANDS) for s in SUBCOMMANDS[name]]
