"""Acceptance criteria 1-11 at their stated tolerances and runtime budgets.

Each test prints one PASS/FAIL line; the lines are collected again in the
terminal summary.
"""
import math
import subprocess
import sys
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from qccomp import suites
from qccomp.config import ExperimentConfig
from qccomp.distortion import grotzsch_mu, psi


def record(n, ok, seconds, budget, detail):
    ok = bool(ok) and (budget is None or seconds < budget)
    limit = "" if budget is None else f" (budget {budget:g} s)"
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {seconds:.1f} s{limit}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def timed(fn, *args, **kw):
    t = time.perf_counter()
    out = fn(*args, **kw)
    return out, time.perf_counter() - t


def test_criterion_01_distortion_identities():
    t = time.perf_counter()
    r = np.arange(1, 100) / 100
    semigroup = max(
        float(np.max(np.abs(psi(a * b, r) - psi(a, psi(b, r))))) for a in (1.25, 2, 4) for b in (1.25, 2, 4)
    )
    landen = float(np.max(np.abs(psi(2.0, r) - 2 * np.sqrt(r) / (1 + r))))
    symmetry = float(np.max(np.abs(grotzsch_mu(r) * grotzsch_mu(np.sqrt(1 - r * r)) - (math.pi / 2) ** 2)))
    dt = time.perf_counter() - t
    ok = semigroup <= 1e-8 and landen <= 1e-9 and symmetry <= 1e-9
    assert record(1, ok, dt, 5, f"semigroup {semigroup:.2e}, landen {landen:.2e}, mu symmetry {symmetry:.2e}")


def test_criterion_02_hersch_pfluger():
    res, dt = timed(suites.hersch_suite, ExperimentConfig())
    v = res.scalars["hersch_violations_total"]
    assert record(2, v == 0, dt, 5, f"{v} violations over 4 maps x 1000 points")


def test_criterion_03_pseudohyperbolic_inclusion():
    res, dt = timed(suites.ph_inclusion_suite, ExperimentConfig())
    s = res.scalars
    ok = s["outer_violations"] == 0 and s["inner_violations"] == 0 and s["area_outside_3sigma"] == 0
    assert record(3, ok, dt, 60, f"membership violations {s['outer_violations'] + s['inner_violations']}, "
                                 f"areas outside 3 sigma {s['area_outside_3sigma']}")


def test_criterion_04_operator_norms():
    res, dt = timed(suites.norm_suite, ExperimentConfig(), N=32)
    s, v = res.scalars, res.verdicts
    ok = all(v.values())
    assert record(4, ok, dt, 180, f"identity {s['identity_norm']:.12f}, route dev {s['route_max_dev']:.1e}, "
                                  f"norm/sup_m in [{s['norm_over_sup_m_min']:.3f}, {s['norm_over_sup_m_max']:.3f}], "
                                  f"verdicts {v}")


def test_criterion_05_essential_norm_signature():
    res, dt = timed(suites.essential_suite, ExperimentConfig(), N=32)
    s = res.scalars
    ok = s["geometric_max_dev"] <= 1e-10 and s["proxy_fraction_min"] >= 0.1
    assert record(5, ok, dt, 120, f"|N/log - K| max {s['geometric_max_dev']:.1e}, "
                                  f"proxy fraction min {s['proxy_fraction_min']:.3f}")


def test_criterion_06_carleson_boxes():
    res, dt = timed(suites.carleson_suite, ExperimentConfig())
    s = res.scalars
    ok = (s["mei_failures"] == 0 and s["mei_worst_ratio"] <= 6 and s["pair_failures"] == 0
          and s["image_box_worst_spread"] <= 4 and s["rengel_max_dev"] <= 1e-12)
    assert record(6, ok, dt, 120, f"mei failures {s['mei_failures']} worst ratio {s['mei_worst_ratio']:.2f}, "
                                  f"pair failures {s['pair_failures']}, image-box spread {s['image_box_worst_spread']:.3f}, "
                                  f"rengel dev {s['rengel_max_dev']:.1e}")


def test_criterion_07_weak11():
    res, dt = timed(suites.weak11_suite, ExperimentConfig())
    s = res.scalars
    ok = s["weak11_max_growth"] <= 3 and s["homogeneity_normalized_dev"] <= 1e-12
    assert record(7, ok, dt, 120, f"max successive growth {s['weak11_max_growth']:.3f}, "
                                  f"homogeneity dev {s['homogeneity_normalized_dev']:.1e}")


def test_criterion_08_factorization_and_projection():
    res, dt = timed(suites.factorization_suite, ExperimentConfig())
    s = res.scalars
    ok = s["factorization_max_dev"] <= 1e-8 and s["projection_max_dev"] <= 1e-6
    assert record(8, ok, dt, 60, f"factorization dev {s['factorization_max_dev']:.1e}, "
                                 f"projection dev {s['projection_max_dev']:.1e}")


def test_criterion_09_bmo():
    res, dt = timed(suites.bmo_suite, ExperimentConfig())
    s = res.scalars
    ok = (s["flavor_ratio_min"] >= 1 / 20 and s["flavor_ratio_max"] <= 20 and s["c_over_pi_h_max"] <= 1.1
          and s["pphi_doubling_rel_change"] <= 0.2)
    assert record(9, ok, dt, 180, f"flavor ratios [{s['flavor_ratio_min']:.3f}, {s['flavor_ratio_max']:.3f}], "
                                  f"C/(pi H) {s['c_over_pi_h_max']:.3f}, "
                                  f"P_phi doubling change {s['pphi_doubling_rel_change']:.3f}")


def test_criterion_10_schatten():
    res, dt = timed(suites.schatten_suite, ExperimentConfig())
    s, v = res.scalars, res.verdicts
    ok = s["schatten_integrand_max_dev"] <= 1e-10 and v["schatten_diverged"] and s["schatten_area_rel_dev"] <= 0.01
    assert record(10, ok, dt, 30, f"integrand dev {s['schatten_integrand_max_dev']:.1e}, "
                                  f"diverged {v['schatten_diverged']}, area rel dev {s['schatten_area_rel_dev']:.1e}")


def test_criterion_11_reproducible_full_report(tmp_path):
    t = time.perf_counter()
    paths = []
    for name in ("a", "b"):
        out = tmp_path / name
        proc = subprocess.run(
            [sys.executable, "-m", "qccomp", "full-report", "--seed", "11", "--reproducible", "--out", str(out)],
            capture_output=True, text=True,
        )
        assert proc.returncode in (0, 1), proc.stderr
        paths.append(out / "report.json")
    dt = time.perf_counter() - t
    a, b = (p.read_bytes() for p in paths)
    tables = sorted(p.name for p in (tmp_path / "a" / "tables").iterdir())
    same_tables = all(
        (tmp_path / "a" / "tables" / n).read_bytes() == (tmp_path / "b" / "tables" / n).read_bytes() for n in tables
    )
    assert record(11, a == b and same_tables, dt, None,
                  f"report {len(a)} bytes identical: {a == b}, {len(tables)} tables identical: {same_tables}")
