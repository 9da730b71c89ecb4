"""Acceptance criteria, one test per criterion.

Each test records a one-line verdict in ``conftest.ACCEPTANCE``; the terminal
summary prints them in order. A test fails when either the tolerance or the
runtime budget is missed.
"""
import math
import time
from contextlib import contextmanager

import numpy as np
import pytest

import conftest
from fheat import geometry
from fheat.bounds import (EnvelopeParams, PDEKernel, davies_check, davies_j_monotonicity,
                          envelope_eps_study, gaussian_envelope_fit, liouville_example_check,
                          random_interval_pairs, stochastic_completeness_check)
from fheat.closedform import Bump, SolitonKernel, pde_residual
from fheat.evolution import optimal_poincare_constant
from fheat.geometry import WeightedSpace
from fheat.profiles import WeightProfile
from fheat.spectral import (bottom_of_spectrum, c5_constant, eigensolve, green_identity_check,
                            laplacian_l2_bound_check)


@contextmanager
def criterion(key, budget):
    """Time the body; the body fills ``box["ok"]`` and ``box["line"]``."""
    box = {"ok": False, "line": "did not complete"}
    start = time.perf_counter()
    try:
        yield box
    finally:
        elapsed = time.perf_counter() - start
        in_time = elapsed < budget
        ok = bool(box["ok"]) and in_time
        conftest.ACCEPTANCE[key] = (ok, f"{box['line']} [{elapsed:.1f}s / {budget:g}s]")
    assert box["ok"], box["line"]
    assert in_time, f"{key}: {elapsed:.1f}s exceeds {budget}s"


def test_01_pde_residual():
    with criterion("1 closed-form PDE residual", 5) as box:
        xs = np.linspace(-2, 2, 41)
        ts = np.linspace(0.1, 1.0, 19)
        worst = {}
        for kind in ("steady", "euclidean", "shrinking", "expanding"):
            worst[kind] = max(pde_residual(SolitonKernel(kind), xs, ts, y=y).residual for y in (0.0, 0.7))
        m = max(worst.values())
        box["ok"] = m <= 1e-5
        box["line"] = f"max normalized residual {m:.2e} <= 1e-05 ({', '.join(f'{k} {v:.1e}' for k, v in worst.items())})"


def test_02_cross_method():
    with criterion("2 cross-method agreement", 60) as box:
        space = WeightedSpace(WeightProfile.linear(1), L=12)
        exact = SolitonKernel("steady")
        es = eigensolve(space, (-12, 12), K=200, nodes=2048)
        pde = PDEKernel(space, (-12, 12), 2048)
        xs = np.linspace(-2, 2, 41)
        ys = np.array([-1.0, 0.0, 1.0])
        worst = {"spectral": 0.0, "pde": 0.0}
        for t in np.linspace(0.1, 1.0, 10):
            ref = exact(xs[None, :], ys[:, None], t)
            for name, got in (("spectral", es.kernel(ys, xs, t)), ("pde", pde.matrix(ys, xs, t))):
                # sup-norm relative error per source point and time slice
                err = np.max(np.abs(got - ref), axis=1) / np.max(np.abs(ref), axis=1)
                worst[name] = max(worst[name], float(err.max()))
        m = max(worst.values())
        box["ok"] = m <= 2e-3
        box["line"] = f"spectral {worst['spectral']:.2e}, pde {worst['pde']:.2e} <= 2e-03"


def test_03_stochastic_completeness():
    with criterion("3 stochastic completeness", 5) as box:
        cases = [(WeightedSpace(WeightProfile.linear(1), L=12), SolitonKernel("steady")),
                 (WeightedSpace(WeightProfile.quadratic(1), L=12), SolitonKernel("shrinking"))]
        reps = [stochastic_completeness_check(s, k, [0.0], [0.1, 0.5, 1.0], tol=1e-6) for s, k in cases]
        dev = max(abs(r["integral"] + r["tail"] - 1) for rep in reps for r in rep.details["rows"])
        box["ok"] = all(r.passed for r in reps)
        box["line"] = f"max |integral + tail - 1| = {dev:.1e} <= 1e-06 over steady and shrinking"


def test_04_bottom_of_spectrum():
    with criterion("4 bottom of spectrum", 30) as box:
        space = WeightedSpace(WeightProfile.linear(1), L=32)
        res = bottom_of_spectrum(space, nodes=1024)
        # long-time decay: -log H(0,0,t) = lambda t + alpha log t + c, least squares on [10, 40]
        ts = np.linspace(10, 40, 31)
        es = eigensolve(WeightedSpace(WeightProfile.linear(1), L=60), (-60, 60), K=200, nodes=4096)
        logs = {"closed": -np.log(SolitonKernel("steady")(0.0, 0.0, ts)),
                "spectral": -np.log([float(es.kernel([0.0], [0.0], t)[0, 0]) for t in ts])}
        A = np.column_stack([ts, np.log(ts), np.ones_like(ts)])
        rates = {k: float(np.linalg.lstsq(A, v, rcond=None)[0][0]) for k, v in logs.items()}
        box["ok"] = (res.monotone and abs(res.limit - 0.25) <= 0.01
                     and all(abs(r - 0.25) <= 0.01 for r in rates.values()))
        box["line"] = (f"exhaustion limit {res.limit:.5f}, decay rate closed {rates['closed']:.5f} "
                       f"spectral {rates['spectral']:.5f} (target 0.25 +- 0.01)")


def test_05_davies():
    with criterion("5 Davies estimate", 60) as box:
        rng = np.random.default_rng(5)
        t_grid = np.linspace(0.1, 2.0, 10)
        violations = 0
        total = 0
        for space, k, lam in ((WeightedSpace(WeightProfile.linear(1), L=12), SolitonKernel("steady"), 0.25),
                              (WeightedSpace(WeightProfile.constant(0), L=12), SolitonKernel("euclidean"), 0.0)):
            for b1, b2 in random_interval_pairs(rng, 100, -5, 5):
                rep = davies_check(space, k, b1, b2, t_grid, lam, tol=1e-6)
                violations += sum(not row["pass"] for row in rep.details["rows"])
                total += len(rep.details["rows"])
        euclid = WeightedSpace(WeightProfile.constant(0), L=4)
        es = eigensolve(euclid, (0, math.pi), K=200, nodes=2048)
        combos = [(a, t0) for a in (0.0, 0.25, 0.5, 1.0, 2.0) for t0 in (0.05, 0.1, 0.2, 0.5)]
        j_ok = [davies_j_monotonicity(euclid, (0, math.pi), (1.0, 1.5), a, t0, np.linspace(0.0, 3.0, 16),
                                      es=es).passed for a, t0 in combos]
        box["ok"] = violations == 0 and all(j_ok)
        box["line"] = (f"{violations} violations in {total} (pair, t) evaluations; "
                       f"J monotone in {sum(j_ok)}/{len(j_ok)} combos")


def test_06_comparison_geometry():
    with criterion("6 comparison geometry", 30) as box:
        rng = np.random.default_rng(6)
        profiles = [WeightProfile.constant(0), WeightProfile.linear(1), WeightProfile.quadratic(1),
                    WeightProfile.power(1)]
        reports = []
        for p in profiles:
            reports += geometry.random_comparison_reports(WeightedSpace(p, L=12), rng, 50)
        names = sorted({r.name for r in reports})
        failed = [r for r in reports if not r.passed]
        neg = geometry.monotone_quantity_check(WeightedSpace(WeightProfile.quadratic(-1), L=12), 0.0,
                                               np.linspace(0, 3, 61))
        where = neg.details["first_violation"]
        flat = WeightedSpace(WeightProfile.constant(0), L=12)
        dbl = []
        for n in (1, 2, 3):
            s = flat if n == 1 else WeightedSpace(WeightProfile.constant(0), L=12, dimension=n)
            c = 0.5 if n == 1 else 0.0
            dbl.append(abs(geometry.doubling_check(s, c, 1.0).measured - 2 ** n))
        box["ok"] = not failed and len(names) == 5 and not neg.passed and where is not None \
            and max(dbl) <= 1e-5
        box["line"] = (f"{len(reports) - len(failed)}/{len(reports)} reports pass over 200 queries "
                       f"({', '.join(names)}); -x^2 control fails at r={where and where['r']:g}; "
                       f"doubling |ratio - 2^n| max {max(dbl):.1e}")


def test_07_gaussian_envelope():
    with criterion("7 Gaussian envelope", 60) as box:
        space = WeightedSpace(WeightProfile.linear(1), L=12)
        k = SolitonKernel("steady")
        params = EnvelopeParams.uniform(1.0, 0.0, 4.0, (-2, 2), (0.05, 1.0))
        fit = gaussian_envelope_fit(space, k, params, "one_ball")
        study = envelope_eps_study(space, k, params, "one_ball", eps_grid=(2, 1, 0.5, 0.25))
        c = study.details["constants"]
        seq = [c[key] for key in ("2.0", "1.0", "0.5", "0.25")]
        mono = all(b >= a for a, b in zip(seq, seq[1:]))
        box["ok"] = math.isfinite(fit.measured) and fit.details["growth"] < 0.05 and mono and study.passed
        box["line"] = (f"c = {fit.measured:.4f}, refinement change {fit.details['growth']:.2%} < 5%; "
                       f"c(eps) for eps 2,1,0.5,0.25 = {', '.join(f'{v:.4f}' for v in seq)}")


def test_08_c5_and_l2_bound():
    with criterion("8 C5 and L2 bound", 5) as box:
        c5 = c5_constant()
        rng = np.random.default_rng(8)
        ok = []
        for p in (WeightProfile.constant(0), WeightProfile.linear(1)):
            es = eigensolve(WeightedSpace(p, L=6), (-6, 6), K=200, nodes=2048)
            for _ in range(20):
                ok.append(laplacian_l2_bound_check(es, float(rng.uniform(-4, 4)), float(rng.uniform(0.05, 2))).passed)
        err = abs(c5 - 4 * math.exp(-2))
        box["ok"] = err <= 1e-9 and all(ok)
        box["line"] = f"|C5 - 4e^-2| = {err:.1e} <= 1e-09; L2 bound holds on {sum(ok)}/{len(ok)} pairs"


def test_09_green_identity():
    with criterion("9 Green identity", 10) as box:
        rng = np.random.default_rng(9)
        rels = []
        for p in (WeightProfile.linear(1), WeightProfile.quadratic(1)):
            space = WeightedSpace(p, L=6)
            es = eigensolve(space, (-6, 6), K=200, nodes=8192)
            for _ in range(10):
                width = float(rng.uniform(0.5, 1.5))
                c = float(rng.uniform(-5 + width, 5 - width))
                # evaluation point inside the support: far from it both sides are
                # ~exp(-d^2/4t) and the relative comparison only measures tail noise
                x = float(rng.uniform(c - 0.8 * width, c + 0.8 * width))
                rep = green_identity_check(space, es, Bump(c, width), x, float(rng.uniform(0.2, 1.0)))
                rels.append(rep.measured)
        box["ok"] = max(rels) <= 1e-6
        box["line"] = f"max relative discrepancy {max(rels):.1e} <= 1e-06 over {len(rels)} bumps"


def test_10_liouville():
    with criterion("10 Liouville sharpness example", 30) as box:
        third = liouville_example_check(1)
        zero = liouville_example_check(None)
        d, z = third.details, zero.details
        slope = z["log_slope"]
        box["ok"] = (third.passed and d["harmonic_residual"] <= 1e-4 and d["l1_increments"][-1] < 1e-8
                     and d["l2_diverging"] and zero.passed and abs(slope - 1) <= 0.2)
        box["line"] = (f"delta=1/3: residual {d['harmonic_residual']:.1e}, last L1 increment "
                       f"{d['l1_increments'][-1]:.1e}, L2 diverging {d['l2_diverging']}; "
                       f"delta=0 slope vs model {slope:.3f}")


def test_11_poincare():
    with criterion("11 optimal Poincare constant", 5) as box:
        flat = WeightedSpace(WeightProfile.constant(0), L=4)
        vals = [optimal_poincare_constant(flat, 0.0, r) for r in (0.5, 1.0, 2.0)]
        err = max(abs(v - 4 / math.pi ** 2) for v in vals)
        box["ok"] = err <= 1e-4
        box["line"] = f"1/(r^2 mu_1) = {vals[1]:.6f}, max |err| {err:.1e} <= 1e-04 for r = 0.5, 1, 2"
