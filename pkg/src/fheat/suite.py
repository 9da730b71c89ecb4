"""Check registry and the ``verify`` manifest runner.

A manifest is a JSON object::

    {"seed": 0,
     "defaults": {"profile": "steady:+1", "L": 12},
     "checks": [{"check": "doubling", "center": 0.5, "r": 1.0}, ...]}

Every entry names a registered check; space keys (``profile``, ``L``,
``nodes``, ``rule``, ``dimension``) fall back to ``defaults``. Randomized
checks draw from a generator seeded by ``(seed, entry index)``, so reports
do not depend on execution order or worker count.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Dict

import numpy as np

from . import bounds, closedform, evolution, geometry, spectral
from .config import ConfigError, closed_form_for, make_space
from .report import BoundReport, sort_reports

SPACE_KEYS = ("profile", "L", "nodes", "rule", "dimension")
REGISTRY: Dict[str, Callable] = {}


def register(name: str):
    def deco(fn):
        REGISTRY[name] = fn
        return fn
    return deco


def _space(entry):
    return make_space(entry.get("profile", "steady:+1"), entry.get("L"), entry.get("nodes"),
                      entry.get("rule"), entry.get("dimension"))


def _kernel(entry, space):
    method = entry.get("source", "closed")
    if method == "closed":
        k = closed_form_for(entry.get("profile", "steady:+1"))
        if k is None:
            raise ConfigError(f"profile {entry.get('profile')!r} has no closed-form kernel")
        return k
    if method == "spectral":
        dom = entry.get("domain", [space.lo, space.hi])
        return spectral.eigensolve(space, dom, K=entry.get("K", spectral.DEFAULT_MODES),
                                   nodes=entry.get("eigen_nodes", spectral.DEFAULT_NODES))
    if method == "pde":
        return bounds.PDEKernel(space, entry.get("domain"), entry.get("eigen_nodes", spectral.DEFAULT_NODES))
    raise ConfigError(f"unknown kernel source {method!r}")


@register("volume_comparison")
def _c_volume(entry, rng):
    space = _space(entry)
    qs = geometry.random_queries(space, rng, entry.get("count", 20), entry.get("R_max", 4.0))
    return geometry.run_queries(space, qs)


@register("comparison_geometry")
def _c_comparison(entry, rng):
    space = _space(entry)
    return geometry.random_comparison_reports(space, rng, entry.get("count", 20), entry.get("R_max", 4.0))


@register("doubling")
def _c_doubling(entry, rng):
    space = _space(entry)
    return [geometry.doubling_check(space, entry.get("center", 0.0), entry.get("r", 1.0),
                                    entry.get("o", 0.0), entry.get("R"))]


@register("ball_overlap")
def _c_overlap(entry, rng):
    space = _space(entry)
    return [geometry.ball_overlap_check(space, entry.get("x", 0.0), entry.get("y", 0.5),
                                        entry.get("r", 1.0), entry.get("s"), entry.get("o", 0.0),
                                        entry.get("R", 8.0))]


def _r_grid(entry, space):
    r_max = entry.get("r_max", 3.0)
    start = 0.0 if space.dimension == 1 else space.h
    return np.linspace(start, r_max, entry.get("r_count", 61))


@register("monotone_quantity")
def _c_monotone(entry, rng):
    space = _space(entry)
    return [geometry.monotone_quantity_check(space, entry.get("x", 0.0), _r_grid(entry, space))]


@register("mean_curvature")
def _c_mean_curvature(entry, rng):
    space = _space(entry)
    r = _r_grid(entry, space)
    return [geometry.mean_curvature_check(space, entry.get("x", 0.0), r[r > 0])]


@register("volume_growth")
def _c_growth(entry, rng):
    space = _space(entry)
    R = entry.get("R_grid") or np.linspace(1.0, space.L, 12).tolist()
    return [geometry.volume_growth_check(space, entry.get("o", 0.0), R)]


@register("pde_residual")
def _c_residual(entry, rng):
    k = closedform.SolitonKernel(entry.get("kind", "steady"), entry.get("k", 1))
    xs = np.linspace(-2, 2, entry.get("nx", 41))
    ts = np.linspace(0.1, 1.0, entry.get("nt", 19))
    tol = entry.get("tol", 1e-5)
    res = closedform.pde_residual(k, xs, ts, entry.get("y", 0.0))
    return [BoundReport(name="pde_residual", anchor="closed-form kernel solves the f-heat equation",
                        inputs={"kernel": k.label, "tol": tol, "y": entry.get("y", 0.0)},
                        measured=res.residual, bound=tol, passed=res.residual <= tol,
                        margin=tol - res.residual,
                        details={"raw_h": res.raw_h, "raw_h2": res.raw_h2, "order_ratio": res.order_ratio})]


@register("delta_limit")
def _c_delta(entry, rng):
    k = closedform.SolitonKernel(entry.get("kind", "steady"), entry.get("k", 1))
    y = entry.get("y", 0.0)
    phi = closedform.Bump(entry.get("center", y), entry.get("width", 0.5))
    ts = entry.get("t_sequence", [1e-2, 1e-3, 1e-4, 1e-5])
    return [closedform.delta_limit_check(k, y, phi, ts, tol=entry.get("tol", 1e-4))]


@register("bottom_of_spectrum")
def _c_bottom(entry, rng):
    space = _space(entry)
    res = spectral.bottom_of_spectrum(space, entry.get("exhaustion"), nodes=entry.get("eigen_nodes", 1024))
    return [res.report(space.profile.label)]


@register("laplacian_l2_bound")
def _c_l2(entry, rng):
    space = _space(entry)
    es = spectral.eigensolve(space, entry.get("domain", [space.lo, space.hi]),
                             K=entry.get("K", 200), nodes=entry.get("eigen_nodes", 2048))
    pts = entry.get("points") or [[float(rng.uniform(es.a + 0.1 * (es.b - es.a), es.b - 0.1 * (es.b - es.a))),
                                   float(rng.uniform(0.05, 2.0))] for _ in range(entry.get("count", 10))]
    return [spectral.laplacian_l2_bound_check(es, x, t) for x, t in pts]


@register("green_identity")
def _c_green(entry, rng):
    space = _space(entry)
    es = spectral.eigensolve(space, entry.get("domain", [space.lo, space.hi]),
                             K=entry.get("K", 200), nodes=entry.get("eigen_nodes", 8192))
    out = []
    span = es.b - es.a
    for _ in range(entry.get("count", 5)):
        width = float(rng.uniform(0.5, 1.5))
        c = float(rng.uniform(es.a + width + 0.05 * span, es.b - width - 0.05 * span))
        # inside the support; far away both sides are exponentially small
        x = float(rng.uniform(c - 0.8 * width, c + 0.8 * width))
        t = float(rng.uniform(0.2, 1.0))
        out.append(spectral.green_identity_check(space, es, closedform.Bump(c, width), x, t))
    return out


@register("l1_contraction")
def _c_l1(entry, rng):
    space = _space(entry)
    bump = closedform.Bump(entry.get("center", 0.0), entry.get("width", 1.0))
    ts = entry.get("t_grid", np.linspace(0.05, 1.0, 20).tolist())
    return [evolution.l1_contraction_check(space, bump, ts, bc=bc, domain=entry.get("domain"),
                                           nodes=entry.get("eigen_nodes", 1024))
            for bc in entry.get("bcs", ["dirichlet", "neumann"])]


@register("mean_value")
def _c_mean_value(entry, rng):
    space = _space(entry)
    o, r, s = entry.get("o", 0.0), entry.get("r", 1.0), entry.get("s", 2.0)
    ys = entry.get("sources", [-0.5, 0.0, 0.5, 1.0])
    times = np.linspace(s - r * r, s, entry.get("nt", 41))
    traces = [evolution.kernel_from_delta(space, y, times, domain=entry.get("domain", [-8, 8]),
                                          nodes=entry.get("eigen_nodes", 1024)) for y in ys]
    return [evolution.mean_value_check(space, traces, o, r, s, entry.get("delta", 0.5),
                                       entry.get("delta_prime", 1.0), entry.get("p", 4.0))]


@register("poincare_fit")
def _c_poincare(entry, rng):
    space = _space(entry)
    c, r = entry.get("center", 0.0), entry.get("r", 1.0)
    fam = evolution.random_trig_family(rng, entry.get("count", 50), c, r)
    return [evolution.functional_inequality_fit(space, c, r, fam, "poincare")]


@register("sobolev_fit")
def _c_sobolev(entry, rng):
    space = _space(entry)
    c, r = entry.get("center", 0.0), entry.get("r", 1.0)
    fam = evolution.random_trig_family(rng, entry.get("count", 50), c, r)
    return [evolution.functional_inequality_fit(space, c, r, fam, "sobolev", p=entry.get("p", 4.0))]


@register("davies")
def _c_davies(entry, rng):
    space = _space(entry)
    src = _kernel(entry, space)
    ts = entry.get("t_grid", np.linspace(0.1, 2.0, 10).tolist())
    lam = entry.get("lambda1", 0.0)
    pairs = bounds.random_interval_pairs(rng, entry.get("count", 20), *entry.get("range", [-5.0, 5.0]))
    return [bounds.davies_check(space, src, b1, b2, ts, lam) for b1, b2 in pairs]


@register("davies_j")
def _c_davies_j(entry, rng):
    space = _space(entry)
    omega = entry.get("omega", [0.0, math.pi])
    es = spectral.eigensolve(space, omega, K=entry.get("K", 200), nodes=entry.get("eigen_nodes", 2048))
    ts = entry.get("t_grid", np.linspace(0.0, 3.0, 16).tolist())
    combos = entry.get("combos") or [[a, t0] for a in (0.0, 0.5, 1.0, 2.0) for t0 in (0.05, 0.2, 0.5)]
    B1 = entry.get("B1", [1.0, 1.5])
    return [bounds.davies_j_monotonicity(space, omega, B1, a, t0, ts, es=es) for a, t0 in combos]


def _envelope_params(entry):
    return bounds.EnvelopeParams.uniform(entry.get("eps", 1.0), entry.get("o", 0.0), entry.get("R", 4.0),
                                         entry.get("x_range", [-2.0, 2.0]), entry.get("t_range", [0.05, 1.0]),
                                         entry.get("nx", 21), entry.get("nt", 20))


@register("gaussian_envelope")
def _c_envelope(entry, rng):
    space = _space(entry)
    return [bounds.gaussian_envelope_fit(space, _kernel(entry, space), _envelope_params(entry),
                                         entry.get("which", "one_ball"))]


@register("envelope_eps")
def _c_envelope_eps(entry, rng):
    space = _space(entry)
    return [bounds.envelope_eps_study(space, _kernel(entry, space), _envelope_params(entry),
                                      entry.get("which", "one_ball"), entry.get("eps_grid", bounds.EPS_GRID))]


@register("stochastic_completeness")
def _c_completeness(entry, rng):
    space = _space(entry)
    return [bounds.stochastic_completeness_check(space, _kernel(entry, space), entry.get("x", [0.0]),
                                                 entry.get("t", [0.1, 0.5, 1.0]))]


@register("liouville_example")
def _c_liouville(entry, rng):
    return [bounds.liouville_example_check(entry.get("m", 1), entry.get("R_schedule"))]


DEFAULT_MANIFEST = {
    "seed": 0,
    "defaults": {"profile": "steady:+1", "L": 12},
    "checks": [
        {"check": "pde_residual", "kind": "steady"},
        {"check": "comparison_geometry", "count": 20},
        {"check": "volume_growth", "L": 10},
        {"check": "green_identity", "domain": [-6, 6]},
        {"check": "laplacian_l2_bound", "domain": [-6, 6]},
        {"check": "l1_contraction", "domain": [-3, 3]},
        {"check": "mean_value"},
        {"check": "poincare_fit", "count": 30},
        {"check": "davies", "lambda1": 0.25},
        {"check": "gaussian_envelope"},
        {"check": "envelope_eps"},
        {"check": "stochastic_completeness"},
        {"check": "bottom_of_spectrum"},
    ],
}


def validate_manifest(manifest: dict) -> list:
    """Resolved check entries; raises :class:`ConfigError` on unknown names or empty lists."""
    checks = manifest.get("checks")
    if not checks:
        raise ConfigError("manifest lists no checks")
    defaults = manifest.get("defaults", {})
    out = []
    for i, raw in enumerate(checks):
        if not isinstance(raw, dict) or "check" not in raw:
            raise ConfigError(f"check entry {i} needs a 'check' name")
        if raw["check"] not in REGISTRY:
            raise ConfigError(f"unknown check {raw['check']!r}; valid names: {', '.join(sorted(REGISTRY))}")
        entry = {k: v for k, v in defaults.items() if k in SPACE_KEYS or k not in raw}
        entry.update(raw)
        out.append(entry)
    return out


def run_manifest(manifest: dict, jobs: int = 1) -> list:
    entries = validate_manifest(manifest)
    seeds = np.random.SeedSequence(int(manifest.get("seed", 0))).spawn(len(entries))

    def run(i):
        return REGISTRY[entries[i]["check"]](entries[i], np.random.default_rng(seeds[i]))

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(run, range(len(entries))))
    else:
        parts = [run(i) for i in range(len(entries))]
    return sort_reports(r for part in parts for r in part)


def exit_status(reports) -> int:
    """0 when every hard check passes; fitted checks never change the status."""
    return 0 if all(r.passed for r in reports if r.kind == "hard") else 1
