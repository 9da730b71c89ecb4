"""Crank-Nicolson time stepping for ``u_t = Delta_f u``.

The solver works in the symmetric frame of :mod:`fheat.spectral`, so the
same finite-volume operator drives both the eigenfunction expansion and the
time stepper. Startup uses backward-Euler half steps (Rannacher smoothing)
to damp the high modes of a mollified point mass.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import linalg
from scipy.interpolate import CubicSpline
from scipy.special import logsumexp

from . import quadrature
from .errors import NumericError, PreconditionError
from .geometry import WeightedSpace, weighted_ball_volume
from .report import BoundReport
from .spectral import DEFAULT_NODES, Discretization, assemble, eigensolve

POSITIVITY_TOL = 1e-9
MASS_TOL = 1e-8


class HeatSolver:
    """Factorised implicit steps for one discretisation; reused across states."""

    def __init__(self, space: WeightedSpace, domain=None, nodes: int = DEFAULT_NODES,
                 bc: str = "dirichlet"):
        a, b = (space.lo, space.hi) if domain is None else map(float, domain)
        self.space = space
        self.disc: Discretization = assemble(space, a, b, nodes, bc)
        self._factors = {}

    @property
    def bc(self) -> str:
        return self.disc.bc

    @property
    def x(self) -> np.ndarray:
        return self.disc.x

    def _factor(self, tau: float):
        """Cholesky factor of ``I + tau S`` in upper banded storage."""
        key = round(tau, 15)
        if key not in self._factors:
            ab = np.zeros((2, self.disc.size))
            ab[0, 1:] = tau * self.disc.offdiag
            ab[1] = 1 + tau * self.disc.diag
            try:
                self._factors[key] = linalg.cholesky_banded(ab)
            except linalg.LinAlgError as exc:
                raise NumericError(f"implicit step matrix not positive definite: {exc}") from exc
        return self._factors[key]

    def implicit(self, v: np.ndarray, dt: float, theta: float) -> np.ndarray:
        """``(I + theta dt S) v' = (I - (1 - theta) dt S) v``."""
        rhs = v if theta == 1.0 else v - (1 - theta) * dt * self.disc.apply(v)
        return linalg.cho_solve_banded((self._factor(theta * dt), False), rhs)


@dataclass(frozen=True)
class EvolutionState:
    """Solution of the weighted heat equation at one time, in the symmetric frame."""

    solver: HeatSolver = field(repr=False)
    t: float
    v: np.ndarray = field(repr=False)
    steps: int = 0
    min_ratio: float = 0.0  # min u / max u0 seen so far

    @property
    def u(self) -> np.ndarray:
        """Solution on the full grid (Dirichlet ends are zero)."""
        out = np.zeros(self.solver.x.size)
        out[self.solver.disc.unknown] = self.solver.disc.from_symmetric(self.v)
        return out

    @property
    def mass(self) -> float:
        """``int u d mu`` in the discrete inner product."""
        return float(np.sum(np.exp(0.5 * self.solver.disc.log_mass) * self.v))

    @classmethod
    def from_values(cls, solver: HeatSolver, u0: np.ndarray, t0: float = 0.0) -> "EvolutionState":
        u0 = np.asarray(u0, dtype=float)
        if u0.shape != solver.x.shape:
            raise PreconditionError("initial data must be sampled on the solver grid")
        if not np.all(np.isfinite(u0)):
            raise PreconditionError("initial data must be finite")
        v = solver.disc.to_symmetric(u0[solver.disc.unknown])
        return cls(solver, float(t0), v, 0, 0.0)


def step(state: EvolutionState, dt: float, theta: float = 0.5, u0_max: float = None) -> EvolutionState:
    """Advance by ``dt``; ``theta = 0.5`` is Crank-Nicolson, ``1`` backward Euler."""
    if not dt > 0:
        raise PreconditionError("dt must be positive")
    v = state.solver.implicit(state.v, dt, theta)
    if not np.all(np.isfinite(v)):
        raise NumericError(f"non-finite solution after step at t={state.t + dt:g}")
    new = replace(state, t=state.t + dt, v=v, steps=state.steps + 1)
    if u0_max:
        ratio = float(np.min(new.u)) / u0_max
        new = replace(new, min_ratio=min(state.min_ratio, ratio))
    return new


def advance(state: EvolutionState, t_end: float, dt: float, rannacher: int = 0,
            u0_max: float = None, on_step: Callable = None) -> EvolutionState:
    """Step to ``t_end`` with spacing at most ``dt``, landing exactly on ``t_end``.

    The first ``rannacher`` steps are backward-Euler half steps.
    """
    span = t_end - state.t
    if span < -1e-14:
        raise PreconditionError("cannot step backwards in time")
    if span <= 1e-14:
        return state
    n = max(1, math.ceil(span / dt - 1e-9))
    dt_eff = span / n
    s = state
    done = 0.0
    for _ in range(rannacher):
        s = step(s, dt_eff / 2, theta=1.0, u0_max=u0_max)
        done += dt_eff / 2
        if on_step:
            on_step(s)
    remaining = span - done
    if remaining > 1e-14:
        m = max(1, round(remaining / dt_eff))
        for _ in range(m):
            s = step(s, remaining / m, u0_max=u0_max)
            if on_step:
                on_step(s)
    return replace(s, t=float(t_end))


@dataclass
class SolutionTrace:
    """Samples ``u(x_j, t_k)`` on a grid; ``y`` is set for kernel slices ``H(., y, t)``."""

    x: np.ndarray
    times: np.ndarray
    values: np.ndarray  # shape (len(times), len(x))
    method: str = "pde"
    y: Optional[float] = None
    errors: dict = field(default_factory=dict)
    manifest: dict = field(default_factory=dict)
    masses: Optional[np.ndarray] = None
    min_ratio: float = 0.0

    def at(self, pts, k: int) -> np.ndarray:
        return CubicSpline(self.x, self.values[k])(np.asarray(pts, dtype=float))

    def to_csv_rows(self):
        for k, t in enumerate(self.times):
            for xj, uj in zip(self.x, self.values[k]):
                yield (float(xj), float(t), float(uj))


# kernel slices are traces with a source point
KernelField = SolutionTrace


def default_dt(space_h: float, t_target: float) -> float:
    return min(space_h, t_target / 200)


def solve(space: WeightedSpace, u0, times: Sequence[float], domain=None,
          nodes: int = DEFAULT_NODES, bc: str = "dirichlet", dt: float = None,
          rannacher: int = 2, t0: float = 0.0, record_mass: bool = False) -> SolutionTrace:
    """Evolve ``u0`` (array on the grid or callable) and sample at ``times``."""
    solver = HeatSolver(space, domain, nodes, bc)
    values0 = u0(solver.x) if callable(u0) else np.asarray(u0, dtype=float)
    state = EvolutionState.from_values(solver, values0, t0)
    times = np.asarray(times, dtype=float)
    if np.any(np.diff(times) < 0) or times[0] < t0:
        raise PreconditionError("sample times must be sorted and not before t0")
    if dt is None:
        dt = default_dt(solver.disc.h, float(times[-1]))
    u0_max = float(np.max(np.abs(values0))) or None
    masses = [state.mass] if record_mass else None
    hook = (lambda s: masses.append(s.mass)) if record_mass else None
    out = []
    for k, t in enumerate(times):
        state = advance(state, float(t), dt, rannacher if k == 0 else 0, u0_max, hook)
        out.append(state.u)
    return SolutionTrace(x=solver.x, times=times, values=np.array(out), method="pde",
                         masses=None if masses is None else np.array(masses),
                         min_ratio=state.min_ratio,
                         manifest={"space": space.spec(), "domain": [solver.x[0], solver.x[-1]],
                                   "nodes": nodes, "bc": bc, "dt": dt, "rannacher": rannacher})


def mollified_delta(solver: HeatSolver, y: float, width: float) -> np.ndarray:
    """Leading short-time kernel ``e^{(f(x)+f(y))/2} G_s(x - y)``, ``s = width^2/2``,
    normalised to unit ``d mu`` mass on the grid."""
    prof = solver.space.profile
    x = solver.x
    s0 = width ** 2 / 2
    shape = 0.5 * (prof.f(x) - prof.f(y)) - (x - y) ** 2 / (4 * s0)
    full_log_mass = np.full(x.size, -np.inf)
    full_log_mass[solver.disc.unknown] = solver.disc.log_mass
    log_z = logsumexp(shape + full_log_mass)
    return np.exp(shape - log_z)


def kernel_from_delta(space: WeightedSpace, y: float, t_target, mollifier_width: float = None,
                      domain=None, nodes: int = DEFAULT_NODES, dt: float = None,
                      rannacher: int = 2, estimate_error: bool = False) -> KernelField:
    """Heat kernel slice ``H(., y, t)`` from an evolved mollified point mass.

    The mollifier is a weighted Gaussian of standard deviation ``width`` (default
    ``4h``), which approximates the kernel at time ``width^2/2``; evolution
    starts from that time. ``t_target`` may be a sequence of sample times.
    """
    solver = HeatSolver(space, domain, nodes, "dirichlet")
    h = solver.disc.h
    width = 4 * h if mollifier_width is None else float(mollifier_width)
    if width < 4 * h * (1 - 1e-12):
        raise PreconditionError(f"mollifier width {width:g} below 4h = {4 * h:g}")
    times = np.atleast_1d(np.asarray(t_target, dtype=float))
    s0 = width ** 2 / 2
    if times[0] <= s0:
        raise PreconditionError(f"target time must exceed width^2/2 = {s0:g}")
    u0 = mollified_delta(solver, y, width)
    if dt is None:
        dt = default_dt(h, float(times[0]))
    trace = solve(space, u0, times, domain, nodes, "dirichlet", dt, rannacher, t0=s0)
    errors = {"mollification_scale": width ** 2 / float(times[0])}
    if estimate_error:
        coarse = solve(space, u0, times, domain, nodes, "dirichlet", 2 * dt, rannacher, t0=s0)
        diff = np.max(np.abs(coarse.values - trace.values), axis=1) / np.max(np.abs(trace.values), axis=1)
        errors["stepping"] = (diff / 3).tolist()
    trace.y = float(y)
    trace.errors = errors
    trace.method = "pde"
    trace.manifest.update({"y": float(y), "mollifier_width": width, "start_time": s0})
    return trace


def l1_contraction_check(space: WeightedSpace, u0, t_grid, bc: str = "dirichlet",
                         domain=None, nodes: int = DEFAULT_NODES, dt: float = None,
                         tol: float = MASS_TOL) -> BoundReport:
    """Mass ``int u d mu`` is nonincreasing (Dirichlet) or constant (Neumann) step by step."""
    trace = solve(space, u0, t_grid, domain, nodes, bc, dt, rannacher=2, record_mass=True)
    m = trace.masses
    scale = max(abs(m[0]), 1e-300)
    inc = np.diff(m) / scale
    if bc == "neumann":
        worst = float(np.max(np.abs(inc))) if inc.size else 0.0
    else:
        worst = float(np.max(inc)) if inc.size else 0.0
    passed = worst <= tol
    values0 = u0(trace.x) if callable(u0) else np.asarray(u0)
    notes = [] if np.all(values0 >= 0) else ["initial data not nonnegative"]
    if m[0] == 0:
        passed = bool(np.all(m == 0))
    return BoundReport(
        name="l1_contraction", anchor="contractive semigroup in L_f^1",
        inputs={"space": space.spec(), "t_grid": list(map(float, t_grid)), "bc": bc,
                "domain": [float(trace.x[0]), float(trace.x[-1])], "nodes": nodes, "tol": tol},
        measured=worst, bound=tol, passed=passed, margin=tol - worst, notes=notes,
        details={"mass_initial": float(m[0]), "mass_final": float(m[-1]), "steps": int(m.size - 1),
                 "min_ratio": trace.min_ratio})


def _ball_time_integral(space, trace: SolutionTrace, o, rho, t_lo, t_hi):
    """``int_{t_lo}^{t_hi} int_{B_o(rho)} u d mu dt`` and ``sup`` of ``u`` there."""
    a, b = (0.0, rho) if space.radial else (o - rho, o + rho)
    xs, dx = quadrature.nodes(a, b, min(space.h, (b - a) / 32))
    wx = quadrature.weights(xs.size, dx, space.rule) * space.density(xs)
    times = trace.times
    if t_lo < times[0] - 1e-12 or t_hi > times[-1] + 1e-12:
        raise PreconditionError("trace does not cover the time window of the cylinder")
    inside = np.nonzero((times > t_lo + 1e-12) & (times < t_hi - 1e-12))[0]
    spl = CubicSpline(trace.x, trace.values, axis=1)
    samples = spl(xs)  # (nt, nx)

    def at_time(t):
        k = np.searchsorted(times, t)
        if k < times.size and abs(times[k] - t) < 1e-12:
            return samples[k]
        k = min(max(k, 1), times.size - 1)
        lam = (t - times[k - 1]) / (times[k] - times[k - 1])
        return (1 - lam) * samples[k - 1] + lam * samples[k]

    ts = np.concatenate([[t_lo], times[inside], [t_hi]])
    rows = np.array([at_time(t) for t in ts])
    spatial = rows @ wx
    integral = float(np.sum((spatial[1:] + spatial[:-1]) * np.diff(ts) / 2))
    return integral, float(np.max(rows)), float(np.min(rows))


def mean_value_check(space: WeightedSpace, traces: Sequence[SolutionTrace], o: float, r: float,
                     s: float, delta: float, delta_prime: float = 1.0, p: float = 4.0,
                     stability: float = 10.0) -> BoundReport:
    """Fit ``c`` in ``sup_{Q_delta} u <= c int_{Q_delta'} u / ((delta'-delta)^{2+p} r^2 V_f(B_o(r)))``.

    ``Q_delta = B_o(delta r) x (s - delta r^2, s)``. Each trace gives one
    constant; the family passes when ``max c / median c <= stability``.
    """
    if not (0 < delta < delta_prime <= 1):
        raise PreconditionError("need 0 < delta < delta' <= 1")
    if isinstance(traces, SolutionTrace):
        traces = [traces]
    if not traces:
        raise PreconditionError("empty family of solutions")
    vol = weighted_ball_volume(space, o, r)
    cs = []
    for tr in traces:
        _, sup_small, min_small = _ball_time_integral(space, tr, o, delta * r, s - delta * r * r, s)
        integral, _, min_big = _ball_time_integral(space, tr, o, delta_prime * r,
                                                   s - delta_prime * r * r, s)
        if min(min_small, min_big) <= 0:
            raise PreconditionError("solution must be positive on the cylinder")
        core = integral / ((delta_prime - delta) ** (2 + p) * r * r * vol)
        cs.append(sup_small / core)
    cs = np.array(cs)
    spread = float(cs.max() / np.median(cs))
    return BoundReport(
        name="mean_value", anchor="parabolic mean value inequality on cylinders",
        inputs={"space": space.spec(), "o": o, "r": r, "s": s, "delta": delta,
                "delta_prime": delta_prime, "p": p, "family_size": len(cs)},
        measured=float(cs.max()), bound=math.inf, passed=spread <= stability, kind="fitted",
        notes=["constant fitted; pass means max/median <= %g over the family" % stability],
        details={"constants": cs.tolist(), "spread": spread})


@dataclass(frozen=True)
class TrigTest:
    """Smooth test function ``sum_k a_k cos(k pi (z+1)/2) + b_k sin(k pi (z+1)/2)``, ``z = (x-c)/r``."""

    center: float
    radius: float
    a: tuple
    b: tuple

    def _z(self, x):
        return np.pi * ((np.asarray(x, dtype=float) - self.center) / self.radius + 1) / 2

    def __call__(self, x):
        z = self._z(x)
        return sum(ak * np.cos(k * z) + bk * np.sin(k * z)
                   for k, (ak, bk) in enumerate(zip(self.a, self.b)))

    def derivative(self, x):
        z = self._z(x)
        c = np.pi / (2 * self.radius)
        return sum(c * k * (-ak * np.sin(k * z) + bk * np.cos(k * z))
                   for k, (ak, bk) in enumerate(zip(self.a, self.b)))


def random_trig_family(rng: np.random.Generator, count: int, center: float, radius: float,
                       modes: int = 6) -> list:
    out = []
    for _ in range(count):
        k = np.arange(modes + 1)
        decay = 1.0 / np.maximum(k, 1) ** 2
        a = rng.standard_normal(modes + 1) * decay
        b = rng.standard_normal(modes + 1) * decay
        b[0] = 0.0
        out.append(TrigTest(center, radius, tuple(a.tolist()), tuple(b.tolist())))
    return out


def functional_inequality_fit(space: WeightedSpace, center: float, r: float, family,
                              which: str = "poincare", p: float = 4.0, nodes: int = DEFAULT_NODES,
                              stability: float = 0.25) -> BoundReport:
    """Fit the Poincare or Sobolev constant on ``B_center(r)`` over a test family.

    For ``poincare`` the sharp constant ``1/(r^2 mu_1)`` from the weighted
    Neumann problem is also computed, and every ratio must stay below it.
    Constant members are skipped. Stability compares the maximum over the
    first half of the family with the maximum over all of it.
    """
    if which not in ("poincare", "sobolev"):
        raise ValueError("which must be 'poincare' or 'sobolev'")
    if not family:
        raise PreconditionError("empty test family")
    if which == "sobolev" and not p > 2:
        raise PreconditionError("Sobolev fit needs p > 2")
    a, b = (0.0, r) if space.radial else (center - r, center + r)
    space.require_center(center)
    space.require_interval(a, b)
    xs, dx = quadrature.nodes(a, b, min(space.h, r / 256))
    w = quadrature.weights(xs.size, dx, space.rule) * space.density(xs)
    vol = float(w.sum())
    ratios, skipped = [], 0
    for phi in family:
        val, der = phi(xs), phi.derivative(xs)
        energy = float(w @ der ** 2)
        if which == "poincare":
            if energy <= 1e-14 * max(1.0, float(w @ val ** 2)):
                skipped += 1
                continue
            mean = float(w @ val) / vol
            ratios.append(float(w @ (val - mean) ** 2) / (r * r * energy))
        else:
            qexp = 2 * p / (p - 2)
            num = float(w @ np.abs(val) ** qexp) ** (2 / qexp) * vol ** (2 / p)
            den = r * r * (energy + float(w @ val ** 2) / (r * r))
            if den <= 0:
                skipped += 1
                continue
            ratios.append(num / den)
    if not ratios:
        raise PreconditionError("every member of the family was degenerate")
    ratios = np.array(ratios)
    half = ratios[: max(1, ratios.size // 2)]
    growth = float(ratios.max() / half.max() - 1)
    details = {"ratios_max": float(ratios.max()), "half_max": float(half.max()),
               "skipped": skipped, "growth": growth}
    passed = bool(np.isfinite(ratios.max()) and growth <= stability)
    bound = math.inf
    kind = "fitted"
    if which == "poincare":
        es = eigensolve(space, (a, b), K=2, nodes=nodes, bc="neumann")
        mu1 = float(es.eigenvalues[1])
        bound = 1.0 / (r * r * mu1)
        details.update({"mu1": mu1, "optimal_constant": bound})
        passed = passed and ratios.max() <= bound * (1 + 1e-3)
    return BoundReport(
        name=f"{which}_fit", anchor="local Neumann Poincare inequality" if which == "poincare"
        else "local Sobolev inequality",
        inputs={"space": space.spec(), "center": center, "r": r, "p": p,
                "family_size": len(family)},
        measured=float(ratios.max()), bound=bound, passed=passed, kind=kind, details=details)


def optimal_poincare_constant(space: WeightedSpace, center: float, r: float,
                              nodes: int = DEFAULT_NODES) -> float:
    """``1/(r^2 mu_1)`` with ``mu_1`` the first nonzero weighted Neumann eigenvalue of the ball."""
    a, b = (0.0, r) if space.radial else (center - r, center + r)
    es = eigensolve(space, (a, b), K=2, nodes=nodes, bc="neumann")
    return 1.0 / (r * r * float(es.eigenvalues[1]))
