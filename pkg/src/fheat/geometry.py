"""Weighted spaces, ball volumes and the comparison-geometry checks.

A space is either the weighted line ``(R, e^{-f} dx)`` truncated to
``[-L, L]`` or a radial model ``(R^n, e^{-f(|x|)} dx)`` truncated to the ball
of radius ``L``. Balls are integrated ray by ray from their centre, which is
polar coordinates in both cases: in 1-D the unit sphere is ``{-1, +1}``, in the
radial case balls are centred at the origin and the area element is
``omega_{n-1} r^{n-1} e^{-f(r)}``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import special

from . import quadrature
from .errors import DegenerateQueryError, DomainError, PreconditionError
from .profiles import WeightProfile, curvature_note
from .report import TOL_MONO, TOL_REL_ANALYTIC, BoundReport, log_margin

SMALL_R = 1e-6


def sphere_area(n: int) -> float:
    """Area of the unit sphere S^{n-1} in R^n."""
    return 2 * math.pi ** (n / 2) / math.gamma(n / 2)


@dataclass(frozen=True)
class WeightedSpace:
    profile: WeightProfile
    L: float
    dimension: int = 1
    nodes: int = 2049
    rule: str = "simpson"
    origin: float = 0.0
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if int(self.dimension) != self.dimension or self.dimension < 1:
            raise ValueError("dimension must be a positive integer")
        if self.nodes < 16:
            raise ValueError("a space needs at least 16 grid nodes")
        if not self.L > 0:
            raise ValueError("truncation L must be positive")
        if self.rule not in quadrature.RULES:
            raise ValueError(f"unknown quadrature rule {self.rule!r}")
        if self.dimension > 1 and not self.profile.is_even:
            raise ValueError("radial spaces need a radial (even) profile; "
                             f"{self.profile.label} is not")

    @property
    def radial(self) -> bool:
        return self.dimension > 1

    @property
    def lo(self) -> float:
        return 0.0 if self.radial else -self.L

    @property
    def hi(self) -> float:
        return self.L

    @property
    def grid(self) -> np.ndarray:
        if "grid" not in self._cache:
            self._cache["grid"] = np.linspace(self.lo, self.hi, self.nodes)
        return self._cache["grid"]

    @property
    def h(self) -> float:
        return (self.hi - self.lo) / (self.nodes - 1)

    def density(self, x):
        """Density of ``d mu`` with respect to ``dx`` (1-D) or ``dr`` (radial)."""
        x = np.asarray(x, dtype=float)
        if not self.radial:
            return np.exp(-self.profile.f(x))
        n = self.dimension
        return sphere_area(n) * x ** (n - 1) * np.exp(-self.profile.f(x))

    @property
    def weights(self) -> np.ndarray:
        """Quadrature weights for ``d mu`` on :attr:`grid`."""
        if "weights" not in self._cache:
            w = quadrature.weights(self.nodes, self.h, self.rule)
            self._cache["weights"] = w * self.density(self.grid)
        return self._cache["weights"]

    def integrate(self, values) -> float:
        return float(self.weights @ np.asarray(values, dtype=float))

    def total_volume(self) -> float:
        return float(self.weights.sum())

    def analytic_total_volume(self) -> Optional[float]:
        """Closed-form ``V_f`` of the truncated domain for builtin profiles."""
        p, L, n = self.profile, self.L, self.dimension
        if self.radial:
            if p.kind == "constant":
                return sphere_area(n) * L ** n / n * math.exp(-p.params[0])
            if p.kind == "quadratic" and p.params[0] == 1:
                # omega int_0^L r^{n-1} e^{-r^2} dr
                return sphere_area(n) * 0.5 * special.gamma(n / 2) * special.gammainc(n / 2, L * L)
            return None
        if p.kind == "constant":
            return 2 * L * math.exp(-p.params[0])
        if p.kind == "linear":
            k = p.params[0]
            return 2 * L if k == 0 else 2 * math.sinh(k * L) / k
        if p.kind == "quadratic":
            if p.params[0] == 1:
                return math.sqrt(math.pi) * math.erf(L)
            return math.sqrt(math.pi) * float(special.erfi(L))
        return None

    def tail_bound(self) -> float:
        """Upper bound for the measure outside the truncation.

        Uses the tangent-line bound ``int_L^inf e^{-f} <= e^{-f(L)}/f'(L)``,
        valid for convex ``f`` increasing past ``L``; infinite otherwise.
        """
        p = self.profile
        if p.curvature_lower_bound() < 0:
            return math.inf
        total = 0.0
        ends = [(self.hi, 1.0)] if self.radial else [(self.hi, 1.0), (self.lo, -1.0)]
        for end, sigma in ends:
            slope = sigma * float(p.df(end))
            if self.radial:
                slope -= (self.dimension - 1) / end
            if slope <= 0:
                return math.inf
            total += float(self.density(end)) / slope
        return total

    # -- domain bookkeeping ------------------------------------------------
    def require_interval(self, a: float, b: float, what: str = "ball") -> None:
        eps = 1e-12 * max(1.0, self.L)
        if a < self.lo - eps or b > self.hi + eps:
            needed = max(abs(a), abs(b))
            raise DomainError(f"{what} [{a:g}, {b:g}] exits the truncation "
                              f"[{self.lo:g}, {self.hi:g}]; needs L >= {needed:g}",
                              needed_L=needed)

    def require_center(self, x: float) -> None:
        if self.radial and x != self.origin:
            raise DomainError("radial spaces only support balls centred at the origin")

    def rays(self):
        return (1.0,) if self.radial else (-1.0, 1.0)

    def along_ray(self, center: float, sigma: float, rho):
        """Point at distance ``rho`` from ``center`` in direction ``sigma``."""
        return np.abs(rho) if self.radial else center + sigma * np.asarray(rho, dtype=float)

    def ray_density(self, center: float, sigma: float, rho):
        """Weighted area element ``A_f(rho)`` along the ray."""
        rho = np.asarray(rho, dtype=float)
        if self.radial:
            return self.density(rho)
        return np.exp(-self.profile.f(center + sigma * rho))

    def ray_integral(self, center: float, sigma: float, r1: float, r2: float,
                     func=None) -> float:
        """``int_{r1}^{r2} func(gamma(rho)) A_f(rho) d rho`` along one ray."""
        if r2 <= r1:
            return 0.0
        hloc = min(self.h, (r2 - r1) / 8)
        if func is None:
            g = lambda rho: self.ray_density(center, sigma, rho)
        else:
            g = lambda rho: func(self.along_ray(center, sigma, rho)) * self.ray_density(center, sigma, rho)
        return quadrature.integrate(g, r1, r2, hloc, self.rule)

    def profile_integral(self, center: float, sigma: float, r: float) -> float:
        """``int_0^r f(gamma(t)) dt`` along a ray, by quadrature."""
        if r <= 0:
            return 0.0
        hloc = min(self.h, r / 64)
        g = lambda t: self.profile.f(self.along_ray(center, sigma, t))
        return quadrature.integrate(g, 0.0, r, hloc, self.rule)

    def spec(self) -> dict:
        return {"profile": self.profile.spec(), "L": self.L, "dimension": self.dimension,
                "nodes": self.nodes, "rule": self.rule}


# -- volumes ----------------------------------------------------------------
def _ball_interval(space: WeightedSpace, center: float, r: float):
    if space.radial:
        return 0.0, r
    return center - r, center + r


def annulus_volume(space: WeightedSpace, center: float, R1: float, R2: float) -> float:
    """``V_f(B_x(R2) \\ B_x(R1))``, integrated ray by ray."""
    if not (0 <= R1 <= R2):
        raise DegenerateQueryError(f"annulus needs 0 <= R1 <= R2, got ({R1:g}, {R2:g})")
    space.require_center(center)
    space.require_interval(*_ball_interval(space, center, R2))
    if R1 == R2:
        return 0.0
    return float(sum(space.ray_integral(center, s, R1, R2) for s in space.rays()))


def weighted_ball_volume(space: WeightedSpace, center: float, r: float) -> float:
    """``V_f(B_center(r))``; same quadrature path as ``annulus_volume(.., 0, r)``."""
    if r < 0:
        raise DegenerateQueryError("radius must be nonnegative")
    return annulus_volume(space, center, 0.0, r)


def sup_f_on_ball(space: WeightedSpace, o: float, radius: float) -> float:
    """``sup |f|`` over ``B_o(radius)``; ``A(R)`` is ``sup_f_on_ball(space, o, 3R)``."""
    space.require_center(o)
    a, b = _ball_interval(space, o, radius)
    space.require_interval(a, b, "ball B_o(3R)")
    exact = space.profile.abs_max_on(a, b)
    if exact is not None:
        return exact
    g = space.grid
    inside = g[(g >= a) & (g <= b)]
    pts = np.concatenate([inside, [a, b]])
    return float(np.max(np.abs(space.profile.f(pts))))


@dataclass(frozen=True)
class VolumeQuery:
    """Radii for the relative volume comparison around ``center``."""

    center: float
    r1: float
    r2: float
    R1: float
    R2: float
    R: float
    o: float = 0.0

    def validate(self) -> None:
        r1, r2, R1, R2, R = self.r1, self.r2, self.R1, self.R2, self.R
        ok = 0 < r1 < r2 and 0 < R1 < R2 < R and r1 <= R1 and r2 <= R2
        if not ok:
            raise DegenerateQueryError(
                "need 0<r1<r2, 0<R1<R2<R, r1<=R1, r2<=R2; got "
                f"r=({r1:g},{r2:g}) R=({R1:g},{R2:g}) outer {R:g}")
        if abs(self.center - self.o) >= R:
            raise DegenerateQueryError("centre must lie in B_o(R)")


def _volume_bound_exponent(space: WeightedSpace, o: float, R: float) -> float:
    return sup_f_on_ball(space, o, 3 * R)


def volume_comparison_check(space: WeightedSpace, q: VolumeQuery,
                            tol: float = TOL_REL_ANALYTIC) -> BoundReport:
    """Relative weighted volume comparison of two annuli around ``q.center``."""
    q.validate()
    n = space.dimension
    A = _volume_bound_exponent(space, q.o, q.R)
    inner = annulus_volume(space, q.center, q.r1, q.r2)
    outer = annulus_volume(space, q.center, q.R1, q.R2)
    if inner <= 0:
        raise DegenerateQueryError("inner annulus has zero weighted volume")
    lhs = outer / inner
    log_rhs = 4 * A + math.log((q.R2 ** n - q.R1 ** n) / (q.r2 ** n - q.r1 ** n))
    log_lhs = math.log(lhs) if lhs > 0 else -math.inf
    passed = log_lhs <= log_rhs + math.log1p(tol)
    return BoundReport(
        name="volume_comparison", anchor="relative f-volume comparison (annuli)",
        inputs={"space": space.spec(), "query": q.__dict__, "tol": tol},
        measured=lhs, bound=_safe_exp(log_rhs), passed=passed,
        margin=log_margin(log_lhs, log_rhs), notes=curvature_note(space.profile),
        details={"A": A, "log_bound": log_rhs, "inner": inner, "outer": outer})


def _safe_exp(v: float) -> float:
    return math.exp(v) if v < 709 else math.inf


def _monotone_log_quantity(space: WeightedSpace, x: float, sigma: float, r_grid) -> np.ndarray:
    """``log M(r)`` with ``M = r^{1-n} A_f(r) exp((2/r) int_0^r f)``, constants dropped."""
    out = np.empty(len(r_grid))
    for i, r in enumerate(r_grid):
        fr = float(space.profile.f(space.along_ray(x, sigma, r)))
        if r < SMALL_R:
            mean_term = 2 * float(space.profile.f(space.along_ray(x, sigma, 0.0)))
        else:
            mean_term = 2 * space.profile_integral(x, sigma, r) / r
        out[i] = -fr + mean_term
    return out


def _check_r_grid(space: WeightedSpace, x: float, r_grid) -> np.ndarray:
    r = np.asarray(r_grid, dtype=float)
    if r.ndim != 1 or r.size < 2 or np.any(np.diff(r) <= 0) or r[0] < 0:
        raise PreconditionError("r_grid must be a strictly increasing nonnegative sequence")
    space.require_center(x)
    space.require_interval(*_ball_interval(space, x, float(r[-1])), "ray segment")
    return r


def monotone_quantity_check(space: WeightedSpace, x: float, r_grid,
                            tol: float = TOL_MONO) -> BoundReport:
    """Check that ``r^{1-n} A_f(r) exp((2/r) int_0^r f)`` is nonincreasing on every ray."""
    r = _check_r_grid(space, x, r_grid)
    if r[0] == 0:
        r = r.copy()
        r[0] = 0.0  # handled by the small-r branch
    worst = -math.inf
    violation = None
    traces = {}
    for sigma in space.rays():
        logm = _monotone_log_quantity(space, x, sigma, r)
        traces[f"{sigma:+g}"] = logm.tolist()
        steps = np.diff(logm)
        worst = max(worst, float(steps.max()))
        bad = np.nonzero(steps > math.log1p(tol))[0]
        if bad.size and violation is None:
            i = int(bad[0])
            violation = {"ray": sigma, "index": i + 1, "r": float(r[i + 1]),
                         "ratio": math.exp(float(steps[i]))}
    notes = curvature_note(space.profile)
    if violation:
        notes.append(f"first increase on ray {violation['ray']:+g} at r={violation['r']:g}")
    return BoundReport(
        name="monotone_quantity", anchor="nonincreasing r^{1-n} A_f exp((2/r) int f)",
        inputs={"space": space.spec(), "x": x, "r_grid": r.tolist(), "tol": tol},
        measured=math.exp(worst), bound=1 + tol, passed=violation is None,
        margin=log_margin(worst, math.log1p(tol)), notes=notes,
        details={"log_M": traces, "first_violation": violation})


def mean_curvature_check(space: WeightedSpace, x: float, r_grid,
                         tol: float = TOL_REL_ANALYTIC) -> BoundReport:
    """Weighted mean curvature comparison ``m_f(r) <= (n-1)/r + (2/r^2) int f - (2/r) f``."""
    r = _check_r_grid(space, x, r_grid)
    n = space.dimension
    if n > 1 and r[0] < space.h:
        raise PreconditionError(f"r_grid must start at r >= h = {space.h:g} when n > 1")
    if r[0] <= 0:
        raise PreconditionError("r_grid must be positive")
    p = space.profile
    worst = -math.inf
    violation = None
    for sigma in space.rays():
        for ri in r:
            pt = float(space.along_ray(x, sigma, ri))
            m_f = (n - 1) / ri - sigma * float(p.df(pt))
            if ri < SMALL_R:
                rhs = m_f
                scale = max(abs(m_f), 1.0)
            else:
                integral = space.profile_integral(x, sigma, ri)
                fr = float(p.f(pt))
                rhs = (n - 1) / ri + 2 * integral / ri ** 2 - 2 * fr / ri
                scale = max(abs(m_f), abs(rhs), (n - 1) / ri, abs(2 * integral / ri ** 2),
                            abs(2 * fr / ri), 1e-300)
            excess = (m_f - rhs) / scale
            worst = max(worst, excess)
            if excess > tol and violation is None:
                violation = {"ray": sigma, "r": float(ri), "m_f": m_f, "rhs": rhs}
    notes = curvature_note(p)
    return BoundReport(
        name="mean_curvature", anchor="f-mean curvature comparison",
        inputs={"space": space.spec(), "x": x, "r_grid": r.tolist(), "tol": tol},
        measured=worst, bound=tol, passed=violation is None, margin=tol - worst,
        notes=notes, details={"first_violation": violation,
                              "measured_is": "max (m_f - rhs)/scale"})


def doubling_check(space: WeightedSpace, center: float, r: float, o: float = 0.0,
                   R: Optional[float] = None, tol: float = TOL_REL_ANALYTIC) -> BoundReport:
    """Local volume doubling ``V_f(B_x(2r)) <= 2^n e^{4A} V_f(B_x(r))``."""
    if r <= 0:
        raise DegenerateQueryError("radius must be positive")
    if R is None:
        R = max(2 * r, abs(center - o)) * (1 + 1e-9)
    if not (r < R / 2 and abs(center - o) < R):
        raise DegenerateQueryError("doubling needs 0 < r < R/2 and x in B_o(R)")
    n = space.dimension
    A = _volume_bound_exponent(space, o, R)
    small = weighted_ball_volume(space, center, r)
    big = weighted_ball_volume(space, center, 2 * r)
    ratio = big / small
    log_bound = n * math.log(2) + 4 * A
    log_ratio = math.log(ratio)
    return BoundReport(
        name="doubling", anchor="local f-volume doubling",
        inputs={"space": space.spec(), "center": center, "r": r, "o": o, "R": R, "tol": tol},
        measured=ratio, bound=_safe_exp(log_bound),
        passed=log_ratio <= log_bound + math.log1p(tol),
        margin=log_margin(log_ratio, log_bound), notes=curvature_note(space.profile),
        details={"A": A, "log_bound": log_bound})


def ball_overlap_check(space: WeightedSpace, x: float, y: float, r: float,
                       s: Optional[float] = None, o: float = 0.0, R: float = None,
                       tol: float = TOL_REL_ANALYTIC) -> BoundReport:
    """Both volume-overlap bounds between balls at ``x`` and ``y``.

    Near balls: ``V_f(B_x(r)) <= e^{4A} (d/r + 1)^n V_f(B_y(r))`` for
    ``x, y in B_o(R/4)``, ``r < R/2``. When ``s`` is given, also
    ``V_f(B_x(s))/V_f(B_y(r)) <= 4^n e^{8A} (s/r)^kappa`` with
    ``kappa = log2(2^n e^{4A})`` for ``r <= s < R/4``, ``x in B_o(s)``,
    ``y in B_x(s)``. At ``s = r`` the bound is the limit of the strict case.
    """
    if R is None:
        raise PreconditionError("ball_overlap_check needs the outer scale R")
    n = space.dimension
    d = abs(x - y)
    if not (r > 0 and r < R / 2 and abs(x - o) < R / 4 and abs(y - o) < R / 4):
        raise DegenerateQueryError("need x, y in B_o(R/4) and 0 < r < R/2")
    A = _volume_bound_exponent(space, o, R)
    parts = {}
    vx, vy = weighted_ball_volume(space, x, r), weighted_ball_volume(space, y, r)
    log_m = math.log(vx / vy)
    log_b = 4 * A + n * math.log(d / r + 1)
    parts["near"] = {"measured": vx / vy, "log_bound": log_b, "log_excess": log_m - log_b}
    if s is not None:
        if not (r <= s < R / 4 and abs(x - o) < s and d < s):
            raise DegenerateQueryError("need r <= s < R/4, x in B_o(s), y in B_x(s)")
        kappa = n + 4 * A / math.log(2)
        vxs = weighted_ball_volume(space, x, s)
        log_m2 = math.log(vxs / vy)
        log_b2 = n * math.log(4) + 8 * A + kappa * math.log(s / r)
        parts["scaled"] = {"measured": vxs / vy, "log_bound": log_b2, "kappa": kappa,
                           "log_excess": log_m2 - log_b2}
    worst = max(p["log_excess"] for p in parts.values())
    return BoundReport(
        name="ball_overlap", anchor="volume overlap of nearby balls",
        inputs={"space": space.spec(), "x": x, "y": y, "r": r, "s": s, "o": o, "R": R,
                "tol": tol},
        measured=math.exp(worst), bound=1.0, passed=worst <= math.log1p(tol),
        margin=log_margin(worst, 0.0), notes=curvature_note(space.profile),
        details={"A": A, "parts": parts, "measured_is": "worst measured/bound"})


def volume_growth_check(space: WeightedSpace, o: float, R_grid) -> BoundReport:
    """Fit ``log V_f(B_o(R)) <= log C + n log R + c R^2`` and integrate ``R / log V``."""
    if space.profile.growth is None:
        raise PreconditionError(f"profile {space.profile.label} declares no growth constants")
    R = np.asarray(R_grid, dtype=float)
    if R.ndim != 1 or R.size < 2 or np.any(np.diff(R) <= 0) or R[0] <= 0:
        raise PreconditionError("R_grid must be strictly increasing and positive")
    n = space.dimension
    vols = np.array([weighted_ball_volume(space, o, float(Ri)) for Ri in R])
    logv = np.log(vols)
    y = logv - n * np.log(R)
    log_c0 = float(y[0])
    slopes = (y[1:] - y[0]) / (R[1:] ** 2 - R[0] ** 2)
    c = max(0.0, float(slopes.max()))
    notes = []
    integrand = np.where(logv > 0, R / np.where(logv > 0, logv, 1.0), np.nan)
    if np.any(~np.isfinite(integrand)):
        notes.append("log V <= 0 at some radii; those points are left out of R/log V")
    ok = np.isfinite(integrand)
    partial = np.full(R.size, np.nan)
    if ok.sum() >= 2:
        Rk, gk = R[ok], integrand[ok]
        partial[ok] = np.concatenate([[0.0], np.cumsum((gk[1:] + gk[:-1]) * np.diff(Rk) / 2)])
    return BoundReport(
        name="volume_growth", anchor="volume growth and the R/log V integral criterion",
        inputs={"space": space.spec(), "o": o, "R_grid": R.tolist()},
        measured=c, bound=math.inf, passed=math.isfinite(c), kind="fitted",
        margin=math.nan, notes=notes,
        details={"c": c, "log_C": log_c0, "log_volume": logv.tolist(),
                 "partial_integrals": partial.tolist(), "growth": space.profile.growth})


# -- randomized queries -------------------------------------------------------
def random_queries(space: WeightedSpace, rng: np.random.Generator, count: int,
                   R_max: float) -> list:
    """Valid :class:`VolumeQuery` objects whose balls stay inside the truncation."""
    out = []
    R_cap = min(R_max, space.L / 3)
    while len(out) < count:
        R = rng.uniform(0.2, 1.0) * R_cap
        x = space.origin if space.radial else rng.uniform(-0.95, 0.95) * R
        r1, r2 = np.sort(rng.uniform(0.0, 0.95 * R, 2))
        R1 = rng.uniform(r1, 0.97 * R)
        R2 = rng.uniform(max(R1, r2), 0.99 * R)
        q = VolumeQuery(float(x), float(r1), float(r2), float(R1), float(R2), float(R))
        try:
            q.validate()
        except DegenerateQueryError:
            continue
        out.append(q)
    return out


def run_queries(space: WeightedSpace, queries: Sequence[VolumeQuery]) -> list:
    """Volume comparison over many queries, sorted by input digest."""
    reports = [volume_comparison_check(space, q) for q in queries]
    return sorted(reports, key=lambda r: r.key)


def random_comparison_reports(space: WeightedSpace, rng: np.random.Generator, count: int,
                              R_max: float = 4.0) -> list:
    """``count`` randomized rounds of every comparison check; one report per check per round.

    Each round draws a valid volume query and reuses its scale ``R`` for
    doubling, ball overlap, the monotone quantity and the mean curvature.
    """
    reports = []
    for q in random_queries(space, rng, count, R_max):
        R = q.R
        reports.append(volume_comparison_check(space, q))
        x = q.center
        r = float(rng.uniform(0.05, 0.49) * R)
        reports.append(doubling_check(space, x, r, o=q.o, R=R))
        s = float(rng.uniform(0.05, 0.249) * R)
        rr = float(rng.uniform(0.2, 1.0) * s)
        if space.radial:
            xo = yo = q.o
        else:
            xo = q.o + float(rng.uniform(-0.99, 0.99) * s)
            lo_y, hi_y = max(xo - s, q.o - R / 4), min(xo + s, q.o + R / 4)
            yo = float(rng.uniform(lo_y + 1e-9 * R, hi_y - 1e-9 * R))
        reports.append(ball_overlap_check(space, xo, yo, rr, s, o=q.o, R=R))
        r_max = min(R, space.L - abs(x)) * 0.99
        r_grid = np.linspace(0.0 if space.dimension == 1 else space.h, r_max, 24)
        reports.append(monotone_quantity_check(space, x, r_grid))
        reports.append(mean_curvature_check(space, x, r_grid[r_grid > 0]))
    return sorted(reports, key=lambda rep: rep.key)
