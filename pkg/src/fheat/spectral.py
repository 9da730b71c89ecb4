"""Dirichlet and Neumann spectra of the weighted Laplacian on bounded domains.

The operator ``-Delta_f = -(1/w)(w u')'`` is discretised by finite volumes:
flux coefficients ``w(x_{j+1/2})/h`` between neighbouring nodes and a mass
``m_j`` per node. Conjugating with ``M^{1/2}`` (``v = sqrt(m) u``, i.e.
``v ~ e^{-f/2} u``) gives a symmetric tridiagonal matrix, so the weighted
orthogonality of the eigenfunctions is exact in the discrete inner product
``<u, v> = sum_j m_j u_j v_j``. All weights are handled through logarithms.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import linalg, optimize
from scipy.interpolate import CubicSpline

from . import quadrature
from .errors import NumericError, PreconditionError
from .geometry import WeightedSpace, sphere_area
from .report import TOL_REL_ANALYTIC, BoundReport, log_margin

DEFAULT_NODES = 2048
DEFAULT_MODES = 200
ORTHO_TOL = 1e-8
EIG_TOL = 1e-6


@dataclass(frozen=True)
class Discretization:
    """Finite-volume operator on the unknown nodes of ``[a, b]``."""

    x: np.ndarray  # full grid, boundary included
    unknown: np.ndarray  # indices of the unknown nodes
    log_mass: np.ndarray  # per unknown node
    diag: np.ndarray  # symmetric frame
    offdiag: np.ndarray
    bc: str
    h: float

    @property
    def size(self) -> int:
        return self.unknown.size

    def apply(self, v: np.ndarray) -> np.ndarray:
        """``S v`` in the symmetric frame (``S`` is ``-Delta_f`` conjugated)."""
        out = self.diag * v
        out[:-1] += self.offdiag * v[1:]
        out[1:] += self.offdiag * v[:-1]
        return out

    def to_symmetric(self, u: np.ndarray) -> np.ndarray:
        return u * np.exp(0.5 * self.log_mass)

    def from_symmetric(self, v: np.ndarray) -> np.ndarray:
        with np.errstate(divide="ignore"):
            logabs = np.log(np.abs(v))
        return np.sign(v) * np.exp(logabs - 0.5 * self.log_mass)

    @property
    def mass(self) -> np.ndarray:
        return np.exp(self.log_mass)


def _log_density(space: WeightedSpace, x: np.ndarray) -> np.ndarray:
    f = space.profile.f(x)
    if not space.radial:
        return -f
    n = space.dimension
    with np.errstate(divide="ignore"):
        return math.log(sphere_area(n)) + (n - 1) * np.log(x) - f


def assemble(space: WeightedSpace, a: float, b: float, nodes: int = DEFAULT_NODES,
             bc: str = "dirichlet") -> Discretization:
    """Finite-volume discretisation of ``-Delta_f`` on ``[a, b]``.

    ``bc`` is ``dirichlet`` (zero values at both ends; for radial spaces the
    origin keeps its natural zero-flux condition) or ``neumann`` (zero weighted
    flux at both ends).
    """
    if bc not in ("dirichlet", "neumann"):
        raise ValueError(f"unknown boundary condition {bc!r}")
    if not b > a:
        raise PreconditionError("domain needs a < b")
    if space.radial and a != 0:
        raise PreconditionError("radial domains must be balls [0, b] around the origin")
    space.require_interval(a, b, "domain")
    x = np.linspace(a, b, nodes)
    h = (b - a) / (nodes - 1)
    log_flux = _log_density(space, 0.5 * (x[1:] + x[:-1])) - math.log(h)
    if space.radial:
        # cell-integrated masses, exact for the r^{n-1} factor near the origin
        edges = np.concatenate([[a], 0.5 * (x[1:] + x[:-1]), [b]])
        masses = np.array([quadrature.integrate(space.density, edges[j], edges[j + 1],
                                                (edges[j + 1] - edges[j]) / 8)
                           for j in range(nodes)])
        with np.errstate(divide="ignore"):
            log_mass_all = np.log(masses)
    else:
        log_mass_all = _log_density(space, x) + math.log(h)
        if bc == "neumann":
            log_mass_all[[0, -1]] -= math.log(2)
    if bc == "neumann":
        unknown = np.arange(nodes)
    elif space.radial:
        unknown = np.arange(nodes - 1)
    else:
        unknown = np.arange(1, nodes - 1)
    lm = log_mass_all[unknown]
    # flux to the left of each unknown node (exists unless it is x_0)
    left = np.where(unknown > 0, log_flux[np.maximum(unknown - 1, 0)], -np.inf)
    right = np.where(unknown < nodes - 1, log_flux[np.minimum(unknown, nodes - 2)], -np.inf)
    if bc == "neumann":
        left[0] = -np.inf
        right[-1] = -np.inf
    diag = np.exp(left - lm) + np.exp(right - lm)
    off = -np.exp(log_flux[unknown[:-1]] - 0.5 * (lm[:-1] + lm[1:]))
    return Discretization(x=x, unknown=unknown, log_mass=lm, diag=diag, offdiag=off, bc=bc, h=h)


@dataclass
class EigenSystem:
    """First ``K`` eigenpairs of ``-Delta_f`` on ``[a, b]``, orthonormal in ``L^2(d mu)``."""

    a: float
    b: float
    eigenvalues: np.ndarray
    vectors: np.ndarray  # symmetric frame, shape (K, n_unknown)
    disc: Discretization
    profile_label: str = ""
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def K(self) -> int:
        return self.eigenvalues.size

    @property
    def x(self) -> np.ndarray:
        return self.disc.x

    @property
    def bc(self) -> str:
        return self.disc.bc

    @property
    def weights(self) -> np.ndarray:
        """Discrete ``d mu`` weights on the full grid (zero on Dirichlet ends)."""
        if "weights" not in self._cache:
            w = np.zeros(self.x.size)
            w[self.disc.unknown] = self.disc.mass
            self._cache["weights"] = w
        return self._cache["weights"]

    @property
    def psi(self) -> np.ndarray:
        """Eigenfunctions sampled on the full grid, shape (K, nodes)."""
        if "psi" not in self._cache:
            out = np.zeros((self.K, self.x.size))
            out[:, self.disc.unknown] = self.disc.from_symmetric(self.vectors)
            self._cache["psi"] = out
        return self._cache["psi"]

    def _spline(self):
        if "spline" not in self._cache:
            self._cache["spline"] = CubicSpline(self.x, self.psi, axis=1)
        return self._cache["spline"]

    def modes_at(self, pts) -> np.ndarray:
        """``psi_i(pts)``, shape (K, len(pts)); cubic interpolation off the grid."""
        pts = np.atleast_1d(np.asarray(pts, dtype=float))
        if np.any(pts < self.a - 1e-12) or np.any(pts > self.b + 1e-12):
            raise PreconditionError("evaluation points must lie in the domain")
        return self._spline()(pts)

    def kernel(self, xs, ys, t: float, derivative_order: int = 0) -> np.ndarray:
        """``sum_i (-lambda_i)^k e^{-lambda_i t} psi_i(x) psi_i(y)`` on the product grid."""
        coef = np.exp(-self.eigenvalues * t) * (-self.eigenvalues) ** derivative_order
        px, py = self.modes_at(xs), self.modes_at(ys)
        return px.T @ (coef[:, None] * py)

    def coefficients(self, values: np.ndarray) -> np.ndarray:
        """``<psi_i, g>`` in the discrete inner product, ``g`` sampled on the grid."""
        return self.psi @ (self.weights * np.asarray(values, dtype=float))

    def evolve(self, values: np.ndarray, t: float) -> np.ndarray:
        """Truncated ``e^{t Delta_f} g`` on the grid."""
        c = self.coefficients(values) * np.exp(-self.eigenvalues * t)
        return c @ self.psi

    def orthonormality_error(self) -> float:
        gram = self.vectors @ self.vectors.T
        return float(np.max(np.abs(gram - np.eye(self.K))))

    def residuals(self) -> np.ndarray:
        """``||S v_i - lambda_i v_i|| / lambda_i`` per mode (relative, discrete norm)."""
        res = np.array([np.linalg.norm(self.disc.apply(v) - lam * v)
                        for lam, v in zip(self.eigenvalues, self.vectors)])
        return res / np.maximum(np.abs(self.eigenvalues), 1e-300)

    def to_dict(self, stride: int = 1) -> dict:
        return {"domain": [self.a, self.b], "bc": self.bc, "profile": self.profile_label,
                "eigenvalues": self.eigenvalues.tolist(), "x": self.x[::stride].tolist(),
                "psi": self.psi[:, ::stride].tolist()}


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    out = vectors.copy()
    for i, v in enumerate(out):
        big = np.nonzero(np.abs(v) > 1e-8 * np.max(np.abs(v)))[0]
        if v[big[0]] < 0:
            out[i] = -v
    return out


def eigensolve(space: WeightedSpace, domain: Optional[Sequence[float]] = None,
               K: int = DEFAULT_MODES, nodes: int = DEFAULT_NODES,
               bc: str = "dirichlet") -> EigenSystem:
    """First ``K`` eigenpairs of ``-Delta_f`` on ``domain`` (default: the truncation).

    Signs are fixed so that each eigenfunction is positive at its first
    significant node, i.e. ``psi_i'(a) > 0`` for Dirichlet problems.
    """
    a, b = (space.lo, space.hi) if domain is None else (float(domain[0]), float(domain[1]))
    if K < 1 or K > nodes // 4:
        raise PreconditionError(f"mode count K={K} must satisfy 1 <= K <= nodes/4 = {nodes // 4}")
    disc = assemble(space, a, b, nodes, bc)
    try:
        lam, vec = linalg.eigh_tridiagonal(disc.diag, disc.offdiag, select="i",
                                           select_range=(0, K - 1), lapack_driver="stemr")
    except (linalg.LinAlgError, ValueError) as exc:
        raise NumericError(f"tridiagonal eigensolve failed on [{a:g}, {b:g}] "
                           f"with {disc.size} unknowns: {exc}") from exc
    es = EigenSystem(a, b, lam, _fix_signs(vec.T), disc, space.profile.label)
    ortho = es.orthonormality_error()
    if ortho > ORTHO_TOL:
        raise NumericError(f"eigenvectors lost orthonormality ({ortho:.2e} > {ORTHO_TOL:g})")
    return es


@dataclass
class SeriesValue:
    value: float
    tail: float
    t_safe: float
    tail_dominated: bool


def kernel_expansion(es: EigenSystem, x: float, y: float, t: float) -> SeriesValue:
    """Truncated eigenfunction expansion of the Dirichlet kernel at one point.

    ``tail`` is the heuristic size ``e^{-lambda_K t} |psi(x)| |psi(y)|`` of the
    first omitted terms; ``t_safe`` is where ``e^{-lambda_K t}`` reaches 1e-12.
    """
    if t <= 0:
        raise PreconditionError("kernel expansion needs t > 0")
    px, py = es.modes_at([x])[:, 0], es.modes_at([y])[:, 0]
    value = float(np.sum(np.exp(-es.eigenvalues * t) * px * py))
    lam_K = float(es.eigenvalues[-1])
    tail = math.exp(-lam_K * t) * float(np.linalg.norm(px) * np.linalg.norm(py))
    t_safe = 12 * math.log(10) / lam_K if lam_K > 0 else math.inf
    return SeriesValue(value, tail, t_safe, tail > 1e-3 * abs(value) or t < t_safe)


def default_exhaustion(space: WeightedSpace, start: int = 0) -> list:
    """``[-2^i, 2^i]`` (radial: ``[0, 2^i]``) clipped to the truncation."""
    out = []
    i = start
    while True:
        ell = min(2.0 ** i, space.L)
        out.append((0.0 if space.radial else -ell, ell))
        if ell >= space.L:
            break
        i += 1
    return out


@dataclass
class BottomOfSpectrum:
    domains: list
    eigenvalues: np.ndarray
    limit: float
    monotone: bool

    def report(self, profile_label: str = "") -> BoundReport:
        notes = [] if self.monotone else ["first eigenvalues increase along the exhaustion: "
                                          "discretisation failure"]
        return BoundReport(
            name="bottom_of_spectrum", anchor="bottom of the L_f^2 spectrum by exhaustion",
            inputs={"profile": profile_label, "domains": self.domains},
            measured=self.limit, bound=float(self.eigenvalues[-1]), passed=self.monotone,
            kind="fitted", margin=math.nan, notes=notes,
            details={"eigenvalues": self.eigenvalues.tolist()})


def bottom_of_spectrum(space: WeightedSpace, exhaustion=None, K: int = 1,
                       nodes: int = DEFAULT_NODES, workers: int = 1,
                       tol: float = 1e-9) -> BottomOfSpectrum:
    """First Dirichlet eigenvalues along an exhaustion and their extrapolated limit.

    The limit uses the last two domains and the model ``lambda(l) = lambda_inf + c/l^2``
    in the half-length ``l``.
    """
    doms = [tuple(map(float, d)) for d in (exhaustion or default_exhaustion(space))]
    for (a0, b0), (a1, b1) in zip(doms, doms[1:]):
        if not (a1 <= a0 and b1 >= b0 and (a1, b1) != (a0, b0)):
            raise PreconditionError("exhaustion domains must be strictly increasing")
    solve = lambda d: float(eigensolve(space, d, K=max(K, 1), nodes=nodes).eigenvalues[0])
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            lams = np.array(list(pool.map(solve, doms)))
    else:
        lams = np.array([solve(d) for d in doms])
    monotone = bool(np.all(lams[1:] <= lams[:-1] * (1 + tol) + tol))
    if len(doms) >= 2:
        l1 = (doms[-2][1] - doms[-2][0]) / (1 if space.radial else 2)
        l2 = (doms[-1][1] - doms[-1][0]) / (1 if space.radial else 2)
        limit = float((l2 ** 2 * lams[-1] - l1 ** 2 * lams[-2]) / (l2 ** 2 - l1 ** 2))
    else:
        limit = float(lams[-1])
    return BottomOfSpectrum([list(d) for d in doms], lams, limit, monotone)


def c5_constant() -> float:
    """``max_{s >= 0} s^2 e^{-s}`` (attained at ``s = 2``)."""
    res = optimize.minimize_scalar(lambda s: -s * s * math.exp(-s), bounds=(0.0, 20.0),
                                   method="bounded", options={"xatol": 1e-12})
    return float(-res.fun)


def laplacian_l2_bound_check(es: EigenSystem, x: float, t: float,
                             tol: float = TOL_REL_ANALYTIC) -> BoundReport:
    """``int (Delta_f H(x, ., t))^2 d mu <= C5 t^{-2} H(x, x, t)`` through the expansion."""
    if t <= 0:
        raise PreconditionError("t must be positive")
    c5 = c5_constant()
    p2 = es.modes_at([x])[:, 0] ** 2
    lam = es.eigenvalues
    lhs = float(np.sum(lam ** 2 * np.exp(-2 * lam * t) * p2))
    rhs = float(c5 / t ** 2 * np.sum(np.exp(-lam * t) * p2))
    passed = lhs <= rhs * (1 + tol)
    return BoundReport(
        name="laplacian_l2_bound", anchor="L^2 bound on Delta_f H via s^2 e^{-2s} <= C5 e^{-s}",
        inputs={"domain": [es.a, es.b], "K": es.K, "profile": es.profile_label, "x": x, "t": t,
                "tol": tol},
        measured=lhs, bound=rhs, passed=passed,
        margin=log_margin(math.log(lhs), math.log(rhs)) if lhs > 0 and rhs > 0 else math.nan,
        details={"C5": c5, "ratio": lhs / rhs if rhs > 0 else math.nan})


def f_laplacian(space: WeightedSpace, u, x) -> np.ndarray:
    """``Delta_f u = u'' + ((n-1)/r - f') u'`` from analytic derivatives of ``u``."""
    x = np.asarray(x, dtype=float)
    drift = -space.profile.df(x)
    if space.radial:
        with np.errstate(divide="ignore", invalid="ignore"):
            drift = drift + np.where(x > 0, (space.dimension - 1) / np.where(x > 0, x, 1), 0.0)
    return u.second_derivative(x) + drift * u.derivative(x)


def green_identity_check(space: WeightedSpace, es: EigenSystem, u, x: float, t: float,
                         tol: float = 1e-6) -> BoundReport:
    """``int Delta_f H(x, ., t) u d mu = int H(x, ., t) Delta_f u d mu`` for compactly supported ``u``.

    ``u`` provides ``support``, ``derivative`` and ``second_derivative``
    (e.g. :class:`fheat.closedform.Bump`). ``Delta_f H`` comes from the
    expansion, ``Delta_f u`` from the analytic derivatives of ``u``.
    """
    lo, hi = u.support
    if not (es.a < lo and hi < es.b):
        raise PreconditionError("support of u must lie strictly inside the domain")
    g = es.x
    w = es.weights
    uy = u(g)
    lap_u = f_laplacian(space, u, g)
    lhs = float(np.sum(es.kernel([x], g, t, derivative_order=1)[0] * uy * w))
    rhs = float(np.sum(es.kernel([x], g, t)[0] * lap_u * w))
    scale = float(np.sum(np.abs(es.kernel([x], g, t)[0] * lap_u * w)))
    denom = abs(lhs) + abs(rhs) + scale
    diff = abs(lhs - rhs)
    rel = diff / denom if denom > 0 else 0.0
    return BoundReport(
        name="green_identity", anchor="integration by parts of Delta_f against the kernel",
        inputs={"domain": [es.a, es.b], "K": es.K, "profile": es.profile_label, "x": x, "t": t,
                "support": [lo, hi], "tol": tol},
        measured=rel, bound=tol, passed=rel <= tol, margin=tol - rel,
        details={"lhs": lhs, "rhs": rhs, "abs_difference": diff})
