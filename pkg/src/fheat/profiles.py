"""Weight profiles ``f`` for the measure ``e^{-f} dx``."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.interpolate import CubicSpline

KINDS = ("constant", "linear", "quadratic", "power", "tabulated")


@dataclass(frozen=True)
class WeightProfile:
    """A potential ``f`` with exact first and second derivatives.

    ``kind`` selects the closed-form family; ``params`` holds its parameters:

    * constant  -- (c,)      f = c
    * linear    -- (k,)      f = k x
    * quadratic -- (s,)      f = s x^2, s in {+1, -1}
    * power     -- (m,)      f = |x|^(2+2/(2m+1)), which equals x^(2+2/(2m+1))
    * tabulated -- samples, interpolated by cubic splines

    ``growth`` is ``(a, b)`` with ``|f(x)| <= a x^2 + b`` when such constants
    exist, ``soliton_lambda`` is the soliton constant for Gaussian solitons.
    """

    kind: str
    params: tuple = ()
    growth: Optional[tuple] = None
    soliton_lambda: Optional[float] = None
    label: str = ""
    derivatives_from_differences: bool = False
    _splines: tuple = field(default=(), repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown profile kind {self.kind!r}; expected one of {KINDS}")

    # -- constructors -----------------------------------------------------
    @classmethod
    def constant(cls, c: float = 0.0) -> "WeightProfile":
        c = float(c)
        return cls("constant", (c,), growth=(0.0, abs(c)), soliton_lambda=0.0,
                   label="euclid" if c == 0 else f"const:{c:g}")

    @classmethod
    def linear(cls, k: float = 1.0) -> "WeightProfile":
        k = float(k)
        lam = 0.0 if abs(k) == 1.0 else None
        # |k x| <= x^2 + k^2/4
        return cls("linear", (k,), growth=(1.0, k * k / 4), soliton_lambda=lam,
                   label=f"linear:{k:+g}")

    @classmethod
    def quadratic(cls, s: int = 1) -> "WeightProfile":
        if s not in (1, -1):
            raise ValueError("quadratic profile needs s = +1 or -1")
        return cls("quadratic", (int(s),), growth=(1.0, 0.0), soliton_lambda=2.0 * s,
                   label=f"quadratic:{s:+d}")

    @classmethod
    def power(cls, m: int = 1) -> "WeightProfile":
        m = int(m)
        if m < 1:
            raise ValueError("power profile needs an integer m >= 1")
        return cls("power", (m,), label=f"power:{m}")

    @classmethod
    def tabulated(cls, x, f, df=None, d2f=None, growth=None) -> "WeightProfile":
        """Spline through samples of ``f``.

        Missing derivative samples are replaced by ``numpy.gradient`` estimates
        and the profile is flagged ``derivatives_from_differences``.
        """
        x = np.asarray(x, dtype=float)
        f = np.asarray(f, dtype=float)
        if x.ndim != 1 or x.size < 4 or np.any(np.diff(x) <= 0):
            raise ValueError("tabulated profile needs >= 4 strictly increasing nodes")
        flagged = df is None or d2f is None
        df = np.gradient(f, x, edge_order=2) if df is None else np.asarray(df, dtype=float)
        d2f = np.gradient(df, x, edge_order=2) if d2f is None else np.asarray(d2f, dtype=float)
        splines = (CubicSpline(x, f), CubicSpline(x, df), CubicSpline(x, d2f), x[0], x[-1])
        return cls("tabulated", (float(x[0]), float(x[-1]), int(x.size)), growth=growth,
                   label="tabulated", derivatives_from_differences=flagged, _splines=splines)

    # -- evaluation -------------------------------------------------------
    @property
    def exponent(self) -> float:
        """The power ``2 + 2 delta`` of the power family."""
        m = self.params[0]
        return 2.0 + 2.0 / (2 * m + 1)

    def _check_tab(self, x):
        lo, hi = self._splines[3], self._splines[4]
        if np.any(x < lo - 1e-12) or np.any(x > hi + 1e-12):
            raise ValueError(f"tabulated profile queried outside its range [{lo}, {hi}]")

    def f(self, x):
        x = np.asarray(x, dtype=float)
        k = self.kind
        if k == "constant":
            return np.full_like(x, self.params[0])
        if k == "linear":
            return self.params[0] * x
        if k == "quadratic":
            return self.params[0] * x * x
        if k == "power":
            return np.abs(x) ** self.exponent
        self._check_tab(x)
        return self._splines[0](x)

    def df(self, x):
        x = np.asarray(x, dtype=float)
        k = self.kind
        if k == "constant":
            return np.zeros_like(x)
        if k == "linear":
            return np.full_like(x, self.params[0])
        if k == "quadratic":
            return 2.0 * self.params[0] * x
        if k == "power":
            q = self.exponent
            return q * np.sign(x) * np.abs(x) ** (q - 1)
        self._check_tab(x)
        return self._splines[1](x)

    def d2f(self, x):
        x = np.asarray(x, dtype=float)
        k = self.kind
        if k in ("constant", "linear"):
            return np.zeros_like(x)
        if k == "quadratic":
            return np.full_like(x, 2.0 * self.params[0])
        if k == "power":
            q = self.exponent
            return q * (q - 1) * np.abs(x) ** (q - 2)
        self._check_tab(x)
        return self._splines[2](x)

    def antiderivative(self, a: float, b: float) -> Optional[float]:
        """Exact ``int_a^b f`` for the closed-form kinds, else ``None``."""
        k = self.kind
        if k == "constant":
            return self.params[0] * (b - a)
        if k == "linear":
            return self.params[0] * (b * b - a * a) / 2
        if k == "quadratic":
            return self.params[0] * (b ** 3 - a ** 3) / 3
        if k == "power":
            q = self.exponent
            F = lambda z: np.sign(z) * abs(z) ** (q + 1) / (q + 1)
            return float(F(b) - F(a))
        return None

    def curvature_lower_bound(self) -> float:
        """``inf f''``, the one-dimensional Bakry-Emery lower bound."""
        k = self.kind
        if k in ("constant", "linear", "power"):
            return 0.0
        if k == "quadratic":
            return 2.0 * self.params[0]
        grid = np.linspace(self._splines[3], self._splines[4], 4097)
        return float(np.min(self.d2f(grid)))

    @property
    def is_even(self) -> bool:
        """Whether ``f(-x) = f(x)``, i.e. usable as a radial profile."""
        if self.kind in ("constant", "quadratic", "power"):
            return True
        if self.kind == "linear":
            return self.params[0] == 0
        return self._splines[3] >= 0.0

    def abs_max_on(self, a: float, b: float) -> Optional[float]:
        """``max |f|`` on [a, b] when monotonicity makes it analytic."""
        k = self.kind
        if k == "constant":
            return abs(self.params[0])
        if k in ("linear", "quadratic", "power"):
            # |f| is monotone on each side of 0 and vanishes there
            return float(max(abs(self.f(a)), abs(self.f(b))))
        return None

    def spec(self) -> dict:
        return {"kind": self.kind, "params": list(self.params), "label": self.label}


def curvature_note(profile: WeightProfile) -> list:
    """Report-ready note when the profile violates ``inf f'' >= 0``."""
    lb = profile.curvature_lower_bound()
    if lb < 0:
        return [f"hypothesis inf f'' >= 0 violated (inf f'' = {lb:g}); result is not covered by the theory"]
    return []
