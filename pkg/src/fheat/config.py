"""Profile specs, key-value space files and verify manifests.

Profile grammar (``--profile`` and the ``profile`` key)::

    euclid | zero              f = 0
    const:C                    f = C
    steady:+1 | steady:-1      f = +-x (steady soliton)
    linear:K                   f = K x
    shrinking | quadratic:+1   f = x^2
    expanding | quadratic:-1   f = -x^2
    power:M                    f = |x|^{2 + 2/(2M+1)}
    tabulated:PATH             CSV columns x, f[, f', f''] (header optional)

A space file is an INI-style key-value file with one ``[space]`` section::

    [space]
    profile = steady:+1
    L = 12
    nodes = 2049
    rule = simpson
    dimension = 1

``kind``/``params`` may replace ``profile`` (``kind = linear``, ``params = 1``).
"""
from __future__ import annotations

import configparser
import json
import math
from pathlib import Path
from typing import Optional

import numpy as np

from .closedform import SolitonKernel
from .geometry import WeightedSpace
from .profiles import WeightProfile

SPACE_DEFAULTS = {"L": 12.0, "nodes": 2049, "rule": "simpson", "dimension": 1}


class ConfigError(ValueError):
    """Malformed profile spec, space file or manifest."""


def _number(text: str, what: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"bad {what} {text!r}") from None


def parse_profile(spec: str) -> WeightProfile:
    spec = spec.strip()
    head, _, arg = spec.partition(":")
    head = head.lower()
    if head in ("euclid", "euclidean", "zero") and not arg:
        return WeightProfile.constant(0.0)
    if head == "const":
        return WeightProfile.constant(_number(arg, "constant"))
    if head == "steady":
        k = _number(arg or "+1", "steady sign")
        if k not in (1.0, -1.0):
            raise ConfigError("steady soliton takes +1 or -1")
        return WeightProfile.linear(k)
    if head == "linear":
        return WeightProfile.linear(_number(arg, "slope"))
    if head == "shrinking" and not arg:
        return WeightProfile.quadratic(1)
    if head == "expanding" and not arg:
        return WeightProfile.quadratic(-1)
    if head == "quadratic":
        s = _number(arg or "+1", "quadratic sign")
        if s not in (1.0, -1.0):
            raise ConfigError("quadratic profile takes +1 or -1")
        return WeightProfile.quadratic(int(s))
    if head == "power":
        m = _number(arg, "power index")
        if m != int(m) or m < 1:
            raise ConfigError("power:M needs an integer M >= 1")
        return WeightProfile.power(int(m))
    if head == "tabulated":
        return _load_tabulated(Path(arg))
    raise ConfigError(f"unknown profile spec {spec!r}")


def _load_tabulated(path: Path) -> WeightProfile:
    if not path.exists():
        raise ConfigError(f"tabulated profile file {path} not found")
    try:
        data = np.loadtxt(path, delimiter=",", ndmin=2)
    except ValueError:  # header row
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[1] < 2:
        raise ConfigError("tabulated profile needs columns x, f")
    cols = [data[:, i] if data.shape[1] > i else None for i in range(4)]
    return WeightProfile.tabulated(cols[0], cols[1], cols[2], cols[3])


def closed_form_for(spec: str) -> Optional[SolitonKernel]:
    """The soliton kernel matching a profile spec, if it has one."""
    prof = parse_profile(spec)
    if prof.kind == "constant" and prof.params[0] == 0:
        return SolitonKernel("euclidean")
    if prof.kind == "linear" and prof.params[0] in (1.0, -1.0):
        return SolitonKernel("steady", int(prof.params[0]))
    if prof.kind == "quadratic":
        return SolitonKernel("shrinking" if prof.params[0] == 1 else "expanding")
    return None


def make_space(profile: str, L: float = None, nodes: int = None, rule: str = None,
               dimension: int = None) -> WeightedSpace:
    return WeightedSpace(parse_profile(profile), L=float(L if L is not None else SPACE_DEFAULTS["L"]),
                         dimension=int(dimension or SPACE_DEFAULTS["dimension"]),
                         nodes=int(nodes or SPACE_DEFAULTS["nodes"]),
                         rule=rule or SPACE_DEFAULTS["rule"])


def load_space(path) -> WeightedSpace:
    cp = configparser.ConfigParser()
    cp.optionxform = str
    if not cp.read(path):
        raise ConfigError(f"cannot read space file {path}")
    if "space" not in cp:
        raise ConfigError("space file needs a [space] section")
    sec = cp["space"]
    if "profile" in sec:
        prof = sec["profile"]
    elif "kind" in sec:
        kind, params = sec["kind"].strip(), sec.get("params", "").strip()
        aliases = {"constant": "const", "power": "power", "linear": "linear",
                   "quadratic": "quadratic", "tabulated": "tabulated"}
        if kind not in aliases:
            raise ConfigError(f"unknown kind {kind!r}")
        prof = f"{aliases[kind]}:{params}" if params else kind
    else:
        raise ConfigError("space file needs 'profile' or 'kind'")
    return make_space(prof, sec.getfloat("L", SPACE_DEFAULTS["L"]), sec.getint("nodes", SPACE_DEFAULTS["nodes"]),
                      sec.get("rule", SPACE_DEFAULTS["rule"]), sec.getint("dimension", 1))


def parse_values(text: str) -> list:
    """``a,b,c`` or ``start:stop:count`` (inclusive linspace); ``pi`` is accepted."""
    def num(tok):
        tok = tok.strip().lower()
        if tok in ("pi", "-pi"):
            return math.copysign(math.pi, -1 if tok.startswith("-") else 1)
        return _number(tok, "value")
    parts = text.split(":")
    if len(parts) == 3:
        a, b, n = num(parts[0]), num(parts[1]), int(num(parts[2]))
        if n < 1:
            raise ConfigError("range count must be positive")
        return np.linspace(a, b, n).tolist()
    return [num(tok) for tok in text.split(",") if tok.strip()]


def parse_domain(text: str) -> tuple:
    parts = [p for p in text.split(":")]
    if len(parts) != 2:
        raise ConfigError(f"domain must look like a:b, got {text!r}")
    a, b = (parse_values(p)[0] for p in parts)
    if not b > a:
        raise ConfigError("domain needs a < b")
    return a, b


def load_manifest(path) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"manifest {path} not found") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"manifest {path} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("manifest must be a JSON object")
    return data
