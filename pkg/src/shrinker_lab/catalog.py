"""Closed Lagrangian self-shrinkers extinct at (0, 1).

Every model is a parametrized torus: circles of radius sqrt(2), Clifford
tori, Abresch-Langer curves obtained by shooting, and products of these in
orthogonal complex lines.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from math import gcd, sqrt

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .errors import InvalidWindow, ModelSpecError, NoConvergence
from .geometry import ImmersionField
from .grid import ParamGrid

DEFAULT_RESOLUTION = {"circle": 64, "clifford": 64, "al": 128}
ODE_TOL = 1e-13


@dataclass(frozen=True)
class ModelSpec:
    kind: str
    params: tuple[tuple[str, int], ...] = ()
    factors: tuple["ModelSpec", ...] = ()

    def param(self, key: str) -> int:
        return dict(self.params)[key]

    @property
    def leaves(self) -> list["ModelSpec"]:
        """Flattened list of one-dimensional factors."""
        if self.kind == "product":
            return [leaf for f in self.factors for leaf in f.leaves]
        if self.kind == "clifford":
            return [ModelSpec("circle")] * self.param("n")
        return [self]

    @property
    def dim(self) -> int:
        return len(self.leaves)

    @property
    def n(self) -> int:
        """Complex ambient dimension (equal to the intrinsic dimension)."""
        return self.dim

    @property
    def b1(self) -> int:
        # circles and AL curves each contribute one generator
        return len(self.leaves)

    def default_resolution(self) -> tuple[int, ...]:
        return tuple(DEFAULT_RESOLUTION[leaf.kind] for leaf in self.leaves)

    def __str__(self) -> str:
        if self.kind == "product":
            return "product(" + ";".join(str(f) for f in self.factors) + ")"
        if not self.params:
            return self.kind
        return self.kind + ":" + ",".join(f"{k}={v}" for k, v in self.params)

    def metadata(self) -> dict:
        return {"model": str(self), "b1": self.b1, "dim": self.dim, "n": self.n}


_ATOM = re.compile(r"^(circle|clifford|al)(?::(.*))?$")


def parse_model(text: str) -> ModelSpec:
    """Parse ``circle``, ``clifford:n=2``, ``al:p=2,q=3`` (or ``al:2,3``), ``product(a;b;...)``."""
    s = text.strip().replace(" ", "")
    if s.startswith("product(") and s.endswith(")"):
        inner = s[len("product("):-1]
        parts, depth, cur = [], 0, ""
        for ch in inner:
            if ch == "(":
                depth += 1
            elif ch == ")":
                depth -= 1
            if ch == ";" and depth == 0:
                parts.append(cur)
                cur = ""
            else:
                cur += ch
        parts.append(cur)
        if not all(parts):
            raise ModelSpecError(f"empty factor in {text!r}")
        return ModelSpec("product", factors=tuple(parse_model(p) for p in parts))
    m = _ATOM.match(s)
    if not m:
        raise ModelSpecError(f"cannot parse model spec {text!r}")
    kind, args = m.group(1), m.group(2)
    names = {"circle": (), "clifford": ("n",), "al": ("p", "q")}[kind]
    values: dict[str, int] = {}
    if args:
        for i, tok in enumerate(args.split(",")):
            key, _, val = tok.rpartition("=")
            if not key:
                if i >= len(names):
                    raise ModelSpecError(f"too many arguments in {text!r}")
                key = names[i]
            if key not in names:
                raise ModelSpecError(f"unknown parameter {key!r} for {kind}")
            try:
                values[key] = int(val)
            except ValueError:
                raise ModelSpecError(f"parameter {key} must be an integer in {text!r}") from None
    if kind == "clifford":
        values.setdefault("n", 2)
        if values["n"] < 1:
            raise ModelSpecError("clifford needs n >= 1")
    missing = [k for k in names if k not in values]
    if missing:
        raise ModelSpecError(f"missing parameters {missing} for {kind}")
    return ModelSpec(kind, tuple((k, values[k]) for k in names))


# ---------------------------------------------------------------------------
# one-dimensional factors

def _circle_positions(res: int) -> np.ndarray:
    t = np.arange(res) * (2 * np.pi / res)
    return sqrt(2) * np.stack([np.cos(t), np.sin(t)], axis=-1)


def build_circle(resolution: int = DEFAULT_RESOLUTION["circle"], backend: str = "spectral") -> ImmersionField:
    imm = ImmersionField(ParamGrid((resolution,)), _circle_positions(resolution),
                         backend=backend, name="circle")
    imm.model = ModelSpec("circle")
    imm.info = {}
    return imm


def _al_rhs(s, y):
    kappa, tau, phi = y[0], y[1], y[2]
    return [0.5 * kappa * tau, 1.0 - 2.0 * kappa**2, kappa, np.cos(phi), np.sin(phi)]


def _rising_tau(s, y):
    return y[1]


_rising_tau.terminal = True
_rising_tau.direction = 1.0


def al_initial_state(kappa0: float) -> np.ndarray:
    """State at a curvature maximum: tau = 0, tangent along e1, x = tau T - 2 kappa N."""
    return np.array([kappa0, 0.0, 0.0, 0.0, -2.0 * kappa0])


def al_half_period(kappa0: float) -> tuple[float, float]:
    """Arclength and turning angle from a curvature maximum to the next minimum."""
    sol = solve_ivp(_al_rhs, (0.0, 200.0), al_initial_state(kappa0), method="DOP853",
                    rtol=ODE_TOL, atol=ODE_TOL, events=_rising_tau)
    if not sol.t_events[0].size:
        raise NoConvergence(f"no half period found for kappa0={kappa0}")
    return float(sol.t_events[0][0]), float(sol.y_events[0][0][2])


def check_window(p: int, q: int) -> None:
    if p <= 0 or q <= 0 or gcd(p, q) != 1:
        raise InvalidWindow(f"need coprime positive (p, q), got ({p}, {q})")
    if not (0.5 < p / q < sqrt(2) / 2):
        raise InvalidWindow(f"p/q = {p}/{q} outside the window (1/2, sqrt(2)/2)")


def shoot_abresch_langer(p: int, q: int, xtol: float = 1e-15) -> dict:
    """Find the curvature maximum kappa0 whose half period turns by pi p / q."""
    check_window(p, q)
    target = np.pi * p / q

    def gap(k0):
        return al_half_period(k0)[1] - target

    lo = 1 / sqrt(2) + 1e-6
    hi = 1.0
    if gap(lo) <= 0:
        raise NoConvergence("shooting bracket lost near the circle")
    for _ in range(60):
        if gap(hi) < 0:
            break
        lo, hi = hi, hi * 1.5
    else:
        raise NoConvergence("could not bracket the shooting root")
    kappa0, res = brentq(gap, lo, hi, xtol=xtol, rtol=4 * np.finfo(float).eps, full_output=True)
    if not res.converged:
        raise NoConvergence("brentq did not converge")
    half_len, _ = al_half_period(kappa0)
    return {"kappa0": kappa0, "period": 2 * half_len, "length": 2 * half_len * q,
            "iterations": res.iterations, "shooting_gap": abs(gap(kappa0))}


def al_profile(kappa0: float, length: float, samples: int) -> dict:
    """Integrate the shrinker-curve system over ``[0, length]`` at uniform arclength samples."""
    s = np.linspace(0.0, length, samples + 1)
    sol = solve_ivp(_al_rhs, (0.0, length), al_initial_state(kappa0), method="DOP853",
                    rtol=ODE_TOL, atol=ODE_TOL, t_eval=s)
    if not sol.success:
        raise NoConvergence(sol.message)
    y = sol.y
    return {"s": s, "kappa": y[0], "tau": y[1], "phi": y[2], "xy": y[3:5].T}


def build_abresch_langer(p: int, q: int, resolution: int = DEFAULT_RESOLUTION["al"],
                         backend: str = "spectral") -> ImmersionField:
    shot = shoot_abresch_langer(p, q)
    prof = al_profile(shot["kappa0"], shot["length"], resolution)
    xy = prof["xy"]
    closure_gap = float(np.linalg.norm(xy[-1] - xy[0]))
    turning = float(prof["phi"][-1])
    imm = ImmersionField(ParamGrid((resolution,)), xy[:-1], backend=backend, name=f"al:p={p},q={q}")
    imm.model = ModelSpec("al", (("p", p), ("q", q)))
    imm.info = {**shot, "closure_gap": closure_gap, "tangent_gap": abs(turning - 2 * np.pi * p),
                "total_curvature": turning, "kappa": prof["kappa"][:-1]}
    return imm


def curvature_extrema(kappa: np.ndarray) -> int:
    """Number of strict local extrema of a periodic sample sequence."""
    d = np.sign(np.diff(np.append(kappa, kappa[0])))
    d = d[d != 0]
    return int(np.sum(d != np.roll(d, 1)))


# ---------------------------------------------------------------------------
# products

def build_product(factors: list[ImmersionField], backend: str = "spectral") -> ImmersionField:
    """Cartesian product in the orthogonal sum of the factors' ambient spaces."""
    dims = tuple(d for f in factors for d in f.grid.dims)
    periods = tuple(p for f in factors for p in f.grid.periods)
    grid = ParamGrid(dims, periods)
    blocks = []
    axis = 0
    for f in factors:
        shape = [1] * len(dims) + [f.N]
        for a in range(f.k):
            shape[axis + a] = f.grid.dims[a]
        blocks.append(np.broadcast_to(f.x.reshape(shape), dims + (f.N,)))
        axis += f.k
    x = np.concatenate(blocks, axis=-1)
    imm = ImmersionField(grid, x, backend=backend, name="product")
    imm.model = ModelSpec("product", factors=tuple(f.model for f in factors))
    imm.info = {"factors": [getattr(f, "info", {}) for f in factors]}
    return imm


def build_clifford(n: int = 2, resolution: int | tuple[int, ...] = DEFAULT_RESOLUTION["clifford"],
                   backend: str = "spectral") -> ImmersionField:
    if n < 1:
        raise ValueError("n must be >= 1")
    res = (resolution,) * n if np.isscalar(resolution) else tuple(resolution)
    if n == 1:
        imm = build_circle(res[0], backend)
    else:
        imm = build_product([build_circle(r, backend) for r in res], backend)
    imm.model = ModelSpec("clifford", (("n", n),))
    imm.name = f"clifford:n={n}"
    return imm


def build_model(spec: ModelSpec | str, resolution=None, backend: str = "spectral") -> ImmersionField:
    """Build a catalog model; ``resolution`` is an int (every axis) or a per-axis tuple."""
    if isinstance(spec, str):
        spec = parse_model(spec)
    leaves = spec.leaves
    if resolution is None:
        res = spec.default_resolution()
    elif np.isscalar(resolution):
        res = (int(resolution),) * len(leaves)
    else:
        res = tuple(int(r) for r in resolution)
        if len(res) != len(leaves):
            raise ModelSpecError(f"{spec} needs {len(leaves)} resolutions, got {len(res)}")

    def leaf(ls: ModelSpec, r: int) -> ImmersionField:
        if ls.kind == "circle":
            return build_circle(r, backend)
        return build_abresch_langer(ls.param("p"), ls.param("q"), r, backend)

    if spec.kind == "clifford":
        imm = build_clifford(spec.param("n"), res, backend)
    elif spec.kind == "product" or len(leaves) > 1:
        imm = build_product([leaf(ls, r) for ls, r in zip(leaves, res)], backend)
        imm.model = spec
    else:
        imm = leaf(leaves[0], res[0])
    imm.name = str(spec)
    return imm
