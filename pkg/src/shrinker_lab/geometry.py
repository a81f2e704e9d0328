"""Discretized immersed tori in C^n and their pointwise geometry.

Positions are stored with the grid axes first and the real ambient
coordinates last, ``x.shape == (*grid.dims, 2n)``.  The complex structure
acts blockwise on ``(Re z^j, Im z^j)`` pairs as ``(a, b) -> (-b, a)``, and
the symplectic form is ``omega(u, v) = <J u, v>``.  Every sign-sensitive
output (mean curvature form, Maslov coordinates) is relative to this choice.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DegenerateMetric, NonImmersion, NotNormal
from .grid import ParamGrid, PeriodicDiff


@dataclass(frozen=True)
class AmbientStructure:
    n: int

    @property
    def N(self) -> int:
        return 2 * self.n

    def J(self, v: np.ndarray) -> np.ndarray:
        """Apply the complex structure along the last axis."""
        out = np.empty_like(v)
        out[..., 0::2] = -v[..., 1::2]
        out[..., 1::2] = v[..., 0::2]
        return out

    def matrix(self) -> np.ndarray:
        return self.J(np.eye(self.N)).T

    def omega(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        return np.sum(self.J(u) * v, axis=-1)


def dot(u, v):
    return np.sum(u * v, axis=-1)


class ImmersionField:
    """A sampled immersion of a parameter torus into C^n = R^{2n}.

    Derived quantities are computed lazily and cached; they are pure
    functions of the positions.  ``linear_part`` (shape ``(2n, k)``) allows
    maps that are periodic only up to a linear drift in the parameters, which
    is handy for flat test patches.
    """

    def __init__(self, grid: ParamGrid, positions, *, x0=None, t0: float = 1.0,
                 backend: str = "spectral", linear_part=None, name: str = "immersion"):
        positions = np.asarray(positions, dtype=float)
        if positions.shape[:-1] != grid.dims:
            raise ValueError(f"positions shape {positions.shape} does not match grid {grid.dims}")
        if positions.shape[-1] % 2:
            raise ValueError("ambient dimension must be even")
        if not np.all(np.isfinite(positions)):
            raise ValueError("positions must be finite")
        self.grid = grid
        self.x = positions
        self.ambient = AmbientStructure(positions.shape[-1] // 2)
        self.x0 = np.zeros(self.ambient.N) if x0 is None else np.asarray(x0, dtype=float)
        if t0 <= 0:
            raise ValueError("t0 must be positive")
        self.t0 = float(t0)
        self.diff = PeriodicDiff(grid, backend)
        self.linear_part = None if linear_part is None else np.asarray(linear_part, dtype=float)
        self.name = name

    # -- basic sizes -----------------------------------------------------
    @property
    def k(self) -> int:
        return self.grid.k

    @property
    def N(self) -> int:
        return self.ambient.N

    def with_positions(self, positions, **kw) -> "ImmersionField":
        args = dict(x0=self.x0, t0=self.t0, backend=self.diff.backend,
                    linear_part=self.linear_part, name=self.name)
        args.update(kw)
        return ImmersionField(self.grid, positions, **args)

    # -- first order -----------------------------------------------------
    @cached_property
    def _periodic_x(self):
        if self.linear_part is None:
            return self.x
        mesh = self.grid.mesh()
        return self.x - sum(self.linear_part[:, a] * mesh[a][..., None] for a in range(self.k))

    @cached_property
    def tangents(self) -> np.ndarray:
        """Coordinate tangents d_a x, shape ``(k, *dims, N)``."""
        T = self.diff.gradient(self._periodic_x)
        if self.linear_part is not None:
            T = T + self.linear_part.T.reshape((self.k,) + (1,) * self.k + (self.N,))
        return T

    @cached_property
    def metric(self) -> np.ndarray:
        """g_ab with shape ``(*dims, k, k)``."""
        T = np.moveaxis(self.tangents, 0, -2)
        return T @ np.swapaxes(T, -1, -2)

    @cached_property
    def metric_inv(self) -> np.ndarray:
        return np.linalg.inv(self.metric)

    @cached_property
    def area_density(self) -> np.ndarray:
        return np.sqrt(np.linalg.det(self.metric))

    @cached_property
    def frame(self) -> np.ndarray:
        """Orthonormal tangent frame e_i, shape ``(k, *dims, N)`` (Gram-Schmidt in axis order)."""
        return np.einsum("...ia,a...n->i...n", self.frame_coeffs, self.tangents)

    @cached_property
    def frame_coeffs(self) -> np.ndarray:
        """C with e_i = C_i^a d_a x, shape ``(*dims, k, k)`` lower triangular.

        Gram-Schmidt in fixed axis order is the Cholesky factorisation
        g = R R^T, with C = R^{-1}.
        """
        R = np.linalg.cholesky(self.metric)
        eye = np.broadcast_to(np.eye(self.k), R.shape)
        return np.linalg.solve(R, eye)

    @cached_property
    def normal_frame(self) -> np.ndarray:
        """nu_i = J e_i."""
        return self.ambient.J(self.frame)

    @cached_property
    def _frame_last(self) -> np.ndarray:
        return np.moveaxis(self.frame, 0, -2)

    def tangent_part(self, v: np.ndarray) -> np.ndarray:
        """Tangential projection; ``v`` may carry extra leading axes before ``(*dims, N)``."""
        E = self._frame_last
        c = np.sum(np.asarray(v)[..., None, :] * E, axis=-1)
        return np.sum(c[..., None] * E, axis=-2)

    def normal_part(self, v: np.ndarray) -> np.ndarray:
        v = np.broadcast_to(v, np.broadcast_shapes(np.shape(v), self.x.shape))
        return v - self.tangent_part(v)

    def project(self, v, mode: str = "normal") -> np.ndarray:
        if mode == "normal":
            return self.normal_part(v)
        if mode == "tangent":
            return self.tangent_part(np.broadcast_to(v, self.x.shape))
        raise ValueError(f"mode must be 'normal' or 'tangent', got {mode!r}")

    def coord_components(self, v: np.ndarray) -> np.ndarray:
        """Contravariant components V^a of the tangential part of v, shape ``(*dims, k)``."""
        low = np.einsum("a...n,...n->...a", self.tangents, np.broadcast_to(v, self.x.shape))
        return np.einsum("...ab,...b->...a", self.metric_inv, low)

    def from_coord_components(self, V: np.ndarray) -> np.ndarray:
        return np.einsum("...a,a...n->...n", V, self.tangents)

    @property
    def rel_x(self) -> np.ndarray:
        return self.x - self.x0

    @cached_property
    def x_top(self) -> np.ndarray:
        """(x - x0)^T as contravariant components, shape ``(*dims, k)``."""
        return self.coord_components(self.rel_x)

    # -- second order ----------------------------------------------------
    @cached_property
    def second_derivatives(self) -> np.ndarray:
        """d_a d_b x, shape ``(k, k, *dims, N)``."""
        return self.diff.hessian(self._periodic_x)

    @cached_property
    def second_fundamental_form(self) -> np.ndarray:
        """II_ab = (d_a d_b x)^perp, shape ``(k, k, *dims, N)``."""
        D2 = self.second_derivatives
        return D2 - self.tangent_part(D2)

    @cached_property
    def christoffel(self) -> np.ndarray:
        """Gamma^c_ab, shape ``(*dims, c, a, b)``."""
        low = np.einsum("ab...n,d...n->...dab", self.second_derivatives, self.tangents)
        return np.einsum("...cd,...dab->...cab", self.metric_inv, low)

    @cached_property
    def mean_curvature(self) -> np.ndarray:
        """H = g^ab II_ab, shape ``(*dims, N)``."""
        return np.einsum("...ab,ab...n->...n", self.metric_inv, self.second_fundamental_form)

    @cached_property
    def h_frame(self) -> np.ndarray:
        """h_ijk = <D_{e_i} e_j, nu_k>, shape ``(*dims, k, k, k)``."""
        C = self.frame_coeffs
        IIn = np.einsum("ab...n,k...n->...abk", self.second_fundamental_form, self.normal_frame)
        return np.einsum("...ia,...jb,...abk->...ijk", C, C, IIn)

    def mean_curvature_from_h(self) -> np.ndarray:
        """Second code path: H = sum_i h_iik nu_k."""
        Hk = np.einsum("...iik->...k", self.h_frame)
        return np.einsum("...k,k...n->...n", Hk, self.normal_frame)

    # -- checks ----------------------------------------------------------
    def check_normal(self, X, tol: float = 1e-8) -> None:
        X = np.asarray(X, dtype=float)
        scale = max(1.0, float(np.max(np.abs(X)))) if X.size else 1.0
        if float(np.max(np.abs(self.tangent_part(X)), initial=0.0)) > tol * scale:
            raise NotNormal("vector field has a tangential component")


def derive_geometry(imm: ImmersionField) -> ImmersionField:
    """Populate every derived cache, validating non-degeneracy on the way."""
    T = imm.tangents
    if np.min(np.linalg.norm(T, axis=-1)) < 1e-12:
        raise NonImmersion("a coordinate tangent vanishes")
    if np.min(np.linalg.det(imm.metric)) <= 0:
        raise DegenerateMetric("metric is not positive definite")
    for attr in ("metric_inv", "area_density", "frame", "normal_frame", "second_fundamental_form",
                 "mean_curvature", "h_frame", "christoffel", "x_top"):
        getattr(imm, attr)
    return imm


def project(imm: ImmersionField, v, mode: str = "normal") -> np.ndarray:
    return imm.project(v, mode)


def lagrangian_defect(imm: ImmersionField) -> float:
    """max |omega(d_a x, d_b x)| / sqrt(g_aa g_bb) over nodes and pairs."""
    T = imm.tangents
    g = imm.metric
    worst = 0.0
    for a in range(imm.k):
        for b in range(a + 1, imm.k):
            w = imm.ambient.omega(T[a], T[b]) / np.sqrt(g[..., a, a] * g[..., b, b])
            worst = max(worst, float(np.max(np.abs(w))))
    return worst


def shrinker_residual(imm: ImmersionField) -> float:
    """sup |H + (x - x0)^perp / (2 t0)|."""
    r = imm.mean_curvature + imm.normal_part(imm.rel_x) / (2 * imm.t0)
    return float(np.max(np.linalg.norm(r, axis=-1)))


def frame_orthonormality_defect(imm: ImmersionField) -> float:
    E, V = imm.frame, imm.normal_frame
    eye = np.eye(imm.k)
    ee = np.einsum("i...n,j...n->...ij", E, E) - eye
    ev = np.einsum("i...n,j...n->...ij", E, V)
    vv = np.einsum("i...n,j...n->...ij", V, V) - eye
    return float(max(np.max(np.abs(ee)), np.max(np.abs(ev)), np.max(np.abs(vv))))


def h_symmetry_defect(imm: ImmersionField) -> float:
    h = imm.h_frame
    d1 = np.abs(h - np.swapaxes(h, -1, -2))
    d2 = np.abs(h - np.swapaxes(h, -3, -1))
    return float(max(d1.max(), d2.max()))
