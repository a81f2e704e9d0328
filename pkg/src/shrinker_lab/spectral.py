"""The drift Laplacian as a symmetric generalized eigenproblem, and the Jacobi operator.

The weak form A[u, v] = int <du, dv> e^{-f} dmu, M[u, v] = int u v e^{-f} dmu
is assembled on a truncated real Fourier basis (modes |m| <= K per axis)
sampled on the grid, using the same quadrature weights as every other
integral.  Centered nodal stencils annihilate the Nyquist mode and would
produce spurious near-zero eigenvalues; the truncated basis does not.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce

import numpy as np
import scipy.linalg as sla
from scipy.sparse.linalg import eigsh

from .errors import SolverFailure
from .geometry import ImmersionField
from .weighted import quadrature_weights

CLUSTER_TOL = 1e-3


def fourier_basis_1d(n: int, period: float, K: int) -> tuple[np.ndarray, np.ndarray]:
    """Samples of 1, cos(m t), sin(m t) (m = 1..K) and their derivatives at n nodes."""
    t = np.arange(n) * (period / n)
    omega = 2 * np.pi / period
    cols, dcols = [np.ones(n)], [np.zeros(n)]
    for m in range(1, K + 1):
        c, s = np.cos(m * omega * t), np.sin(m * omega * t)
        cols += [c, s]
        dcols += [-m * omega * s, m * omega * c]
    return np.stack(cols, axis=1), np.stack(dcols, axis=1)


@dataclass
class WeightedProblem:
    immersion: ImmersionField
    modes: tuple[int, ...]
    basis: np.ndarray            # (nodes, m)
    dbasis: list[np.ndarray]     # per axis, (nodes, m)
    weights: np.ndarray          # (nodes,)
    A: np.ndarray
    M: np.ndarray

    def stiffness(self, u: np.ndarray, v: np.ndarray) -> float:
        """A[u, v] for nodal functions, via grid differentiation."""
        imm = self.immersion
        du = np.moveaxis(imm.diff.gradient(u), 0, -1)
        dv = np.moveaxis(imm.diff.gradient(v), 0, -1)
        g = np.einsum("...ab,...a,...b->...", imm.metric_inv, du, dv)
        return float(np.sum(g.ravel() * self.weights))

    def mass(self, u: np.ndarray, v: np.ndarray) -> float:
        return float(np.sum((u * v).ravel() * self.weights))

    def to_nodal(self, coeffs: np.ndarray) -> np.ndarray:
        """Coefficient vectors (m, ...) -> nodal functions (..., *dims)."""
        vals = self.basis @ coeffs
        return np.moveaxis(vals, 0, -1).reshape(coeffs.shape[1:] + self.immersion.grid.dims)


def assemble_weighted_problem(imm: ImmersionField, modes: tuple[int, ...] | None = None) -> WeightedProblem:
    """Assemble stiffness/mass on Fourier modes |m| <= K_a (default K_a = N_a // 4)."""
    grid = imm.grid
    if modes is None:
        modes = tuple(n // 4 for n in grid.dims)
    modes = tuple(int(m) for m in modes)
    if any(m >= n // 2 or m < 1 for m, n in zip(modes, grid.dims)):
        raise ValueError(f"mode cutoffs {modes} must lie in [1, N/2) for grid {grid.dims}")
    one_d = [fourier_basis_1d(n, p, K) for n, p, K in zip(grid.dims, grid.periods, modes)]
    B = reduce(np.kron, [b for b, _ in one_d])
    dB = [reduce(np.kron, [db if i == a else b for i, (b, db) in enumerate(one_d)]) for a in range(grid.k)]
    w = quadrature_weights(imm).ravel()
    ginv = imm.metric_inv.reshape(-1, grid.k, grid.k)
    A = np.zeros((B.shape[1], B.shape[1]))
    for a in range(grid.k):
        for b in range(grid.k):
            c = w * ginv[:, a, b]
            if np.any(c):
                A += dB[a].T @ (c[:, None] * dB[b])
    A = 0.5 * (A + A.T)
    M = B.T @ (w[:, None] * B)
    M = 0.5 * (M + M.T)
    return WeightedProblem(imm, modes, B, dB, w, A, M)


@dataclass
class SpectralReport:
    eigenvalues: np.ndarray
    residuals: np.ndarray
    clusters: list[list[int]]
    coeffs: np.ndarray                       # (m, count) in the full basis
    grid: tuple[int, ...]
    modes: tuple[int, ...]
    cluster_tol: float
    richardson: np.ndarray | None = None
    richardson_error: np.ndarray | None = None
    match: dict = field(default_factory=dict)

    def cluster_values(self) -> list[np.ndarray]:
        return [self.eigenvalues[c] for c in self.clusters]

    def cluster_of(self, i: int) -> int:
        return next(j for j, c in enumerate(self.clusters) if i in c)


def cluster(values: np.ndarray, tol: float) -> list[list[int]]:
    groups: list[list[int]] = []
    for i, v in enumerate(values):
        if groups and v - values[groups[-1][-1]] <= tol:
            groups[-1].append(i)
        else:
            groups.append([i])
    return groups


def _constant_complement(problem: WeightedProblem) -> np.ndarray:
    """Basis (m, m-1) of coefficient vectors M-orthogonal to the constant function."""
    m = problem.M[:, 0]
    Q = np.eye(len(m))[:, 1:].copy()
    Q[0, :] = -m[1:] / m[0]
    return Q


def lowest_spectrum(problem: WeightedProblem, count: int = 10, cluster_tol: float = CLUSTER_TOL,
                    backend: str = "dense", pad: int = 8) -> SpectralReport:
    """Lowest nonzero eigenvalues of -Delta_f, ascending, with multiplicity clusters.

    ``pad`` extra eigenpairs are computed so the last reported cluster is complete.
    """
    if count < 2:
        raise ValueError("need at least 2 eigenvalues")
    Q = _constant_complement(problem)
    Aq = Q.T @ problem.A @ Q
    Mq = Q.T @ problem.M @ Q
    want = min(count + pad, Aq.shape[0])
    try:
        if backend == "dense":
            vals, vecs = sla.eigh(Aq, Mq, subset_by_index=[0, want - 1])
        elif backend == "lanczos":
            vals, vecs = eigsh(Aq, k=want, M=Mq, sigma=-0.25, which="LM", tol=1e-14)
            order = np.argsort(vals)
            vals, vecs = vals[order], vecs[:, order]
        else:
            raise ValueError(f"unknown eigensolver backend {backend!r}")
    except (np.linalg.LinAlgError, sla.LinAlgError, RuntimeError) as exc:
        raise SolverFailure(str(exc)) from exc
    groups = cluster(vals, cluster_tol)
    keep: list[list[int]] = []
    for g in groups:
        if g[0] >= count:
            break
        keep.append(g)
    last = keep[-1][-1] + 1
    vals, vecs = vals[:last], vecs[:, :last]
    coeffs = Q @ vecs
    r = problem.A @ coeffs - (problem.M @ coeffs) * vals
    residuals = np.linalg.norm(r, axis=0) / np.linalg.norm(problem.M @ coeffs, axis=0)
    return SpectralReport(vals, residuals, keep, coeffs, problem.immersion.grid.dims,
                          problem.modes, cluster_tol)


def richardson(fine: np.ndarray, coarse: np.ndarray, ratio: float = 2.0, order: float = 4.0):
    """Extrapolated values and |fine - extrapolated| error estimates."""
    n = min(len(fine), len(coarse))
    fine, coarse = np.asarray(fine[:n]), np.asarray(coarse[:n])
    est = fine + (fine - coarse) / (ratio**order - 1)
    return est, np.abs(fine - est)


def _m_orthonormal(F: np.ndarray, w: np.ndarray, drop: float = 1e-8) -> np.ndarray:
    """Orthonormal basis (in the weighted inner product) of the columns of F."""
    Fw = np.sqrt(w)[:, None] * F
    U, s, _ = np.linalg.svd(Fw, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return U[:, :0]
    return U[:, s > drop * s[0]]


def target_functions(imm: ImmersionField) -> np.ndarray:
    """Nodal values of <x - x0, e_i> for the standard basis, shape (nodes, N)."""
    return imm.rel_x.reshape(-1, imm.N)


def eigenspace_match(problem: WeightedProblem, report: SpectralReport, cluster_index: int = 0) -> dict:
    """Rank of span{<x, w>} and the largest principal angle to an eigenvalue cluster's span."""
    w = problem.weights
    T = _m_orthonormal(target_functions(problem.immersion), w)
    idx = report.clusters[cluster_index]
    E = _m_orthonormal(problem.basis @ report.coeffs[:, idx], w)
    angles = sla.subspace_angles(T, E) if T.shape[1] and E.shape[1] else np.array([np.pi / 2])
    out = {"target_rank": int(T.shape[1]), "cluster_size": len(idx),
           "cluster_index": cluster_index, "max_angle": float(np.max(angles)),
           "angles": np.sort(angles)}
    report.match[cluster_index] = out
    return out


def constrained_rayleigh_min(problem: WeightedProblem) -> float:
    """min int |du|^2 e^{-f} / int u^2 e^{-f} over u weighted-orthogonal to 1 and every <x, w>."""
    imm = problem.immersion
    F = np.column_stack([np.ones(imm.grid.size), target_functions(imm)])
    C = problem.basis.T @ (problem.weights[:, None] * F)
    Z = sla.null_space(C.T, rcond=1e-10)
    Az, Mz = Z.T @ problem.A @ Z, Z.T @ problem.M @ Z
    return float(sla.eigh(Az, Mz, eigvals_only=True, subset_by_index=[0, 0])[0])


# ---------------------------------------------------------------------------
# Jacobi operator on normal fields

def normal_derivatives(imm: ImmersionField, X: np.ndarray) -> np.ndarray:
    """nabla^perp_a X = (d_a X)^perp, shape (k, *dims, N)."""
    return imm.normal_part(imm.diff.gradient(X))


def normal_laplacian(imm: ImmersionField, X: np.ndarray) -> np.ndarray:
    """g^{ab}(nabla_a nabla_b X - Gamma^c_ab nabla_c X) for the normal connection."""
    DX = normal_derivatives(imm, X)
    k = imm.k
    second = np.empty((k, k) + X.shape)
    for b in range(k):
        second[:, b] = normal_derivatives(imm, DX[b])
    gam = np.einsum("...cab,c...n->ab...n", imm.christoffel, DX)
    return np.einsum("...ab,ab...n->...n", imm.metric_inv, second - gam)


def apply_jacobi_L(imm: ImmersionField, X) -> np.ndarray:
    """LX = Delta X + <X, h_ij> h_ij - <(x - x0)/(2 t0), e_i> nabla_i X + X / (2 t0)."""
    X = np.asarray(X, dtype=float)
    imm.check_normal(X)
    II = imm.second_fundamental_form
    ginv = imm.metric_inv
    XII = np.einsum("ab...n,...n->...ab", II, X)
    raised = np.einsum("...ac,...bd,...cd->...ab", ginv, ginv, XII)
    curv = np.einsum("...ab,ab...n->...n", raised, II)
    drift = np.einsum("...a,a...n->...n", imm.x_top, normal_derivatives(imm, X)) / (2 * imm.t0)
    return normal_laplacian(imm, X) + curv - drift + X / (2 * imm.t0)
