"""Functions and 1-forms on the parameter torus.

A function is an array of shape ``grid.dims``; a 1-form is stored by its
coordinate components, shape ``(*grid.dims, k)``.  The weighted operators
use f = |x - x0|^2 / (4 t0) taken from the immersion's extinction data.
"""
from __future__ import annotations

import numpy as np
from scipy.sparse.linalg import LinearOperator, cg

from .errors import NotClosed, RHSNotCompatible, SolverFailure
from .geometry import ImmersionField, dot
from .grid import ParamGrid, PeriodicDiff
from .weighted import quadrature_weights

CLOSED_TOL = 1e-6
CG_RTOL = 1e-12


def d(imm: ImmersionField, u: np.ndarray) -> np.ndarray:
    return np.moveaxis(imm.diff.gradient(u), 0, -1)


def coordinate_form(imm: ImmersionField, coeffs) -> np.ndarray:
    """Constant-coefficient form sum_a c_a d(theta^a)."""
    return np.broadcast_to(np.asarray(coeffs, dtype=float), imm.grid.dims + (imm.k,)).copy()


def raise_index(imm: ImmersionField, theta: np.ndarray) -> np.ndarray:
    return np.einsum("...ab,...b->...a", imm.metric_inv, theta)


def pair(imm: ImmersionField, alpha: np.ndarray, beta: np.ndarray) -> np.ndarray:
    """Pointwise <alpha, beta> = g^{ab} alpha_a beta_b."""
    return np.sum(raise_index(imm, alpha) * beta, axis=-1)


def norm2(imm: ImmersionField, theta: np.ndarray) -> np.ndarray:
    return pair(imm, theta, theta)


def sharp(imm: ImmersionField, theta: np.ndarray) -> np.ndarray:
    """The tangent vector field dual to theta, as an ambient field."""
    return imm.from_coord_components(raise_index(imm, theta))


def frame_components(imm: ImmersionField, theta: np.ndarray) -> np.ndarray:
    """theta(e_i)."""
    return np.einsum("...ia,...a->...i", imm.frame_coeffs, theta)


def evaluate(theta: np.ndarray, V: np.ndarray) -> np.ndarray:
    """theta(V) for V given by contravariant components."""
    return np.sum(theta * V, axis=-1)


def variation_to_form(imm: ImmersionField, X) -> np.ndarray:
    """theta = -i_X omega, i.e. theta_a = -<J X, d_a x>."""
    X = np.asarray(X, dtype=float)
    imm.check_normal(X)
    JX = imm.ambient.J(X)
    return -np.moveaxis(dot(imm.tangents, JX[None]), 0, -1)


def form_to_variation(imm: ImmersionField, theta: np.ndarray) -> np.ndarray:
    """The normal field X = J theta^sharp with -i_X omega = theta."""
    return imm.ambient.J(sharp(imm, theta))


def exterior_d(imm: ImmersionField, theta: np.ndarray) -> float:
    """Closedness defect: max |d_a theta_b - d_b theta_a|."""
    worst = 0.0
    for a in range(imm.k):
        for b in range(a + 1, imm.k):
            c = imm.diff(theta[..., b], a) - imm.diff(theta[..., a], b)
            worst = max(worst, float(np.max(np.abs(c))))
    return worst


def check_closed(imm: ImmersionField, theta: np.ndarray, tol: float = CLOSED_TOL) -> None:
    scale = max(1.0, float(np.max(np.abs(theta))))
    defect = exterior_d(imm, theta)
    if defect > tol * scale:
        raise NotClosed(f"closedness defect {defect:.3e} exceeds {tol * scale:.1e}")


def _divergence(imm: ImmersionField, density: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """sum_a d_a(density g^{ab} theta_b)."""
    V = density[..., None] * raise_index(imm, theta)
    return sum(imm.diff(V[..., a], a) for a in range(imm.k))


def d_star(imm: ImmersionField, theta: np.ndarray) -> np.ndarray:
    """d* theta = -(1/sqrt g) d_a(sqrt g g^{ab} theta_b); nonnegative d*d on functions."""
    return -_divergence(imm, imm.area_density, theta) / imm.area_density


def d_f_star(imm: ImmersionField, theta: np.ndarray) -> np.ndarray:
    """d_f* theta = d* theta + theta(grad f), grad f = (x - x0)^T / (2 t0)."""
    return d_star(imm, theta) + evaluate(theta, imm.x_top) / (2 * imm.t0)


def drift_laplacian(imm: ImmersionField, u: np.ndarray) -> np.ndarray:
    """Delta_f u = Delta u - <(x - x0)^T / (2 t0), grad u> = -d_f* du."""
    return -d_f_star(imm, d(imm, u))


# ---------------------------------------------------------------------------
# Poisson solves

def _symbol(imm: ImmersionField, a: int) -> np.ndarray:
    n = imm.grid.dims[a]
    delta = np.zeros(n)
    delta[0] = 1.0
    D = PeriodicDiff(ParamGrid((n,), (imm.grid.periods[a],)), imm.diff.backend)  # 1D copy of this axis
    return np.abs(np.fft.fft(D(delta, 0))) ** 2


def solve_divergence_free(imm: ImmersionField, theta: np.ndarray, density: np.ndarray,
                          rtol: float = CG_RTOL) -> tuple[np.ndarray, dict]:
    """Find u with div_density(theta + du) = 0 and zero density-weighted mean.

    Conjugate gradient on the symmetric positive semidefinite operator
    u -> -div(density grad u), preconditioned by the constant-coefficient
    operator inverted with FFTs.  The kernel (constants, plus Nyquist modes
    for centered stencils) is never excited because the right-hand side lies
    in the range.
    """
    dims = imm.grid.dims
    size = imm.grid.size

    def K(u):
        u = u.reshape(dims)
        return -_divergence(imm, density, d(imm, u)).ravel()

    rhs = _divergence(imm, density, theta).ravel()
    scale = float(np.sum(np.abs(rhs))) or 1.0
    if abs(float(np.sum(rhs))) > 1e-9 * scale:
        raise RHSNotCompatible(f"right-hand side mean {np.sum(rhs):.3e} is not zero")
    if float(np.max(np.abs(rhs))) == 0.0:
        return np.zeros(dims), {"iterations": 0, "residual": 0.0}

    ginv_mean = [float(np.mean(density * imm.metric_inv[..., a, a])) for a in range(imm.k)]
    symbol = np.zeros(dims)
    for a in range(imm.k):
        shape = [1] * imm.k
        shape[a] = dims[a]
        symbol = symbol + ginv_mean[a] * _symbol(imm, a).reshape(shape)
    inv_symbol = np.zeros_like(symbol)
    nz = symbol > 1e-12 * symbol.max()
    inv_symbol[nz] = 1.0 / symbol[nz]

    def Pinv(r):
        return np.fft.ifftn(np.fft.fftn(r.reshape(dims)) * inv_symbol).real.ravel()

    count = {"it": 0}

    def callback(_):
        count["it"] += 1

    A = LinearOperator((size, size), matvec=K, dtype=float)
    M = LinearOperator((size, size), matvec=Pinv, dtype=float)
    u, info = cg(A, rhs, rtol=rtol, atol=0.0, M=M, maxiter=20 * size, callback=callback)
    resid = float(np.linalg.norm(K(u) - rhs) / np.linalg.norm(rhs))
    if info != 0 and resid > 1e3 * rtol:
        raise SolverFailure(f"CG stagnated (info={info}, relative residual {resid:.2e})")
    u = u.reshape(dims)
    u = u - np.sum(u * density) / np.sum(density)
    return u, {"iterations": count["it"], "residual": resid}


def hodge_decompose(imm: ImmersionField, theta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """theta = theta0 + du with d* theta0 = 0 and u of zero mean."""
    check_closed(imm, theta)
    # div(-theta + du) = 0, so theta - du is coclosed
    u, _ = solve_divergence_free(imm, -theta, imm.area_density)
    return theta - d(imm, u), u


def twisted_harmonic_representative(imm: ImmersionField, theta0: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """u0 with d_f*(theta0 + du0) = 0 (zero weighted mean); returns (u0, theta0 + du0)."""
    w = quadrature_weights(imm) / imm.grid.cell_volume
    u0, _ = solve_divergence_free(imm, theta0, w)
    return u0, theta0 + d(imm, u0)


def mean_curvature_form(imm: ImmersionField) -> np.ndarray:
    return variation_to_form(imm, imm.mean_curvature)


def maslov_coordinates(imm: ImmersionField, theta: np.ndarray) -> np.ndarray:
    """Line integrals of theta over the k coordinate circles (averaged over parallel circles)."""
    out = np.empty(imm.k)
    for a in range(imm.k):
        line = np.sum(theta[..., a], axis=a) * imm.grid.spacing[a]
        out[a] = float(np.mean(line))
    return out


def weighted_l2_pair(imm: ImmersionField, alpha: np.ndarray, beta: np.ndarray) -> float:
    return float(np.sum(pair(imm, alpha, beta) * quadrature_weights(imm)))
