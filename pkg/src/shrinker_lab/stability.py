"""Second variation of the F-functional, the (y, h) optimizer, and stability verdicts.

All formulas here are specialized to shrinkers extinct at (0, 1).  Each
second variation is affine-quadratic in the translation y and dilation h,

    F''(y, h) = c + b . z - z^T Q z / 2,    z = (y, h),

so the existential quantifier over (y, h) is realized exactly by solving
Q z = b (pseudo-inverse on degenerate directions).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import forms
from .catalog import build_model
from .errors import CertificateWeak, NotAShrinker, NotApplicable
from .geometry import ImmersionField, dot, shrinker_residual
from .spectral import (CLUSTER_TOL, SpectralReport, WeightedProblem, apply_jacobi_L,
                       assemble_weighted_problem, constrained_rayleigh_min, eigenspace_match,
                       lowest_spectrum, richardson)
from .weighted import SHRINKER_GATE, gaussian_prefactor, quadrature_weights

TOL_EIG = 5e-3
TOL_SUB = 5e-3
CERTIFICATE_TOL = 1e-8


def require_shrinker(imm: ImmersionField, gate: float = SHRINKER_GATE) -> float:
    if np.any(imm.x0 != 0) or imm.t0 != 1.0:
        raise NotAShrinker("second variation formulas assume extinction at (0, 1)")
    r = shrinker_residual(imm)
    if r > gate:
        raise NotAShrinker(f"shrinker residual {r:.3e} exceeds {gate:.1e}")
    return r


@dataclass
class SecondVariationResult:
    value: float
    source: str
    y: np.ndarray
    h: float
    terms: dict[str, float]


@dataclass
class QuadraticModel:
    """F'' as c + b.z - z^T Q z / 2 with z = (y, h); prefactor already applied."""
    source: str
    constant: dict[str, float]
    b: np.ndarray
    Q: np.ndarray

    @property
    def N(self) -> int:
        return len(self.b) - 1

    def evaluate(self, y=None, h: float = 0.0) -> SecondVariationResult:
        y = np.zeros(self.N) if y is None else np.asarray(y, dtype=float)
        terms = dict(self.constant)
        terms["translation_linear"] = float(self.b[:-1] @ y)
        terms["dilation_linear"] = float(self.b[-1] * h)
        terms["translation_quadratic"] = float(-0.5 * y @ self.Q[:-1, :-1] @ y)
        terms["dilation_quadratic"] = float(-0.5 * self.Q[-1, -1] * h * h)
        return SecondVariationResult(float(sum(terms.values())), self.source, y, float(h), terms)


def _integrate(imm: ImmersionField, f: np.ndarray) -> np.ndarray:
    """Prefactor-weighted integral of a scalar or ambient-vector field."""
    w = quadrature_weights(imm)
    pref = gaussian_prefactor(imm.k)
    if f.shape == imm.grid.dims:
        return pref * float(np.sum((f * w).ravel()))
    return pref * (f * w[..., None]).reshape(-1, f.shape[-1]).sum(axis=0)


def _translation_hessian(imm: ImmersionField) -> np.ndarray:
    """int P_perp e^{-f} dmu (times prefactor), the y-y block of Q."""
    E = imm._frame_last.reshape(-1, imm.k, imm.N)
    w = quadrature_weights(imm).ravel() * gaussian_prefactor(imm.k)
    tangential = np.einsum("p,pin,pim->nm", w, E, E)
    return np.sum(w) * np.eye(imm.N) - tangential


def _model(imm, source, constant, b_y, b_h, q_hh) -> QuadraticModel:
    Q = np.zeros((imm.N + 1, imm.N + 1))
    Q[:-1, :-1] = _translation_hessian(imm)
    Q[-1, -1] = q_hh
    return QuadraticModel(source, constant, np.append(b_y, b_h), Q)


def normal_model(imm: ImmersionField, X) -> QuadraticModel:
    require_shrinker(imm)
    X = np.asarray(X, dtype=float)
    LX = apply_jacobi_L(imm, X)
    H = imm.mean_curvature
    return _model(imm, "normal field",
                  {"jacobi": -_integrate(imm, dot(X, LX))},
                  _integrate(imm, X),
                  -2 * _integrate(imm, dot(X, H)),
                  2 * _integrate(imm, dot(H, H)))


def _form_translation_term(imm: ImmersionField, theta: np.ndarray) -> np.ndarray:
    # -theta(J y^perp) = <P_perp J theta^sharp, y>
    return _integrate(imm, imm.normal_part(imm.ambient.J(forms.sharp(imm, theta))))


def _x_perp_sq(imm: ImmersionField) -> float:
    xp = imm.normal_part(imm.x)
    return _integrate(imm, dot(xp, xp))


def lagrangian_model(imm: ImmersionField, theta: np.ndarray) -> QuadraticModel:
    require_shrinker(imm)
    forms.check_closed(imm, theta)
    dfs = forms.d_f_star(imm, theta)
    Jxp = imm.ambient.J(imm.normal_part(imm.x))
    theta_Jxp = dot(forms.sharp(imm, theta), Jxp)
    return _model(imm, "closed form",
                  {"dfstar": _integrate(imm, dfs**2), "norm": -_integrate(imm, forms.norm2(imm, theta))},
                  _form_translation_term(imm, theta),
                  -_integrate(imm, theta_Jxp),
                  0.5 * _x_perp_sq(imm))


def hamiltonian_model(imm: ImmersionField, u: np.ndarray) -> QuadraticModel:
    require_shrinker(imm)
    du = forms.d(imm, u)
    dfs = forms.d_f_star(imm, du)
    return _model(imm, "function",
                  {"dfstar": _integrate(imm, dfs**2), "norm": -_integrate(imm, forms.norm2(imm, du))},
                  _form_translation_term(imm, du),
                  0.0,
                  0.5 * _x_perp_sq(imm))


def second_variation_normal(imm, X, y=None, h=0.0) -> SecondVariationResult:
    return normal_model(imm, X).evaluate(y, h)


def second_variation_lagrangian(imm, theta, y=None, h=0.0) -> SecondVariationResult:
    return lagrangian_model(imm, theta).evaluate(y, h)


def second_variation_hamiltonian(imm, u, y=None, h=0.0) -> SecondVariationResult:
    return hamiltonian_model(imm, u).evaluate(y, h)


@dataclass
class Optimum:
    y: np.ndarray
    h: float
    value: float
    hessian_eigenvalues: np.ndarray
    result: SecondVariationResult


def optimize_translation_dilation(model: QuadraticModel, rcond: float = 1e-10) -> Optimum:
    """Maximize the concave quadratic over (y, h)."""
    z = np.linalg.pinv(model.Q, rcond=rcond, hermitian=True) @ model.b
    res = model.evaluate(z[:-1], z[-1])
    return Optimum(z[:-1], float(z[-1]), res.value, np.linalg.eigvalsh(-model.Q), res)


# ---------------------------------------------------------------------------
# Lagrangian instability certificate

@dataclass
class Certificate:
    coefficients: np.ndarray      # theta0 = sum_a c_a d theta^a
    maslov: np.ndarray
    u0: np.ndarray
    theta: np.ndarray             # twisted harmonic representative
    optimum: Optimum
    twisted_residual: float
    eq34_value: float

    @property
    def value(self) -> float:
        return self.optimum.value


def select_generator(maslov_H: np.ndarray, periods) -> np.ndarray:
    """Coordinate generator most independent of [H], with its [H]-component removed.

    Returns form coefficients, scaled so the chosen generator has coefficient 1.
    """
    m = np.asarray(maslov_H, dtype=float)
    best, best_sin, best_vec = None, -1.0, None
    for a, P in enumerate(periods):
        g = np.zeros_like(m)
        g[a] = P
        r = g - (g @ m) / (m @ m) * m
        s = np.linalg.norm(r) / np.linalg.norm(g)
        if s > best_sin + 1e-12:
            best, best_sin, best_vec = a, s, r
    coeffs = best_vec / np.asarray(periods)
    return coeffs / coeffs[best]


def instability_certificate(imm: ImmersionField, tol: float = CERTIFICATE_TOL) -> Certificate:
    b1 = imm.model.b1
    if b1 < 2:
        raise NotApplicable(f"b1 = {b1}: no class independent of the Maslov class")
    require_shrinker(imm)
    H_form = forms.mean_curvature_form(imm)
    coeffs = select_generator(forms.maslov_coordinates(imm, H_form), imm.grid.periods)
    theta0, _ = forms.hodge_decompose(imm, forms.coordinate_form(imm, coeffs))
    u0, theta = forms.twisted_harmonic_representative(imm, theta0)
    opt = optimize_translation_dilation(lagrangian_model(imm, theta))
    th = theta + opt.h * H_form
    eq34 = -_integrate(imm, forms.norm2(imm, th)) - 0.5 * float(opt.y @ _translation_hessian(imm) @ opt.y)
    cert = Certificate(coeffs, forms.maslov_coordinates(imm, theta), u0, theta, opt,
                       float(np.max(np.abs(forms.d_f_star(imm, theta)))), eq34)
    if cert.value > -tol:
        raise CertificateWeak(f"optimized F'' = {cert.value:.3e} is not below -{tol:.1e}")
    return cert


# ---------------------------------------------------------------------------
# verdicts

HAMILTONIAN_STABLE = "HamiltonianFStable"
HAMILTONIAN_UNSTABLE = "HamiltonianFUnstable"
LAGRANGIAN_STABLE = "LagrangianFStable"
LAGRANGIAN_UNSTABLE = "LagrangianFUnstable"
INCONCLUSIVE = "Inconclusive"


@dataclass
class StabilityVerdict:
    tag: str
    evidence: dict
    tolerances: dict
    b1: int
    reason: str = ""
    metadata: dict = field(default_factory=dict)


@dataclass
class SpectralAnalysis:
    problem: WeightedProblem
    report: SpectralReport


def analyze_spectrum(imm: ImmersionField, count: int = 10, cluster_tol: float = CLUSTER_TOL,
                     backend: str = "dense", with_richardson: bool = True) -> SpectralAnalysis:
    """Assemble, solve, match the first cluster, and (if possible) Richardson-extrapolate."""
    problem = assemble_weighted_problem(imm)
    report = lowest_spectrum(problem, count, cluster_tol, backend)
    eigenspace_match(problem, report, 0)
    if len(report.clusters) > 1:
        eigenspace_match(problem, report, 1)
    coarse_dims = tuple(d // 2 for d in imm.grid.dims)
    model = getattr(imm, "model", None)
    if with_richardson and model is not None and all(d >= 8 and d % 2 == 0 for d in coarse_dims):
        coarse = build_model(model, coarse_dims, imm.diff.backend)
        crep = lowest_spectrum(assemble_weighted_problem(coarse), len(report.eigenvalues), cluster_tol, backend)
        report.richardson, report.richardson_error = richardson(report.eigenvalues, crep.eigenvalues)
    return SpectralAnalysis(problem, report)


def _effective_tol(tol: float, report: SpectralReport) -> float:
    if report.richardson_error is None:
        return tol
    idx = [i for c in report.clusters[:2] for i in c]
    return tol + 10 * float(np.max(report.richardson_error[idx]))


def hamiltonian_verdict(imm: ImmersionField, analysis: SpectralAnalysis,
                        tol_eig: float = TOL_EIG, tol_sub: float = TOL_SUB) -> StabilityVerdict:
    """Spectral criterion and constrained-Rayleigh criterion; they must agree."""
    require_shrinker(imm)
    report = analysis.report
    if len(report.clusters) < 2:
        raise ValueError("spectral report needs at least two clusters")
    tol = _effective_tol(tol_eig, report)
    lam1 = float(np.mean(report.eigenvalues[report.clusters[0]]))
    lam2 = float(np.min(report.eigenvalues[report.clusters[1]]))
    match = report.match.get(0) or eigenspace_match(analysis.problem, report, 0)
    size, rank, angle = match["cluster_size"], match["target_rank"], match["max_angle"]

    eig_ok = abs(lam1 - 0.5) <= tol and size == rank and angle <= tol_sub
    if eig_ok and lam2 >= 1 - tol:
        spectral_tag, spectral_reason = HAMILTONIAN_STABLE, ""
    elif lam1 < 0.5 - tol:
        spectral_tag, spectral_reason = HAMILTONIAN_UNSTABLE, f"lambda1 = {lam1:.6g} < 1/2"
    elif eig_ok and lam2 < 1 - tol:
        spectral_tag, spectral_reason = HAMILTONIAN_UNSTABLE, f"lambda2 = {lam2:.6g} < 1"
    elif abs(lam1 - 0.5) <= tol and size > rank:
        spectral_tag, spectral_reason = HAMILTONIAN_UNSTABLE, f"lambda1 cluster size {size} > span rank {rank}"
    else:
        failed = []
        if abs(lam1 - 0.5) > tol:
            failed.append(f"|lambda1 - 1/2| = {abs(lam1 - 0.5):.3g} > tol_eig")
        if size != rank:
            failed.append(f"cluster size {size} != span rank {rank}")
        if angle > tol_sub:
            failed.append(f"principal angle {angle:.3g} > tol_sub")
        spectral_tag, spectral_reason = INCONCLUSIVE, "; ".join(failed)

    rayleigh = constrained_rayleigh_min(analysis.problem)
    rayleigh_tag = HAMILTONIAN_STABLE if rayleigh >= 1 - tol else HAMILTONIAN_UNSTABLE

    evidence = {"lambda1": lam1, "lambda2": lam2, "lambda1_cluster_size": size, "span_rank": rank,
                "principal_angle": angle, "spectral_path": spectral_tag, "spectral_reason": spectral_reason,
                "rayleigh_min": rayleigh, "rayleigh_path": rayleigh_tag}
    if spectral_tag == rayleigh_tag:
        tag, reason = spectral_tag, spectral_reason
    else:
        tag = INCONCLUSIVE
        reason = (f"spectral path {spectral_tag} ({spectral_reason or 'ok'}) disagrees with "
                  f"Rayleigh path {rayleigh_tag} (min {rayleigh:.6g})")
    meta = {}
    if imm.k < 2:
        meta["note"] = "intrinsic dimension 1; the stability theory is stated for dimension >= 2"
    return StabilityVerdict(tag, evidence, {"tol_eig": tol_eig, "tol_eig_effective": tol, "tol_sub": tol_sub},
                            imm.model.b1, reason, meta)


def lagrangian_verdict(imm: ImmersionField, analysis: SpectralAnalysis | None = None,
                       tol_eig: float = TOL_EIG, tol_sub: float = TOL_SUB) -> StabilityVerdict:
    require_shrinker(imm)
    b1 = imm.model.b1
    if b1 >= 2:
        cert = instability_certificate(imm)
        return StabilityVerdict(LAGRANGIAN_UNSTABLE, {"certificate": cert, "F2_max": cert.value},
                                {"certificate_tol": CERTIFICATE_TOL}, b1,
                                metadata={"route": "certificate"})
    if analysis is None:
        analysis = analyze_spectrum(imm)
    ham = hamiltonian_verdict(imm, analysis, tol_eig, tol_sub)
    relabel = {HAMILTONIAN_STABLE: LAGRANGIAN_STABLE, HAMILTONIAN_UNSTABLE: LAGRANGIAN_UNSTABLE}
    return StabilityVerdict(relabel.get(ham.tag, INCONCLUSIVE), {"hamiltonian": ham}, ham.tolerances, b1,
                            ham.reason, {"route": "b1 = 1: equivalent to Hamiltonian stability", **ham.metadata})
