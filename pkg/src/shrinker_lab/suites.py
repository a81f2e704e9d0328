"""Randomized verification suites shared by the command line and the tests."""
from __future__ import annotations

import numpy as np

from . import forms
from .geometry import ImmersionField, dot
from .spectral import apply_jacobi_L
from .weighted import first_variation, quadrature_weights, verify_identity

IDENTITY_INDICES = (1, 2, 3, 4, 5, 6)


def random_unit_vectors(rng: np.random.Generator, count: int, N: int) -> np.ndarray:
    w = rng.normal(size=(count, N))
    return w / np.linalg.norm(w, axis=1, keepdims=True)


def random_trig(imm: ImmersionField, rng: np.random.Generator, terms: int = 4, K: int = 3) -> np.ndarray:
    """Random real trig polynomial with frequencies |m_a| <= K."""
    mesh = imm.grid.mesh()
    u = np.zeros(imm.grid.dims)
    for _ in range(terms):
        freqs = rng.integers(-K, K + 1, size=imm.k)
        phase = sum(m * (2 * np.pi / P) * t for m, P, t in zip(freqs, imm.grid.periods, mesh))
        u += rng.normal() * np.cos(phase) + rng.normal() * np.sin(phase)
    return u


def random_closed_form(imm: ImmersionField, rng: np.random.Generator) -> np.ndarray:
    """sum_a c_a dtheta^a + du with random c and random trig u."""
    return forms.coordinate_form(imm, rng.normal(size=imm.k)) + forms.d(imm, random_trig(imm, rng))


def weighted_rms(imm: ImmersionField, X: np.ndarray) -> float:
    w = quadrature_weights(imm)
    return float(np.sqrt(np.sum(np.sum(X**2, axis=-1) * w) / np.sum(w)))


def random_normal_field(imm: ImmersionField, rng: np.random.Generator) -> np.ndarray:
    """Normal field with random trig coefficients in the normal frame, unit weighted RMS."""
    X = sum(random_trig(imm, rng)[..., None] * imm.normal_frame[i] for i in range(imm.N - imm.k))
    return X / weighted_rms(imm, X)


def identity_suite(imm: ImmersionField, ws: np.ndarray) -> dict[int, list[float]]:
    """Normalized residual of each weighted identity for every sampled w."""
    out = {}
    for i in IDENTITY_INDICES:
        if i in (2, 3):
            out[i] = [verify_identity(imm, i)]
        else:
            out[i] = [verify_identity(imm, i, w) for w in ws]
    return out


def integration_by_parts(imm: ImmersionField, u: np.ndarray, v: np.ndarray) -> float:
    """|int u Delta_f v e^{-f} + int <du, dv> e^{-f}| normalized by the sum of magnitudes."""
    wq = quadrature_weights(imm)
    a = u * forms.drift_laplacian(imm, v) * wq
    b = forms.pair(imm, forms.d(imm, u), forms.d(imm, v)) * wq
    denom = float(np.sum(np.abs(a)) + np.sum(np.abs(b)))
    return abs(float(np.sum(a) + np.sum(b))) / denom if denom else 0.0


def integration_by_parts_suite(imm: ImmersionField, rng: np.random.Generator, pairs: int = 20) -> list[float]:
    return [integration_by_parts(imm, random_trig(imm, rng), random_trig(imm, rng)) for _ in range(pairs)]


def first_variation_suite(imm: ImmersionField, rng: np.random.Generator, samples: int = 10) -> list[float]:
    out = []
    for _ in range(samples):
        X = random_normal_field(imm, rng)
        out.append(abs(first_variation(imm, X, rng.normal(size=imm.N), float(rng.normal()))))
    return out


def eigenfield_residuals(imm: ImmersionField) -> dict[str, float]:
    """sup |LH - H| and the worst sup |L w^perp - w^perp / 2| over the standard basis w."""
    H = imm.mean_curvature
    out = {"LH_minus_H": float(np.max(np.abs(apply_jacobi_L(imm, H) - H)))}
    worst = 0.0
    for i in range(imm.N):
        w = np.zeros(imm.N)
        w[i] = 1.0
        wp = imm.normal_part(np.broadcast_to(w, imm.x.shape))
        worst = max(worst, float(np.max(np.abs(apply_jacobi_L(imm, wp) - 0.5 * wp))))
    out["Lw_minus_half_w"] = worst
    return out


def twisted_harmonicity(imm: ImmersionField) -> dict:
    H_form = forms.mean_curvature_form(imm)
    return {"d_f_star_sup": float(np.max(np.abs(forms.d_f_star(imm, H_form)))),
            "maslov": forms.maslov_coordinates(imm, H_form)}


def observed_orders(resolutions: list[int], errors: list[float]) -> list[float | None]:
    """log(e_i / e_{i+1}) / log(N_{i+1} / N_i) between consecutive resolutions."""
    out: list[float | None] = [None]
    for (n0, e0), (n1, e1) in zip(zip(resolutions, errors), zip(resolutions[1:], errors[1:])):
        if e0 > 0 and e1 > 0:
            out.append(float(np.log(e0 / e1) / np.log(n1 / n0)))
        else:
            out.append(None)
    return out
