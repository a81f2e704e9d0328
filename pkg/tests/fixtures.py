"""Non-catalog immersions used as test fixtures."""
import numpy as np

from shrinker_lab.catalog import build_circle, build_clifford
from shrinker_lab.geometry import ImmersionField
from shrinker_lab.grid import ParamGrid


def equivariant_torus(n: int = 32, backend: str = "spectral") -> ImmersionField:
    """gamma(s) (cos t, sin t) in C^2; Lagrangian for every planar curve gamma avoiding 0."""
    g = ParamGrid((n, n))
    s, t = g.mesh()
    gam = 2 + 0.7 * np.exp(1j * s) + 0.2 * np.exp(-2j * s)
    z1, z2 = gam * np.cos(t), gam * np.sin(t)
    return ImmersionField(g, np.stack([z1.real, z1.imag, z2.real, z2.imag], -1), backend=backend,
                          name="equivariant")


def non_lagrangian(eps: float = 0.1, n: int = 32) -> ImmersionField:
    """Clifford torus with Im z^1 pushed by eps sin(theta^2)."""
    base = build_clifford(2, n)
    x = base.x.copy()
    x[..., 1] += eps * np.sin(base.grid.mesh()[1])
    return base.with_positions(x)


def flat_patch(n: int = 16) -> ImmersionField:
    """The real plane R^2 in C^2 as a doubly periodic-up-to-translation patch."""
    g = ParamGrid((n, n))
    s, t = g.mesh()
    x = np.stack([s, np.zeros_like(s), t, np.zeros_like(t)], -1)
    L = np.zeros((4, 2))
    L[0, 0] = L[2, 1] = 1.0
    return ImmersionField(g, x, linear_part=L, name="flat")


def circle_of_radius(r: float, n: int = 64) -> ImmersionField:
    base = build_circle(n)
    return base.with_positions(base.x * (r / np.sqrt(2)))


def scaled_clifford(c: float = 1.05, n: int = 32) -> ImmersionField:
    base = build_clifford(2, n)
    imm = base.with_positions(base.x * c)
    imm.model = base.model
    return imm


def translated_circle(center, n: int = 64) -> ImmersionField:
    base = build_circle(n)
    return base.with_positions(base.x + np.asarray(center, dtype=float))


def unitary(theta: float, phi: float) -> np.ndarray:
    """A real 4x4 matrix representing an element of U(2) (commutes with J)."""
    U = np.array([[np.cos(theta), -np.sin(theta) * np.exp(-1j * phi)],
                  [np.sin(theta) * np.exp(1j * phi), np.cos(theta)]]) * np.exp(0.3j)
    R = np.zeros((4, 4))
    for a in range(2):
        for b in range(2):
            u = U[a, b]
            R[2 * a:2 * a + 2, 2 * b:2 * b + 2] = [[u.real, -u.imag], [u.imag, u.real]]
    return R
