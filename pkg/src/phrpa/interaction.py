"""Discretised soft-Coulomb interaction, its square root, Hartree and exchange.

Weight convention (used everywhere in the package): ``W[i, j] = dx * w(x_i - x_j)``
so that ``W @ f`` approximates ``integral w(x - y) f(y) dy`` on value vectors.
Consequently ``dx * f @ W @ g`` approximates the double integral
``∬ f(x) w(x - y) g(y)``, and traces of products of such operators
approximate operator traces directly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, KernelError
from .grid import Grid

__all__ = [
    "InteractionKernel",
    "SqrtKernel",
    "soft_coulomb",
    "kernel_from_points",
    "interaction_matrix",
    "kernel_sqrt",
    "hartree_energy",
    "exchange_energy",
    "pair_hs_norm",
]

CLIP_REL = 1e-12
CLIP_FAIL_REL = 1e-6


def soft_coulomb(r: np.ndarray | float, softening: float) -> np.ndarray:
    """``w(r) = 1 / sqrt(r^2 + b^2)``."""
    r = np.asarray(r, dtype=float)
    return 1.0 / np.sqrt(r * r + softening * softening)


@dataclass(frozen=True)
class InteractionKernel:
    """Quadrature-weighted interaction matrix ``W`` and the mesh it lives on."""

    W: np.ndarray = field(repr=False)
    softening: float
    spacing: float

    @property
    def n(self) -> int:
        return self.W.shape[0]

    def scaled(self, factor: float) -> "InteractionKernel":
        return InteractionKernel(self.W * factor, self.softening, self.spacing)


@dataclass(frozen=True)
class SqrtKernel:
    """Spectral square root ``S`` of the clipped kernel."""

    S: np.ndarray = field(repr=False)
    clip_count: int
    clip_mass: float
    W_clipped: np.ndarray = field(repr=False)


def kernel_from_points(points: np.ndarray, spacing: float, softening: float) -> InteractionKernel:
    """Kernel on an arbitrary point set (used for toys that are not valid grids)."""
    if not softening > 0:
        raise ConfigError(f"interaction softening must be positive, got {softening}")
    x = np.asarray(points, dtype=float)
    W = spacing * soft_coulomb(x[:, None] - x[None, :], softening)
    W.setflags(write=False)
    return InteractionKernel(W, float(softening), float(spacing))


def interaction_matrix(grid: Grid, softening: float) -> InteractionKernel:
    """``W_ij = dx / sqrt((x_i - x_j)^2 + b^2)`` on ``grid``."""
    return kernel_from_points(grid.points, grid.spacing, softening)


def kernel_sqrt(kernel: InteractionKernel | np.ndarray) -> SqrtKernel:
    """Symmetric PSD square root with eigenvalue clipping.

    Eigenvalues below ``1e-12 * lambda_max`` are set to zero.  If the clipped
    negative mass exceeds ``1e-6 * ||W||`` the kernel is rejected.
    """
    W = kernel.W if isinstance(kernel, InteractionKernel) else np.asarray(kernel, dtype=float)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise ConfigError("kernel must be a square matrix")
    scale = float(np.abs(W).max()) if W.size else 0.0
    if not np.allclose(W, W.T, rtol=0, atol=1e-13 * max(scale, 1e-300)):
        raise KernelError("interaction matrix is not symmetric")
    lam, Q = np.linalg.eigh(0.5 * (W + W.T))
    lam_max = float(lam.max()) if lam.size else 0.0
    if lam_max <= 0.0:
        if lam.size and lam.min() < -CLIP_FAIL_REL * max(scale, 1e-300):
            raise KernelError("interaction matrix is negative definite")
        zero = np.zeros_like(W)
        return SqrtKernel(zero, int(lam.size), float(np.abs(lam).sum()), zero)
    clip = lam < CLIP_REL * lam_max
    clip_mass = float(np.abs(lam[clip]).sum())
    if clip_mass > CLIP_FAIL_REL * np.linalg.norm(W, 2):
        raise KernelError(
            f"kernel not PSD enough: clipped mass {clip_mass:.3e} from {int(clip.sum())} eigenvalues"
        )
    lam = np.where(clip, 0.0, lam)
    root = np.sqrt(lam)
    S = (Q * root) @ Q.T
    S = 0.5 * (S + S.T)
    Wc = (Q * lam) @ Q.T
    Wc = 0.5 * (Wc + Wc.T)
    S.setflags(write=False)
    Wc.setflags(write=False)
    return SqrtKernel(S, int(clip.sum()), clip_mass, Wc)


def hartree_energy(density: np.ndarray, kernel: InteractionKernel) -> float:
    """``E_H = 1/2 ∬ rho(x) w(x-y) rho(y)`` with ``rho`` given as grid values.

    In the weight convention this is ``0.5 * dx * rho @ W @ rho``.
    """
    rho = np.asarray(density, dtype=float)
    if rho.shape != (kernel.n,):
        raise ConfigError(f"density of shape {rho.shape} does not match kernel of size {kernel.n}")
    if rho.size and rho.min() < -1e-12:
        raise ConfigError(f"density has negative entries (min {rho.min():.3e})")
    return float(0.5 * kernel.spacing * rho @ (kernel.W @ rho))


def exchange_energy(orbitals: np.ndarray, kernel: InteractionKernel) -> float:
    """Spin-summed exact exchange for doubly occupied spatial orbitals.

    ``E_x = - sum_ij ∬ phi_i phi_j (x) w(x-y) phi_i phi_j (y)``.
    """
    phi = np.asarray(orbitals, dtype=float)
    if phi.ndim == 1:
        phi = phi[:, None]
    dx = kernel.spacing
    ov = dx * phi.T @ phi
    if not np.allclose(ov, np.eye(phi.shape[1]), rtol=0, atol=1e-10):
        raise ConfigError("exchange_energy needs orthonormal orbitals")
    total = 0.0
    for i in range(phi.shape[1]):
        p = phi[:, i : i + 1] * phi  # all pair densities phi_i phi_j
        total += float(np.sum(p * (kernel.W @ p)))
    return -dx * total


def pair_hs_norm(phi_j: np.ndarray, phi_k: np.ndarray, kernel: InteractionKernel) -> float:
    """Hilbert-Schmidt norm of the integral operator with kernel ``phi_j(x) w(x-y) phi_k(y)``."""
    A = phi_j[:, None] * kernel.W * phi_k[None, :]
    return float(np.linalg.norm(A))
