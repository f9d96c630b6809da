"""phRPA correlation energy, total energies of H and H2, dissociation curves.

The correlation energy is

    E_c = (1/4pi) ∫_R tr[log(1 - M(w)) + M(w)] dw = (1/2pi) ∫_0^inf ... dw,

with ``M(w) = S chi0(iw) S``.  Writing ``M = -f Y diag(c) Y^T`` with
``Y = sqrt(dx) S [phi_k phi_j]`` (one column per occupied/virtual pair), the
nonzero eigenvalues of ``M`` are those of ``-f c^1/2 (Y^T Y) c^1/2``.  The Gram
matrix ``Y^T Y`` is formed once per system and each frequency costs a single
symmetric eigenvalue problem.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigError, NumericalError
from .grid import (
    EigenSystem,
    Grid,
    PotentialSpec,
    atom_hamiltonian,
    build_grid,
    gap_report,
    molecule_hamiltonian,
    solve_eigensystem,
)
from .interaction import (
    InteractionKernel,
    SqrtKernel,
    exchange_energy,
    hartree_energy,
    interaction_matrix,
    kernel_sqrt,
    soft_coulomb,
)
from .quadrature import FrequencyQuadrature, quadrature_for_gap
from .response import SpectralChannels, check_prefactor, require_open_gap

__all__ = [
    "EIG_CLIP_ABS",
    "clip_tolerance",
    "trace_log_term",
    "trace_log_from_eigenvalues",
    "GramChannels",
    "CorrelationResult",
    "correlation_energy",
    "Model",
    "EnergyBreakdown",
    "DissociationCurve",
    "total_energy_h",
    "total_energy_h2",
    "dissociation_curve",
    "map_nodes",
]

#: Absolute part of the tolerance for positive eigenvalues of ``M``.
EIG_CLIP_ABS = 1e-10
# Relative part, in units of machine epsilon times the spectral radius.
_EIG_CLIP_ULPS = 64.0


def clip_tolerance(scale: float) -> float:
    """Largest positive eigenvalue accepted as rounding noise of a NSD matrix of norm ``scale``."""
    return EIG_CLIP_ABS + _EIG_CLIP_ULPS * np.finfo(float).eps * scale


def trace_log_from_eigenvalues(mu: np.ndarray) -> float:
    """``sum log(1 - mu) + mu`` for eigenvalues ``mu <= 0`` of a NSD matrix."""
    mu = np.asarray(mu, dtype=float)
    if mu.size == 0:
        return 0.0
    tol = clip_tolerance(float(np.abs(mu).max()))
    top = float(mu.max())
    if top > tol:
        raise NumericalError(f"M has a positive eigenvalue {top:.3e} above tolerance {tol:.1e}")
    mu = np.minimum(mu, 0.0)
    return float(np.sum(np.log1p(-mu) + mu))


def trace_log_term(M: np.ndarray) -> float:
    """``tr[log(1 - M) + M]`` of a symmetric negative semidefinite matrix."""
    A = np.asarray(M, dtype=float)
    return trace_log_from_eigenvalues(np.linalg.eigvalsh(0.5 * (A + A.T)))


def map_nodes(func: Callable[[int], object], count: int, threads: int | None = 1) -> list:
    """Evaluate ``func(i)`` for ``i < count``, optionally on a thread pool, in order."""
    threads = 1 if threads is None else int(threads)
    if threads <= 1 or count <= 1:
        return [func(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, range(count)))


class GramChannels:
    """Pair channels ``Y = sqrt(dx) S [phi_k phi_j]`` and their Gram matrix.

    Parameters
    ----------
    es : EigenSystem
        Full eigensystem.
    sqrt_kernel : SqrtKernel
        Square root of the interaction.
    skip_virtual : int
        Lowest virtuals to leave out (the reduced response of the splitting).
    """

    def __init__(self, es: EigenSystem, sqrt_kernel: SqrtKernel, skip_virtual: int = 0):
        ch = SpectralChannels(es, skip_virtual)
        self.excitations = ch.excitations
        self.Y = np.sqrt(es.spacing) * (sqrt_kernel.S @ ch.products)
        self.G = self.Y.T @ self.Y
        self.G = 0.5 * (self.G + self.G.T)

    def lorentz(self, omega: float) -> np.ndarray:
        d = self.excitations
        return d / (d * d + omega * omega)

    def reduced(self, f_occ: float, omega: float) -> np.ndarray:
        """``f c^1/2 G c^1/2``; its spectrum is that of ``-M`` (plus zeros)."""
        r = np.sqrt(f_occ * self.lorentz(omega))
        return r[:, None] * self.G * r[None, :]

    def M(self, f_occ: float, omega: float) -> np.ndarray:
        m = -(self.Y * (f_occ * self.lorentz(omega))) @ self.Y.T
        return 0.5 * (m + m.T)


@dataclass(frozen=True)
class CorrelationResult:
    E_c: float
    omega: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    integrand: np.ndarray = field(repr=False)
    hs_norm: np.ndarray = field(repr=False)
    refinement_residual: float | None
    quadrature: FrequencyQuadrature = field(repr=False)

    def sandwich_violation(self) -> float:
        """Largest violation of ``-1/2 ||M||^2 <= integrand <= 0`` over the nodes (0 if none)."""
        lower = -0.5 * self.hs_norm**2
        slack = 1e-12 * np.maximum(1.0, np.abs(lower))
        below = np.maximum(lower - self.integrand - slack, 0.0)
        above = np.maximum(self.integrand - slack, 0.0)
        return float(max(below.max(initial=0.0), above.max(initial=0.0)))


def _node_values(gc: GramChannels, f_occ: float, omega: np.ndarray, threads: int | None):
    def one(i):
        mu = -np.linalg.eigvalsh(gc.reduced(f_occ, float(omega[i])))
        return trace_log_from_eigenvalues(mu), float(np.sqrt(np.sum(mu * mu)))

    vals = map_nodes(one, omega.shape[0], threads)
    return np.array([v[0] for v in vals]), np.array([v[1] for v in vals])


def correlation_energy(
    system: EigenSystem,
    sqrt_kernel: SqrtKernel,
    f_occ: float,
    quadrature: FrequencyQuadrature | None = None,
    *,
    refine: bool = True,
    threads: int | None = 1,
    strict: bool = True,
    n_nodes: int = 64,
    scale: float = 1.0,
) -> CorrelationResult:
    """phRPA correlation energy of a closed-shell one-body system.

    When ``quadrature`` is None the rule is chosen from the gap with
    :func:`quadrature_for_gap`.  With ``refine`` the calculation is repeated on
    the refined rule and the difference is reported.
    """
    f = check_prefactor(f_occ, strict)
    gap = require_open_gap(system)
    if not system.is_complete():
        raise ConfigError("correlation_energy needs the full eigensystem")
    quad = quadrature if quadrature is not None else quadrature_for_gap(gap, n_nodes, scale)
    gc = GramChannels(system, sqrt_kernel)
    integrand, hs = _node_values(gc, f, quad.omega, threads)
    E_c = float(quad.integrate(integrand) / (2.0 * np.pi))
    residual = None
    if refine:
        fine = quad.refined()
        fine_vals, _ = _node_values(gc, f, fine.omega, threads)
        residual = abs(float(fine.integrate(fine_vals) / (2.0 * np.pi)) - E_c)
    return CorrelationResult(E_c, quad.omega, quad.weights, integrand, hs, residual, quad)


@dataclass(frozen=True)
class Model:
    """Everything shared by the H and H2 calculations at one discretisation."""

    grid: Grid
    potential: PotentialSpec
    interaction_softening: float
    kernel: InteractionKernel = field(repr=False)
    sqrt_kernel: SqrtKernel = field(repr=False)
    n_nodes: int = 64
    scale: float = 1.0
    nuclear_repulsion: bool = True
    refine: bool = True
    threads: int | None = 1
    interaction_scale: float = 1.0

    @classmethod
    def build(
        cls,
        half_extent: float = 45.0,
        n_points: int = 451,
        charge: float = 1.0,
        softening: float = 1.0,
        interaction_softening: float = 1.0,
        *,
        kind: str = "soft-coulomb",
        interaction_scale: float = 1.0,
        n_nodes: int = 64,
        scale: float = 1.0,
        nuclear_repulsion: bool = True,
        refine: bool = True,
        threads: int | None = 1,
    ) -> "Model":
        grid = build_grid(half_extent, n_points)
        kernel = interaction_matrix(grid, interaction_softening)
        if interaction_scale != 1.0:
            kernel = kernel.scaled(interaction_scale)
        return cls(
            grid,
            PotentialSpec(kind, charge, softening, 0.0),
            float(interaction_softening),
            kernel,
            kernel_sqrt(kernel),
            n_nodes,
            scale,
            nuclear_repulsion,
            refine,
            threads if threads is not None else os.cpu_count() or 1,
            float(interaction_scale),
        )

    @classmethod
    def from_config(cls, cfg) -> "Model":
        """Build from a :class:`phrpa.config.RunConfig`."""
        return cls.build(
            cfg.grid.half_extent,
            cfg.grid.n_points,
            cfg.potential.charge,
            cfg.potential.softening,
            cfg.interaction.softening,
            kind=cfg.potential.kind,
            interaction_scale=cfg.interaction.scale,
            n_nodes=cfg.quadrature.n_nodes,
            scale=cfg.quadrature.scale,
            nuclear_repulsion=cfg.nuclear_repulsion,
            refine=cfg.quadrature.refine,
            threads=cfg.threads,
        )

    def nuclear_energy(self, R: float) -> float:
        """Repulsion of the two nuclei at separation ``2R`` through the same kernel as the electrons."""
        if not self.nuclear_repulsion:
            return 0.0
        z = self.potential.charge
        return float(self.interaction_scale * z * z * soft_coulomb(2.0 * R, self.interaction_softening))

    def correlation(self, es: EigenSystem, f_occ: float, quadrature=None, strict: bool = True) -> CorrelationResult:
        return correlation_energy(
            es, self.sqrt_kernel, f_occ, quadrature,
            refine=self.refine, threads=self.threads, strict=strict,
            n_nodes=self.n_nodes, scale=self.scale,
        )


@dataclass(frozen=True)
class EnergyBreakdown:
    E_kin_ext: float
    E_H: float
    E_x: float
    E_c: float
    E_nn: float = 0.0
    R: float | None = None
    gap: float = float("nan")
    eps0: float = float("nan")
    correlation: CorrelationResult | None = field(default=None, repr=False)
    system: EigenSystem | None = field(default=None, repr=False)

    @property
    def E_rhf(self) -> float:
        return self.E_kin_ext + self.E_H + self.E_x + self.E_nn

    @property
    def E_total(self) -> float:
        return self.E_rhf + self.E_c


def _rayleigh(h, phi: np.ndarray, dx: float) -> float:
    return float(dx * phi @ h.apply(phi.copy()))


def total_energy_h(model: Model, *, strict: bool = True, f_occ: float = 2.0) -> EnergyBreakdown:
    """``<phi_0, h phi_0> + E_c`` for the atom, with the two-fold prefactor."""
    h = atom_hamiltonian(model.grid, model.potential)
    es = solve_eigensystem(h, n_occ=1)
    corr = model.correlation(es, f_occ, strict=strict)
    e1 = _rayleigh(h, es.vectors[:, 0], es.spacing)
    return EnergyBreakdown(e1, 0.0, 0.0, corr.E_c, 0.0, None, gap_report(es).gap, float(es.values[0]), corr, es)


def h2_system(model: Model, R: float):
    h = molecule_hamiltonian(model.grid, model.potential, R)
    return h, solve_eigensystem(h, n_occ=1)


def rhf_parts(model: Model, h, es: EigenSystem) -> tuple[float, float, float]:
    """``(2<psi0,h psi0>, E_H[2|psi0|^2], E_x)`` for the doubly occupied ``psi0``."""
    psi = es.vectors[:, 0]
    e_one = 2.0 * _rayleigh(h, psi, es.spacing)
    e_h = hartree_energy(2.0 * psi * psi, model.kernel)
    e_x = exchange_energy(psi, model.kernel)
    return e_one, e_h, e_x


def total_energy_h2(R: float, model: Model, *, strict: bool = True, f_occ: float = 4.0, with_correlation: bool = True) -> EnergyBreakdown:
    """RHF energy of the doubly occupied bonding orbital plus ``E_c`` (prefactor 4)."""
    if R < 0:
        raise ConfigError("R must be nonnegative")
    h, es = h2_system(model, R)
    e_one, e_h, e_x = rhf_parts(model, h, es)
    corr = model.correlation(es, f_occ, strict=strict) if with_correlation else None
    return EnergyBreakdown(
        e_one, e_h, e_x, corr.E_c if corr else 0.0, model.nuclear_energy(R), float(R),
        gap_report(es).gap, float(es.values[0]), corr, es,
    )


@dataclass(frozen=True)
class DissociationCurve:
    rows: tuple[EnergyBreakdown, ...]
    atom: EnergyBreakdown
    rhf_constant: float

    @property
    def R(self) -> np.ndarray:
        return np.array([r.R for r in self.rows])

    @property
    def twoE_H(self) -> float:
        return 2.0 * self.atom.E_total

    @property
    def two_eps0(self) -> float:
        return 2.0 * self.atom.eps0

    @property
    def delta_phrpa(self) -> np.ndarray:
        return np.array([abs(r.E_total - self.twoE_H) for r in self.rows])

    @property
    def delta_rhf(self) -> np.ndarray:
        return np.array([abs(r.E_rhf - self.two_eps0) for r in self.rows])


def validate_ladder(R_list: Sequence[float], grid: Grid, margin: float = 25.0) -> list[float]:
    Rs = [float(r) for r in R_list]
    if not Rs:
        raise ConfigError("the R ladder is empty")
    if any(b <= a for a, b in zip(Rs, Rs[1:])):
        raise ConfigError(f"R values must be strictly increasing, got {Rs}")
    if Rs[0] < 0:
        raise ConfigError("R values must be nonnegative")
    for r in Rs:
        grid.shift_index(r)
    if grid.half_extent < Rs[-1] + margin:
        raise ConfigError(
            f"half_extent {grid.half_extent} must be at least max R + {margin} = {Rs[-1] + margin}"
        )
    return Rs


def dissociation_curve(R_list: Sequence[float], model: Model, *, strict: bool = True, h2_f_occ: float = 4.0) -> DissociationCurve:
    """Total energies along ``R_list`` and the atomic references.

    ``rhf_constant`` is the atomic self-Hartree integral ``1/2 ∬|phi0|^2 |phi0|^2 w``
    that RHF keeps at infinite separation.
    """
    Rs = validate_ladder(R_list, model.grid)
    atom = total_energy_h(model)
    phi = atom.system.vectors[:, 0]
    const = hartree_energy(phi * phi, model.kernel)
    rows = tuple(total_energy_h2(R, model, strict=strict, f_occ=h2_f_occ) for R in Rs)
    return DissociationCurve(rows, atom, const)
