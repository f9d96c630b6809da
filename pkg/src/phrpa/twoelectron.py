"""Exact two-electron singlet ground states on the product grid.

The spatial wavefunction of the singlet is symmetric, ``Psi(x, y) = Psi(y, x)``,
and is stored as an ``n x n`` array of grid values normalised by
``dx^2 sum Psi^2 = 1``.  The Hamiltonian

    H = h (x) 1 + 1 (x) h + w(x - y)

acts as ``h Psi + Psi h + w * Psi`` and never needs to be formed.  The
iterative solver works on the packed upper triangle (off-diagonal entries
weighted by sqrt(2)), which makes the operator symmetric on exactly the
``n(n+1)/2`` dimensional symmetric sector.  Near dissociation the triplet
becomes degenerate with the singlet; restricting the Krylov space to the
symmetric sector keeps the two from mixing.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse.linalg as spla

from .errors import ConfigError, ConvergenceError
from .grid import (
    Grid,
    OneBodyMatrix,
    PotentialSpec,
    atom_hamiltonian,
    build_one_body,
    solve_eigensystem,
    translate,
)
from .interaction import InteractionKernel, SqrtKernel, soft_coulomb

__all__ = [
    "SIZE_BUDGET",
    "DENSE_LIMIT",
    "TwoElectronHamiltonian",
    "TwoElectronState",
    "PairTraceReport",
    "NBodyRow",
    "build_two_electron_hamiltonian",
    "ground_state",
    "pair_density",
    "pair_trace_identity_check",
    "trial_state_energy",
    "nbody_dissociation_report",
]

SIZE_BUDGET = 100_000
DENSE_LIMIT = 60


@dataclass(frozen=True)
class TwoElectronHamiltonian:
    """Matrix-free two-electron Hamiltonian on one grid."""

    h: OneBodyMatrix
    w: np.ndarray = field(repr=False)
    R: float = 0.0

    @property
    def n(self) -> int:
        return self.h.n

    @property
    def grid(self) -> Grid:
        return self.h.grid

    @property
    def dim(self) -> int:
        return self.n * (self.n + 1) // 2

    def apply(self, psi: np.ndarray) -> np.ndarray:
        hp = self.h.apply(psi)
        return hp + hp.T + self.w * psi

    def expectation(self, psi: np.ndarray) -> float:
        dx = self.grid.spacing
        return float(dx * dx * np.sum(psi * self.apply(psi)) / (dx * dx * np.sum(psi * psi)))

    # packed symmetric-sector representation
    def _index(self):
        iu = np.triu_indices(self.n)
        wt = np.where(iu[0] == iu[1], 1.0, np.sqrt(2.0))
        return iu, wt

    def pack(self, psi: np.ndarray) -> np.ndarray:
        iu, wt = self._index()
        return psi[iu] * wt

    def unpack(self, v: np.ndarray) -> np.ndarray:
        iu, wt = self._index()
        m = np.zeros((self.n, self.n))
        m[iu] = v / wt
        return m + np.triu(m, 1).T

    def linear_operator(self) -> spla.LinearOperator:
        iu, wt = self._index()
        n = self.n

        def matvec(v):
            v = np.asarray(v).reshape(-1)
            m = np.zeros((n, n))
            m[iu] = v / wt
            m = m + np.triu(m, 1).T
            return self.apply(m)[iu] * wt

        return spla.LinearOperator((self.dim, self.dim), matvec=matvec, dtype=float)

    def dense_matrix(self) -> np.ndarray:
        op = self.linear_operator()
        return op.matmat(np.eye(self.dim))


def build_two_electron_hamiltonian(
    grid: Grid,
    R: float,
    potential: PotentialSpec,
    interaction_softening: float = 1.0,
    interaction_scale: float = 1.0,
) -> TwoElectronHamiltonian:
    """Two electrons in wells at ``+R`` and ``-R`` (one well when ``R = 0``)."""
    n = grid.n_points
    if n * n > SIZE_BUDGET:
        raise ConfigError(f"two-electron grid too large: n^2 = {n * n} exceeds {SIZE_BUDGET}")
    if not interaction_softening > 0:
        raise ConfigError("interaction softening must be positive")
    grid.shift_index(R)
    wells = [potential.moved(0.0)] if R == 0 else [potential.moved(R), potential.moved(-R)]
    h = build_one_body(grid, wells)
    x = grid.points
    w = interaction_scale * soft_coulomb(x[:, None] - x[None, :], interaction_softening)
    w.setflags(write=False)
    return TwoElectronHamiltonian(h, w, float(R))


@dataclass(frozen=True)
class TwoElectronState:
    E0: float
    psi: np.ndarray = field(repr=False)
    spacing: float
    residual: float
    iterations: int | None = None

    @property
    def norm(self) -> float:
        return float(np.sqrt(self.spacing**2 * np.sum(self.psi**2)))

    @property
    def asymmetry(self) -> float:
        return float(np.abs(self.psi - self.psi.T).max())


def _finish(H: TwoElectronHamiltonian, vec: np.ndarray, iterations: int | None) -> TwoElectronState:
    dx = H.grid.spacing
    psi = H.unpack(vec)
    psi /= dx * np.sqrt(np.sum(psi * psi))
    i = np.unravel_index(np.argmax(np.abs(psi)), psi.shape)
    if psi[i] < 0:
        psi = -psi
    hp = H.apply(psi)
    E = float(dx * dx * np.sum(psi * hp))
    r = hp - E * psi
    res = float(dx * np.sqrt(np.sum(r * r)))
    return TwoElectronState(E, psi, dx, res, iterations)


def ground_state(H: TwoElectronHamiltonian, tol: float = 1e-8, *, dense: bool | None = None, maxiter: int = 20000) -> TwoElectronState:
    """Lowest singlet eigenpair with Rayleigh residual at most ``tol``.

    Dense diagonalisation is used for ``n <= DENSE_LIMIT`` unless ``dense`` is
    given; otherwise implicitly restarted Lanczos starting from the
    noninteracting product state.
    """
    use_dense = H.n <= DENSE_LIMIT if dense is None else dense
    if use_dense:
        if H.n > 2 * DENSE_LIMIT:
            raise ConfigError("dense two-electron diagonalisation is limited to small grids")
        w, v = np.linalg.eigh(H.dense_matrix())
        state = _finish(H, v[:, 0], None)
    else:
        es = solve_eigensystem(H.h, k=1)
        phi = es.vectors[:, 0]
        v0 = H.pack(np.outer(phi, phi))
        counter = {"n": 0}
        op = H.linear_operator()

        def mv(v):
            counter["n"] += 1
            return op.matvec(v)

        op_counted = spla.LinearOperator(op.shape, matvec=mv, dtype=float)
        try:
            w, v = spla.eigsh(op_counted, k=1, which="SA", v0=v0, tol=1e-13, maxiter=maxiter, ncv=40)
        except spla.ArpackNoConvergence as exc:
            raise ConvergenceError(f"Lanczos did not converge within {maxiter} restarts") from exc
        state = _finish(H, v[:, 0], counter["n"])
    if state.residual > tol:
        raise ConvergenceError(f"two-electron residual {state.residual:.3e} exceeds tolerance {tol:.1e}")
    return state


def pair_density(state: TwoElectronState) -> np.ndarray:
    """``rho2(x, y) = |Psi(x, y)|^2`` (binomial(2, 2) = 1), Delta x^2-sum equal to one."""
    return state.psi**2


def marginal_density(state: TwoElectronState) -> np.ndarray:
    """``rho(x) = 2 ∫ rho2(x, y) dy``."""
    return 2.0 * state.spacing * pair_density(state).sum(axis=1)


@dataclass(frozen=True)
class PairTraceReport:
    trace: float
    pair_integral: float
    residual: float
    full_trace: float


def pair_trace_identity_check(state: TwoElectronState, kernel: InteractionKernel, sqrt_kernel: SqrtKernel) -> PairTraceReport:
    """Compare ``tr(S B*B S)`` with ``2 ∬ rho2 w`` for ``(B*B f)(x) = 2 ∫ f(y) rho2(x, y) dy``.

    ``full_trace`` is the same trace for the complete operator
    ``diag(rho) + 2 rho2 - |rho><rho|`` obtained without dropping terms; it is
    reported for information only.
    """
    dx = state.spacing
    rho2 = pair_density(state)
    if kernel.n != rho2.shape[0]:
        raise ConfigError("kernel and state live on different grids")
    S = sqrt_kernel.S
    BB = 2.0 * dx * rho2
    trace = float(np.sum((S @ BB) * S.T))
    # w(x_i - x_j) = W_ij / dx in the package weight convention
    pair = float(2.0 * dx * np.sum(rho2 * kernel.W))
    denom = max(abs(pair), abs(trace))
    residual = 0.0 if denom == 0.0 else abs(trace - pair) / denom
    rho = 2.0 * dx * rho2.sum(axis=1)
    full = BB + np.diag(rho) - dx * np.outer(rho, rho)
    full_trace = float(np.sum((S @ full) * S.T))
    return PairTraceReport(trace, pair, residual, full_trace)


def trial_state_energy(H: TwoElectronHamiltonian, phi_atom: np.ndarray) -> float:
    """Energy of the symmetrised product of atomic orbitals at ``+R`` and ``-R``."""
    k = H.grid.shift_index(H.R)
    a, b = translate(phi_atom, k), translate(phi_atom, -k)
    psi = np.outer(a, b) + np.outer(b, a)
    return H.expectation(psi)


@dataclass(frozen=True)
class NBodyRow:
    R: float
    E0_exact: float
    E_nn: float
    two_eps0: float
    two_eps_molecule: float
    trial_energy: float

    @property
    def gap_to_limit(self) -> float:
        return abs(self.E0_exact - self.two_eps0)

    @property
    def lower_bound_ok(self) -> bool:
        # electronic energy above the doubly filled noninteracting two-well level
        return self.E0_exact - self.E_nn >= self.two_eps_molecule - 1e-10

    @property
    def upper_bound_ok(self) -> bool:
        return self.E0_exact <= self.trial_energy + 1e-10


def nbody_dissociation_report(
    R_list: Sequence[float],
    grid: Grid,
    potential: PotentialSpec,
    interaction_softening: float = 1.0,
    *,
    interaction_scale: float = 1.0,
    nuclear_repulsion: bool = True,
    tol: float = 1e-8,
) -> list[NBodyRow]:
    """Exact ``E0(R)`` along a ladder with the bounds of the dissociation argument.

    ``E0_exact`` includes the nuclear repulsion when enabled; the lower bound is
    checked on the electronic part.
    """
    Rs = [float(r) for r in R_list]
    if not Rs:
        raise ConfigError("the R ladder is empty")
    es_atom = solve_eigensystem(atom_hamiltonian(grid, potential), k=1)
    phi = es_atom.vectors[:, 0]
    two_eps0 = 2.0 * float(es_atom.values[0])
    z2 = potential.charge**2
    rows = []
    for R in Rs:
        H = build_two_electron_hamiltonian(grid, R, potential, interaction_softening, interaction_scale)
        st = ground_state(H, tol)
        # same kernel as the electrons, so it follows the interaction scale
        e_nn = float(interaction_scale * z2 * soft_coulomb(2.0 * R, interaction_softening)) if nuclear_repulsion else 0.0
        e_mol = 2.0 * float(solve_eigensystem(H.h, k=1).values[0])
        trial = trial_state_energy(H, phi) + e_nn
        rows.append(NBodyRow(R, st.E0 + e_nn, e_nn, two_eps0, e_mol, trial))
    return rows
