"""Uniform 1D grids, soft-Coulomb model potentials and one-body eigensystems.

All quantities are in Hartree atomic units.  Grid functions are stored as
plain value vectors; the discrete inner product is ``<f, g> = dx * sum(f * g)``
and orbitals are normalised with respect to it.

The eigensolver exploits mirror symmetry whenever the Hamiltonian is
parity-symmetric on a grid with a centre point.  For a symmetric double well
the two lowest levels become exponentially close, and plain subtraction of
eigenvalues loses every digit of the gap well before ``R = 20``.  The gap of
such a pair is recomputed from the discrete Wronskian identity, which is exact
for the finite-difference matrix and keeps full relative accuracy.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import ConfigError, NumericalError

__all__ = [
    "Grid",
    "PotentialSpec",
    "OneBodyMatrix",
    "EigenSystem",
    "GapReport",
    "LocalizationReport",
    "build_grid",
    "evaluate_potential",
    "build_one_body",
    "atom_hamiltonian",
    "molecule_hamiltonian",
    "solve_eigensystem",
    "solve_symmetric",
    "gap_report",
    "localization_report",
    "translate",
    "GAP_OPEN_TOL",
]

#: Threshold below which a gap obtained by eigenvalue subtraction counts as closed.
GAP_OPEN_TOL = 1e-14

#: Direct gaps below this value are recomputed with the Wronskian identity.
WRONSKIAN_SWITCH = 1e-4

# Relative tolerance for "R is an integer multiple of dx".
_ALIGN_TOL = 1e-8


@dataclass(frozen=True)
class Grid:
    """Uniform mesh on ``[-L, L]`` with ``n_points`` nodes.

    Points are generated as ``dx * (i - (n-1)/2)`` so that the mesh is exactly
    symmetric about the origin in floating point.
    """

    half_extent: float
    n_points: int
    points: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not np.isfinite(self.half_extent) or self.half_extent <= 0:
            raise ConfigError(f"half_extent must be positive, got {self.half_extent}")
        if int(self.n_points) != self.n_points or self.n_points < 3:
            raise ConfigError(f"n_points must be an integer >= 3, got {self.n_points}")
        object.__setattr__(self, "half_extent", float(self.half_extent))
        object.__setattr__(self, "n_points", int(self.n_points))
        pts = self.spacing * (np.arange(self.n_points) - 0.5 * (self.n_points - 1))
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_extent / (self.n_points - 1)

    @property
    def has_center(self) -> bool:
        """True when ``x = 0`` is a grid point (odd ``n_points``)."""
        return self.n_points % 2 == 1

    def shift_index(self, distance: float) -> int:
        """Return ``distance / dx`` as an integer, or raise if not grid-aligned."""
        ratio = distance / self.spacing
        k = int(round(ratio))
        if abs(ratio - k) > _ALIGN_TOL * max(1.0, abs(ratio)):
            raise ConfigError(
                f"R={distance} is not an integer multiple of the grid spacing {self.spacing}"
            )
        return k

    def same_as(self, other: "Grid") -> bool:
        return self.n_points == other.n_points and np.isclose(
            self.half_extent, other.half_extent, rtol=1e-14, atol=0.0
        )


def build_grid(half_extent: float, n_points: int) -> Grid:
    """Build the uniform grid with ``n_points`` nodes on ``[-half_extent, half_extent]``."""
    return Grid(half_extent, n_points)


@dataclass(frozen=True)
class PotentialSpec:
    """A single attractive well.

    ``soft-coulomb`` is ``-Z / sqrt((x-c)^2 + a^2)``; ``gaussian-well`` is the
    short-range ``-Z exp(-(x-c)^2 / (2 a^2))``.
    """

    kind: Literal["soft-coulomb", "gaussian-well"] = "soft-coulomb"
    charge: float = 1.0
    softening: float = 1.0
    center: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in ("soft-coulomb", "gaussian-well"):
            raise ConfigError(f"unknown potential kind {self.kind!r}")
        if not self.softening > 0:
            raise ConfigError(f"softening must be positive, got {self.softening}")
        if not (np.isfinite(self.charge) and np.isfinite(self.center)):
            raise ConfigError("charge and center must be finite")

    def moved(self, center: float) -> "PotentialSpec":
        return PotentialSpec(self.kind, self.charge, self.softening, center)


def evaluate_potential(grid: Grid, spec: PotentialSpec) -> np.ndarray:
    """Values of the well ``spec`` on ``grid``."""
    dx = grid.points - spec.center
    if spec.kind == "soft-coulomb":
        return -spec.charge / np.sqrt(dx * dx + spec.softening**2)
    return -spec.charge * np.exp(-0.5 * (dx / spec.softening) ** 2)


@dataclass(frozen=True)
class OneBodyMatrix:
    """Tridiagonal one-body Hamiltonian ``-1/2 Laplacian_FD + V`` (Dirichlet).

    The bands are the primary data; :attr:`matrix` materialises the dense form
    on demand.
    """

    grid: Grid
    potentials: tuple[PotentialSpec, ...]
    diagonal: np.ndarray = field(repr=False)
    offdiagonal: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.grid.n_points

    @property
    def matrix(self) -> np.ndarray:
        h = np.diag(self.diagonal)
        idx = np.arange(self.n - 1)
        h[idx, idx + 1] = self.offdiagonal
        h[idx + 1, idx] = self.offdiagonal
        return h

    @property
    def potential(self) -> np.ndarray:
        return self.diagonal - 1.0 / self.grid.spacing**2

    def apply(self, f: np.ndarray) -> np.ndarray:
        """Matrix-vector (or matrix-matrix along axis 0) product without densifying."""
        out = self.diagonal.reshape((-1,) + (1,) * (f.ndim - 1)) * f
        off = self.offdiagonal.reshape((-1,) + (1,) * (f.ndim - 1))
        out[:-1] += off * f[1:]
        out[1:] += off * f[:-1]
        return out

    def norm(self) -> float:
        """Cheap upper bound of the spectral norm (Gershgorin)."""
        off = np.abs(self.offdiagonal)
        row = np.abs(self.diagonal).copy()
        row[:-1] += off
        row[1:] += off
        return float(row.max())

    def is_parity_symmetric(self) -> bool:
        if not self.grid.has_center:
            return False
        scale = max(1.0, float(np.abs(self.diagonal).max()))
        return bool(
            np.allclose(self.diagonal, self.diagonal[::-1], rtol=0, atol=1e-14 * scale)
            and np.allclose(self.offdiagonal, self.offdiagonal[::-1], rtol=0, atol=1e-14 * scale)
        )


def build_one_body(grid: Grid, potentials: Sequence[PotentialSpec | np.ndarray]) -> OneBodyMatrix:
    """Assemble ``H = -1/2 L_FD + diag(sum of potentials)``.

    ``potentials`` may mix :class:`PotentialSpec` objects and precomputed
    value vectors; vectors must live on ``grid``.
    """
    dx = grid.spacing
    v = np.zeros(grid.n_points)
    specs: list[PotentialSpec] = []
    for p in potentials:
        if isinstance(p, PotentialSpec):
            v += evaluate_potential(grid, p)
            specs.append(p)
        else:
            arr = np.asarray(p, dtype=float)
            if arr.shape != (grid.n_points,):
                raise ConfigError(
                    f"potential vector of shape {arr.shape} does not match grid with {grid.n_points} points"
                )
            v += arr
    diag = v + 1.0 / dx**2
    off = np.full(grid.n_points - 1, -0.5 / dx**2)
    diag.setflags(write=False)
    off.setflags(write=False)
    return OneBodyMatrix(grid, tuple(specs), diag, off)


def atom_hamiltonian(grid: Grid, spec: PotentialSpec) -> OneBodyMatrix:
    """``h^(H)``: one well at the origin."""
    return build_one_body(grid, [spec.moved(0.0)])


def molecule_hamiltonian(grid: Grid, spec: PotentialSpec, R: float) -> OneBodyMatrix:
    """``h^(H2)``: identical wells at ``+R`` and ``-R`` (bond length ``2R``)."""
    grid.shift_index(R)
    return build_one_body(grid, [spec.moved(R), spec.moved(-R)])


@dataclass(frozen=True)
class EigenSystem:
    """Lowest eigenpairs of a one-body Hamiltonian.

    ``vectors[:, k]`` is normalised so that ``dx * sum(vectors[:, k]**2) == 1``.
    ``parity`` holds +1/-1 for sector-resolved states and 0 otherwise.
    ``refined`` lists triples ``(i, i+1, g)`` whose splitting ``g`` was
    recomputed from the Wronskian identity.  ``g`` can be far below the
    resolution of ``values`` and must be read through :meth:`excitation`.
    """

    values: np.ndarray
    vectors: np.ndarray
    n_occ: int
    spacing: float
    grid: Grid | None = None
    potentials: tuple[PotentialSpec, ...] = ()
    parity: np.ndarray | None = None
    refined: tuple[tuple[int, int, float], ...] = ()

    def __post_init__(self) -> None:
        vals = np.array(self.values, dtype=float)
        vecs = np.array(self.vectors, dtype=float)
        if vecs.ndim != 2 or vecs.shape[1] != vals.shape[0]:
            raise ValueError("vectors must be an (n, k) array matching the eigenvalues")
        if not 0 <= self.n_occ <= vals.shape[0]:
            raise ValueError(f"n_occ={self.n_occ} out of range")
        vals.setflags(write=False)
        vecs.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "vectors", vecs)
        if self.parity is not None:
            par = np.array(self.parity, dtype=int)
            par.setflags(write=False)
            object.__setattr__(self, "parity", par)

    @property
    def k(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.vectors.shape[0]

    @property
    def occupied(self) -> np.ndarray:
        return self.vectors[:, : self.n_occ]

    @property
    def virtual(self) -> np.ndarray:
        return self.vectors[:, self.n_occ :]

    def overlap(self) -> np.ndarray:
        return self.spacing * self.vectors.T @ self.vectors

    def residuals(self, h: OneBodyMatrix) -> np.ndarray:
        """``||h phi_k - eps_k phi_k||`` (discrete norm) for every stored pair."""
        r = h.apply(self.vectors.copy()) - self.vectors * self.values
        return np.sqrt(self.spacing * np.sum(r * r, axis=0))

    def excitation(self, lower: int, upper: int) -> float:
        """``eps[upper] - eps[lower]`` honouring refined splittings."""
        for i, j, g in self.refined:
            if (i, j) == (lower, upper):
                return g
            if (i, j) == (upper, lower):
                return -g
        return float(self.values[upper] - self.values[lower])

    def excitation_matrix(self, occ: np.ndarray, virt: np.ndarray) -> np.ndarray:
        """Differences ``eps[virt] - eps[occ]`` as an (len(occ), len(virt)) array."""
        occ = np.asarray(occ)
        virt = np.asarray(virt)
        d = self.values[virt][None, :] - self.values[occ][:, None]
        for i, j, g in self.refined:
            for a, b, sign in ((i, j, 1.0), (j, i, -1.0)):
                ia = np.nonzero(occ == a)[0]
                jb = np.nonzero(virt == b)[0]
                if ia.size and jb.size:
                    d[ia[0], jb[0]] = sign * g
        return d

    def is_complete(self) -> bool:
        return self.k == self.n


@dataclass(frozen=True)
class GapReport:
    gap: float
    is_open: bool
    refined: bool = False


def _fix_sign(vecs: np.ndarray) -> np.ndarray:
    idx = np.argmax(np.abs(vecs), axis=0)
    signs = np.sign(vecs[idx, np.arange(vecs.shape[1])])
    signs[signs == 0] = 1.0
    return vecs * signs


def solve_symmetric(matrix: np.ndarray, spacing: float = 1.0, n_occ: int = 1, k: int | None = None) -> EigenSystem:
    """Dense eigensolve of an arbitrary symmetric matrix (test matrices, toys)."""
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("matrix must be square")
    if not np.allclose(a, a.T, rtol=0, atol=1e-12 * max(1.0, np.abs(a).max())):
        raise ValueError("matrix must be symmetric")
    n = a.shape[0]
    k = n if k is None else k
    w, v = np.linalg.eigh(0.5 * (a + a.T))
    v = _fix_sign(v[:, :k]) / np.sqrt(spacing)
    return EigenSystem(w[:k], v, n_occ, spacing)


def _sector_eig(diag: np.ndarray, off: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    k = min(k, diag.shape[0])
    try:
        if k == diag.shape[0]:
            return eigh_tridiagonal(diag, off)
        return eigh_tridiagonal(diag, off, select="i", select_range=(0, k - 1))
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure path
        raise NumericalError(
            f"tridiagonal eigensolver failed (diag range [{diag.min():.3e}, {diag.max():.3e}]): {exc}"
        ) from exc


def _parity_solve(h: OneBodyMatrix, k: int):
    n = h.n
    m = n // 2
    d = np.asarray(h.diagonal)
    e = np.asarray(h.offdiagonal)
    # even sector: unknowns u_m..u_{n-1}, rescaled so the block is symmetric
    de = d[m:].copy()
    ee = e[m:].copy()
    ee[0] *= np.sqrt(2.0)
    we, ve = _sector_eig(de, ee, k)
    # odd sector: u_m = 0, unknowns u_{m+1}..u_{n-1}
    wo, vo = _sector_eig(d[m + 1 :].copy(), e[m + 1 :].copy(), k)

    def full_even(u):
        half = u[1:] / np.sqrt(2.0)
        return np.concatenate([half[::-1], u[:1], half])

    def full_odd(u):
        half = u / np.sqrt(2.0)
        return np.concatenate([-half[::-1], [0.0], half])

    vals = np.concatenate([we, wo])
    vecs = np.concatenate(
        [np.stack([full_even(ve[:, i]) for i in range(ve.shape[1])], axis=1),
         np.stack([full_odd(vo[:, i]) for i in range(vo.shape[1])], axis=1)],
        axis=1,
    )
    parity = np.concatenate([np.ones(we.shape[0], int), -np.ones(wo.shape[0], int)])
    order = np.argsort(vals, kind="stable")[:k]
    return vals[order], vecs[:, order], parity[order]


def _wronskian_gap(even: np.ndarray, odd: np.ndarray, offdiag: float) -> float:
    """Exact splitting ``eps_odd - eps_even`` of a mirror-symmetric FD pair.

    Both inputs are full-grid vectors; only the centre and the right half are
    used.  For rows ``j >= 1`` to the right of the centre both vectors obey the
    same three-term recurrence, and summing the cross products telescopes to
    ``(eps_e - eps_o) * sum_j u_j v_j = t * u_0 v_1`` with ``t`` the constant
    off-diagonal element.
    """
    m = even.shape[0] // 2
    u = even[m:]
    v = odd[m:]
    denom = float(np.dot(u[1:], v[1:]))
    if denom == 0.0:
        raise NumericalError("degenerate Wronskian denominator")
    return float(-offdiag * u[0] * v[1] / denom)


def solve_eigensystem(h: OneBodyMatrix, k: int | None = None, n_occ: int = 1) -> EigenSystem:
    """Lowest ``k`` eigenpairs of ``h`` (all of them when ``k`` is None).

    Eigenvectors are discrete-normalised and carry the sign convention
    "largest-magnitude component positive".
    """
    n = h.n
    k = n if k is None else int(k)
    if not 1 <= k <= n:
        raise ConfigError(f"k must lie in [1, {n}], got {k}")
    if not 0 <= n_occ <= k:
        raise ConfigError(f"n_occ={n_occ} exceeds the number of requested eigenpairs {k}")
    dx = h.grid.spacing
    refined: list[tuple[int, int, float]] = []
    if h.is_parity_symmetric():
        vals, vecs, parity = _parity_solve(h, k)
        off = float(h.offdiagonal[0])
        if np.allclose(h.offdiagonal, off, rtol=1e-14, atol=0):
            for i in range(k - 1):
                if parity[i] != parity[i + 1] and vals[i + 1] - vals[i] < WRONSKIAN_SWITCH:
                    ev, od = (i, i + 1) if parity[i] == 1 else (i + 1, i)
                    g = _wronskian_gap(vecs[:, ev], vecs[:, od], off)
                    lower, upper = (ev, od) if g >= 0 else (od, ev)
                    lo = min(vals[i], vals[i + 1])
                    # the splitting may be far below one ulp of the level itself,
                    # so it is stored separately and the pair is ordered by it
                    vecs[:, [i, i + 1]] = vecs[:, [lower, upper]]
                    parity[[i, i + 1]] = parity[[lower, upper]]
                    vals[i], vals[i + 1] = lo, lo + abs(g)
                    refined.append((i, i + 1, abs(g)))
    else:
        vals, vecs = _sector_eig(np.asarray(h.diagonal), np.asarray(h.offdiagonal), k)
        parity = np.zeros(k, int)
    vecs = _fix_sign(vecs) / np.sqrt(dx)
    return EigenSystem(vals, vecs, n_occ, dx, h.grid, h.potentials, parity, tuple(refined))


def gap_report(es: EigenSystem) -> GapReport:
    """HOMO-LUMO gap ``eps[n_occ] - eps[n_occ-1]``.

    A gap from plain subtraction is open when it exceeds ``GAP_OPEN_TOL``.  A
    Wronskian-refined gap carries full relative precision, so it is open as
    soon as it is strictly positive.
    """
    if es.k <= es.n_occ or es.n_occ < 1:
        raise ConfigError(
            f"gap needs at least n_occ+1={es.n_occ + 1} eigenvalues and n_occ >= 1 (have {es.k})"
        )
    i = es.n_occ - 1
    g = es.excitation(i, i + 1)
    refined = any((a, b) == (i, i + 1) for a, b, _ in es.refined)
    is_open = g > 0.0 if refined else g > GAP_OPEN_TOL
    return GapReport(g, bool(is_open), refined)


def translate(f: np.ndarray, shift: int) -> np.ndarray:
    """Shift a grid function by ``shift`` points (positive = to the right), zero fill."""
    out = np.zeros_like(f)
    if shift >= 0:
        out[shift:] = f[: f.shape[0] - shift]
    else:
        out[:shift] = f[-shift:]
    return out


@dataclass(frozen=True)
class LocalizationReport:
    R: float
    d0: float
    d1: float
    gap: float
    eps_shift: float
    supported: bool


def localization_report(es_h2: EigenSystem, es_h: EigenSystem, R: float) -> LocalizationReport:
    """Distances between molecular orbitals and bonding/antibonding atomic combinations."""
    if es_h2.grid is None or es_h.grid is None or not es_h2.grid.same_as(es_h.grid):
        raise ConfigError("localization_report needs both systems on the same grid")
    grid = es_h2.grid
    k = grid.shift_index(R)
    phi = es_h.vectors[:, 0]
    right, left = translate(phi, k), translate(phi, -k)
    dx = grid.spacing

    def dist(psi, ref):
        return min(np.sqrt(dx * np.sum((psi - s * ref) ** 2)) for s in (1.0, -1.0))

    soft = max((p.softening for p in es_h2.potentials), default=0.0)
    return LocalizationReport(
        R=float(R),
        d0=float(dist(es_h2.vectors[:, 0], (right + left) / np.sqrt(2.0))),
        d1=float(dist(es_h2.vectors[:, 1], (right - left) / np.sqrt(2.0))),
        gap=float(es_h2.excitation(0, 1)),
        eps_shift=float(abs(es_h.values[0] - es_h2.values[0])),
        supported=bool(R >= 2.0 * soft),
    )
