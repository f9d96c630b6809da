"""Noninteracting density response on the imaginary frequency axis.

Two independent constructions of the same matrix are provided:

* :func:`chi0_spectral` sums over occupied/virtual pairs of a full eigensystem;
* :func:`chi0_resolvent` applies ``P_k (h - e_k) / ((h - e_k)^2 + w^2) P_k`` to
  the columns of ``diag(phi_k)`` through real symmetric linear solves and never
  looks at virtual orbitals.

Matrices act on grid value vectors (integral-operator convention of
:mod:`phrpa.interaction`), so ``chi0 = -f dx sum c_jk p_jk p_jk^T`` with pair
products ``p_jk = phi_j * phi_k`` and ``c_jk = D / (D^2 + w^2)``,
``D = e_j - e_k``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import ConfigError, GapClosedError, NumericalError
from .grid import EigenSystem, OneBodyMatrix, gap_report
from .interaction import SqrtKernel
from .quadrature import FrequencyQuadrature

__all__ = [
    "ALLOWED_PREFACTORS",
    "ResponseMatrix",
    "SymmetrizedResponse",
    "SpectralChannels",
    "FrequencyIntegralReport",
    "chi0_spectral",
    "chi0_resolvent",
    "symmetrize",
    "chi0_frequency_integral",
    "middle_operator_norm",
]

#: 4 for doubly occupied molecular orbitals, 2 for the one-electron atomic reference.
ALLOWED_PREFACTORS = (2.0, 4.0)


def check_prefactor(f_occ: float, strict: bool = True, allow_zero: bool = False) -> float:
    f = float(f_occ)
    if not strict:
        return f
    if f in ALLOWED_PREFACTORS or (allow_zero and f == 0.0):
        return f
    raise ConfigError(f"f_occ must be one of {ALLOWED_PREFACTORS}, got {f_occ}")


def require_open_gap(es: EigenSystem) -> float:
    rep = gap_report(es)
    if not rep.is_open:
        raise GapClosedError(f"HOMO-LUMO gap is closed (g = {rep.gap:.3e})")
    return rep.gap


@dataclass(frozen=True)
class ResponseMatrix:
    matrix: np.ndarray = field(repr=False)
    omega: float
    f_occ: float


@dataclass(frozen=True)
class SymmetrizedResponse:
    matrix: np.ndarray = field(repr=False)
    omega: float
    hs_norm: float


class SpectralChannels:
    """Occupied-virtual pair products of an eigensystem, prepared once.

    Parameters
    ----------
    es : EigenSystem
        Eigenpairs; every stored state above ``n_occ`` is used as a virtual.
    skip_virtual : int, optional
        Number of lowest virtuals left out of the sum (used for the reduced
        response where ``psi_1`` has been split off).
    """

    def __init__(self, es: EigenSystem, skip_virtual: int = 0):
        occ = es.vectors[:, : es.n_occ]
        virt = es.vectors[:, es.n_occ + skip_virtual :]
        d = es.excitation_matrix(np.arange(es.n_occ), np.arange(es.n_occ + skip_virtual, es.k))
        self.products = (occ[:, :, None] * virt[:, None, :]).reshape(es.n, -1)
        self.excitations = d.reshape(-1)
        self.spacing = es.spacing

    def lorentz(self, omega: float) -> np.ndarray:
        d = self.excitations
        return d / (d * d + omega * omega)

    def chi(self, f_occ: float, omega: float) -> np.ndarray:
        p = self.products
        m = -f_occ * self.spacing * (p * self.lorentz(omega)) @ p.T
        return 0.5 * (m + m.T)


def chi0_spectral(es: EigenSystem, f_occ: float, omega: float, *, strict: bool = True) -> ResponseMatrix:
    """Spectral-sum response ``-f sum_{k occ, j virt} c_jk |phi_j phi_k><phi_j phi_k|``.

    ``strict=False`` disables the prefactor whitelist (fault injection only).
    """
    f = check_prefactor(f_occ, strict)
    require_open_gap(es)
    if es.k == es.n_occ:
        raise ConfigError("chi0_spectral needs virtual orbitals")
    return ResponseMatrix(SpectralChannels(es).chi(f, float(omega)), float(omega), f)


def chi0_resolvent(
    h: OneBodyMatrix,
    orbitals: np.ndarray,
    energies: np.ndarray,
    f_occ: float,
    omega: float,
    *,
    strict: bool = True,
) -> ResponseMatrix:
    """Resolvent-form response from occupied orbitals only.

    For each occupied ``k`` solves ``(h - e_k + u_k u_k^T - i w) X = P_k diag(phi_k)``
    and keeps ``Re X = (h - e_k) / ((h - e_k)^2 + w^2) P_k diag(phi_k)``.  The
    rank-one term (``u_k`` the Euclidean-normalised orbital) deflates the null
    direction at ``w = 0``; it leaves the solution unchanged because the
    right-hand side is orthogonal to ``u_k``.  Working with ``h - e_k`` rather
    than its square keeps the condition number at ``1/gap`` instead of
    ``1/gap^2``, which matters for stretched molecules.
    """
    f = check_prefactor(f_occ, strict)
    phi = np.asarray(orbitals, dtype=float)
    if phi.ndim == 1:
        phi = phi[:, None]
    eps = np.atleast_1d(np.asarray(energies, dtype=float))
    if phi.shape[1] != eps.shape[0]:
        raise ConfigError("one energy per occupied orbital is required")
    n = h.n
    dx = h.grid.spacing
    H = h.matrix
    eye = np.eye(n)
    chi = np.zeros((n, n))
    w = float(omega)
    for k in range(phi.shape[1]):
        pk = phi[:, k]
        u = pk * np.sqrt(dx)
        A = H - eps[k] * eye + np.outer(u, u)
        P = eye - np.outer(u, u)
        B = P * pk[None, :]
        if w != 0.0:
            A = A.astype(complex)
            A[np.diag_indices(n)] -= 1j * w
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("error", scipy.linalg.LinAlgWarning)
                X = scipy.linalg.solve(A, B, assume_a="sym").real
        except (np.linalg.LinAlgError, scipy.linalg.LinAlgWarning) as exc:
            raise NumericalError(f"singular resolvent solve for orbital {k} at omega={omega}: {exc}") from exc
        chi -= pk[:, None] * (P @ X)
    chi *= f
    return ResponseMatrix(0.5 * (chi + chi.T), float(omega), f)


def symmetrize(resp: ResponseMatrix | np.ndarray, sqrt_kernel: SqrtKernel | np.ndarray, omega: float | None = None) -> SymmetrizedResponse:
    """``M = S^T chi S`` with its Hilbert-Schmidt (Frobenius) norm."""
    chi = resp.matrix if isinstance(resp, ResponseMatrix) else np.asarray(resp, dtype=float)
    S = sqrt_kernel.S if isinstance(sqrt_kernel, SqrtKernel) else np.asarray(sqrt_kernel, dtype=float)
    if chi.shape != S.shape:
        raise ConfigError(f"dimension mismatch: chi {chi.shape} vs S {S.shape}")
    M = S.T @ chi @ S
    M = 0.5 * (M + M.T)
    w = resp.omega if isinstance(resp, ResponseMatrix) else (0.0 if omega is None else omega)
    return SymmetrizedResponse(M, float(w), float(np.linalg.norm(M)))


@dataclass(frozen=True)
class FrequencyIntegralReport:
    numeric: np.ndarray = field(repr=False)
    exact: np.ndarray = field(repr=False)
    relative_deviation: float


def chi0_frequency_integral(es: EigenSystem, f_occ: float, quadrature: FrequencyQuadrature) -> FrequencyIntegralReport:
    """Compare ``∫_R chi0(iw) dw`` by quadrature with its closed form.

    The closed form uses ``∫_R l / (l^2 + w^2) dw = pi sgn(l)`` applied through
    the full spectrum: ``-f pi sum_k diag(phi_k) P_k sgn(h - e_k) P_k diag(phi_k)``.
    Occupied-occupied terms appear there with both signs and cancel, which the
    quadrature side never sees, so the two sides are assembled differently.
    """
    f = check_prefactor(f_occ, allow_zero=True)
    n = es.n
    if f == 0.0:
        z = np.zeros((n, n))
        return FrequencyIntegralReport(z, z.copy(), 0.0)
    require_open_gap(es)
    if not es.is_complete():
        raise ConfigError("the closed form needs the full eigensystem")
    ch = SpectralChannels(es)
    numeric = 2.0 * sum(w * ch.chi(f, om) for om, w in zip(quadrature.omega, quadrature.weights))
    dx = es.spacing
    exact = np.zeros((n, n))
    for k in range(es.n_occ):
        sgn = np.sign(es.excitation_matrix(np.array([k]), np.arange(es.k))[0])
        q = es.vectors[:, k : k + 1] * es.vectors
        exact -= f * np.pi * dx * (q * sgn) @ q.T
    exact = 0.5 * (exact + exact.T)
    dev = float(np.linalg.norm(numeric - exact) / np.linalg.norm(exact))
    return FrequencyIntegralReport(numeric, exact, dev)


def middle_operator_norm(es: EigenSystem, k: int, omega: float) -> float:
    """``sup |l / (l^2 + w^2)|`` over ``l = e_j - e_k``, ``j != k`` (spectrum of the projected middle factor)."""
    lam = np.delete(es.values, k) - es.values[k]
    return float(np.max(np.abs(lam / (lam * lam + omega * omega))))
