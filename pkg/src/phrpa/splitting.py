"""Three-term decomposition of the H2 correlation energy and its lemmas.

With ``zeta = sqrt(dx) S (psi_1 psi_0)`` and ``g`` the HOMO-LUMO gap, the
symmetrised H2 response splits as

    -M(w) = K(w) + alpha(w) |zeta><zeta|,   alpha = f g / (g^2 + w^2),

where ``K`` collects every channel except ``psi_0 -> psi_1`` and is positive
semidefinite.  The matrix determinant lemma then gives, node by node,

    tr[log(1 - M) + M] = log(1 + alpha <zeta, (1+K)^-1 zeta>)
                         + tr[log(1 + K) - K] - alpha |zeta|^2,

and after the frequency integral ``(1/4pi) ∫_R`` the last piece is exactly
``-(f/4) |zeta|^2``.  The identity holds for any prefactor ``f`` provided the
same ``f`` multiplies ``alpha`` and ``K``; with ``f = 4`` this is the
``-|zeta|^2`` Hartree-like term.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.integrate

from .energy import GramChannels, map_nodes, trace_log_from_eigenvalues, clip_tolerance
from .errors import ConfigError, NumericalError
from .grid import EigenSystem, translate
from .interaction import InteractionKernel, SqrtKernel, pair_hs_norm
from .quadrature import FrequencyQuadrature, quadrature_for_gap
from .response import check_prefactor, require_open_gap

__all__ = [
    "SplittingBreakdown",
    "ProjectedChannel",
    "SplitChannels",
    "sherman_morrison_resolvent",
    "rank1_hartree_term",
    "log_rank1_term",
    "remainder_term",
    "split_correlation",
    "residue_closed_form",
    "residue_numeric",
    "build_K",
    "build_K_R",
    "remainder_vs_two_atoms",
    "RemainderComparison",
    "log_lemma_check",
    "rank1_logdet_identity",
    "log_identity_check",
    "trace_difference",
]


def _sym_log1p(X: np.ndarray) -> np.ndarray:
    lam, Q = np.linalg.eigh(0.5 * (X + X.T))
    return (Q * np.log1p(lam)) @ Q.T


# --------------------------------------------------------------------------- lemmas


def sherman_morrison_resolvent(A: np.ndarray, alpha: float, zeta: np.ndarray, z: complex) -> np.ndarray:
    """``(A + alpha |zeta><zeta| - z)^-1`` through the rank-one update formula.

    ``z`` must avoid the positive real axis, where the resolvent of a PSD
    matrix may not exist.  ``z = 0`` is accepted and fails only when ``A`` is
    singular.
    """
    z = complex(z)
    if z.imag == 0.0 and z.real > 0.0:
        raise ConfigError(f"z={z.real} lies on the positive real axis")
    A = np.asarray(A)
    zeta = np.asarray(zeta).reshape(-1)
    n = A.shape[0]
    dtype = complex if z.imag != 0.0 else float
    shifted = A.astype(dtype) - (z if dtype is complex else z.real) * np.eye(n)
    try:
        R0 = np.linalg.inv(shifted)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"A - z is singular at z={z}") from exc
    u = R0 @ zeta
    denom = 1.0 + alpha * (zeta @ u)
    return R0 - (alpha / denom) * np.outer(u, u)


def rank1_logdet_identity(A: np.ndarray, alpha: float, zeta: np.ndarray) -> tuple[float, float]:
    """Both sides of ``tr[log(1+A+alpha zz^T) - log(1+A)] = log(1 + alpha <z,(1+A)^-1 z>)``."""
    A = np.asarray(A, dtype=float)
    zeta = np.asarray(zeta, dtype=float)
    la = np.linalg.eigvalsh(A + alpha * np.outer(zeta, zeta))
    lb = np.linalg.eigvalsh(A)
    lhs = float(np.sum(np.log1p(la)) - np.sum(np.log1p(lb)))
    rhs = float(np.log1p(alpha * zeta @ np.linalg.solve(A + np.eye(A.shape[0]), zeta)))
    return lhs, rhs


def log_lemma_check(A: np.ndarray, B: np.ndarray) -> float:
    """``||log(1+A+B) - log(1+A) - log(1+B)|| / ||AB||`` in the operator norm.

    Returns 0 when the numerator vanishes and ``inf`` when only ``AB`` does.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    for name, X in (("A", A), ("B", B), ("A+B", A + B)):
        low = float(np.linalg.eigvalsh(0.5 * (X + X.T)).min())
        if low < -0.5 - 1e-12:
            raise ConfigError(f"spectrum of {name} reaches {low:.3f} < -1/2")
    num = float(np.linalg.norm(_sym_log1p(A + B) - _sym_log1p(A) - _sym_log1p(B), 2))
    den = float(np.linalg.norm(A @ B, 2))
    scale = max(1.0, float(np.linalg.norm(A, 2)), float(np.linalg.norm(B, 2)))
    if num <= 1e-13 * scale:
        return 0.0
    if den == 0.0:
        return float("inf")
    return num / den


def log_identity_check(t: float, T: float = 1e8) -> tuple[float, float, float]:
    """``∫_0^T [1/(1+s) - 1/(1+s+t)] ds`` plus its analytic tail, against ``log(1+t)``.

    Returns ``(numeric, tail, error)``.  The tail ``log((1+T+t)/(1+T))`` is
    bounded by ``|t| / (1+T)``.
    """
    if t <= -1:
        raise ConfigError("the identity needs t > -1")

    # substitute s = exp(u) - 1 so the integrand is smooth on a log scale
    def integrand(u):
        s = np.expm1(u)
        return np.exp(u) * (1.0 / (1.0 + s) - 1.0 / (1.0 + s + t))

    upper = np.log1p(T)
    pts = np.linspace(0.0, upper, 12)
    numeric = 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        val, _ = scipy.integrate.quad(integrand, a, b, epsabs=1e-14, epsrel=1e-13, limit=200)
        numeric += val
    tail = float(np.log1p(t / (1.0 + T)))
    return float(numeric), tail, float(abs(numeric + tail - np.log1p(t)))


def residue_closed_form(g: float, c: float) -> float:
    """``(1/2pi) ∫_R log(1 + c g / (g^2 + w^2)) dw = g (sqrt(1 + c/g) - 1)``."""
    if not g > 0:
        raise ConfigError(f"g must be positive, got {g}")
    if c < 0:
        raise ConfigError(f"c must be nonnegative, got {c}")
    # written to avoid cancellation when c << g
    return float(c / (np.sqrt(1.0 + c / g) + 1.0))


def residue_numeric(g: float, c: float) -> float:
    """Adaptive-quadrature value of ``(1/pi) ∫_0^inf log(1 + c g/(g^2+w^2)) dw``."""
    if not g > 0:
        raise ConfigError(f"g must be positive, got {g}")

    def f(w):
        return np.log1p(c * g / (g * g + w * w))

    knee = np.sqrt(g * (g + c))
    edges = [0.0, g, knee, 10.0 * knee]
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        if b > a:
            total += scipy.integrate.quad(f, a, b, epsabs=0.0, epsrel=1e-13, limit=200)[0]
    total += scipy.integrate.quad(f, edges[-1], np.inf, epsabs=0.0, epsrel=1e-13, limit=200)[0]
    return float(total / np.pi)


# --------------------------------------------------------------------------- splitting


@dataclass(frozen=True)
class SplittingBreakdown:
    R: float | None
    term1: float
    term2: float
    term3: float
    direct_Ec: float
    gap: float
    n_nodes: int

    @property
    def total(self) -> float:
        return self.term1 + self.term2 + self.term3

    @property
    def residual(self) -> float:
        return abs(self.total - self.direct_Ec)


class SplitChannels:
    """Precomputed pieces of the splitting for one H2 eigensystem.

    ``zeta`` is the ``psi_0 psi_1`` channel, ``reduced`` holds every other
    occupied/virtual channel (the operator ``K``), ``full`` all channels.
    """

    def __init__(self, es: EigenSystem, sqrt_kernel: SqrtKernel, f_occ: float = 4.0, *, strict: bool = True):
        if es.n_occ != 1:
            raise ConfigError("the splitting is defined for a single doubly occupied orbital")
        self.f = check_prefactor(f_occ, strict)
        self.gap = require_open_gap(es)
        if not es.is_complete():
            raise ConfigError("the splitting needs the full eigensystem")
        self.full = GramChannels(es, sqrt_kernel)
        self.reduced = GramChannels(es, sqrt_kernel, skip_virtual=1)
        self.zeta = self.full.Y[:, 0].copy()
        self.zeta_norm2 = float(self.zeta @ self.zeta)
        self.b = self.reduced.Y.T @ self.zeta

    def alpha(self, omega: float) -> float:
        g = self.gap
        return self.f * g / (g * g + omega * omega)

    def node(self, omega: float) -> tuple[float, float, float]:
        """``(log term, remainder term, direct integrand)`` at one frequency."""
        c = self.f * self.reduced.lorentz(omega)
        r = np.sqrt(c)
        A = r[:, None] * self.reduced.G * r[None, :]
        lam, Q = np.linalg.eigh(A)
        tol = clip_tolerance(float(np.abs(lam).max(initial=0.0)))
        if lam.size and lam.min() < -tol:
            raise NumericalError(f"K(w) has a negative eigenvalue {lam.min():.3e}")
        lam = np.maximum(lam, 0.0)
        proj = Q.T @ (r * self.b)
        inner = self.zeta_norm2 - float(np.sum(proj * proj / (1.0 + lam)))
        log_term = float(np.log1p(self.alpha(omega) * max(inner, 0.0)))
        remainder = float(np.sum(np.log1p(lam) - lam))
        mu = -np.linalg.eigvalsh(self.full.reduced(self.f, omega))
        direct = trace_log_from_eigenvalues(mu)
        return log_term, remainder, direct

    def inner_products(self, omega: float) -> float:
        """``<zeta, (1 + K(w))^-1 zeta>``."""
        c = self.f * self.reduced.lorentz(omega)
        r = np.sqrt(c)
        A = r[:, None] * self.reduced.G * r[None, :]
        rb = r * self.b
        return self.zeta_norm2 - float(rb @ np.linalg.solve(np.eye(A.shape[0]) + A, rb))


def rank1_hartree_term(es: EigenSystem, sqrt_kernel: SqrtKernel, f_occ: float = 4.0) -> float:
    """``-(f/4) |zeta|^2``, the frequency integral of ``-alpha |zeta|^2`` done analytically."""
    require_open_gap(es)
    f = check_prefactor(f_occ)
    p = es.vectors[:, 0] * es.vectors[:, 1]
    zeta = np.sqrt(es.spacing) * (sqrt_kernel.S @ p)
    return -0.25 * f * float(zeta @ zeta)


def split_correlation(
    es: EigenSystem,
    sqrt_kernel: SqrtKernel,
    quadrature: FrequencyQuadrature | None = None,
    *,
    f_occ: float = 4.0,
    direct_f_occ: float | None = None,
    threads: int | None = 1,
    n_nodes: int = 64,
    scale: float = 1.0,
    R: float | None = None,
    strict: bool = True,
) -> SplittingBreakdown:
    """All three terms and the direct ``E_c`` on one shared quadrature.

    ``direct_f_occ`` lets the direct evaluation use a different prefactor; it
    exists for fault injection and defaults to ``f_occ``.
    """
    sc = SplitChannels(es, sqrt_kernel, f_occ, strict=strict)
    quad = quadrature if quadrature is not None else quadrature_for_gap(sc.gap, n_nodes, scale)
    vals = np.array(map_nodes(lambda i: sc.node(float(quad.omega[i])), len(quad), threads))
    if direct_f_occ is not None and direct_f_occ != f_occ:
        other = GramChannels(es, sqrt_kernel)
        f2 = check_prefactor(direct_f_occ, strict)
        vals[:, 2] = [trace_log_from_eigenvalues(-np.linalg.eigvalsh(other.reduced(f2, float(w)))) for w in quad.omega]
    t2, t3, direct = (float(quad.integrate(vals[:, j]) / (2.0 * np.pi)) for j in range(3))
    t1 = -0.25 * sc.f * sc.zeta_norm2
    return SplittingBreakdown(R, t1, t2, t3, direct, sc.gap, len(quad))


def log_rank1_term(es: EigenSystem, sqrt_kernel: SqrtKernel, quadrature: FrequencyQuadrature | None = None, **kw) -> float:
    """``(1/4pi) ∫_R log(1 + alpha <zeta, (1+K)^-1 zeta>) dw``."""
    return split_correlation(es, sqrt_kernel, quadrature, **kw).term2


def remainder_term(es: EigenSystem, sqrt_kernel: SqrtKernel, quadrature: FrequencyQuadrature | None = None, **kw) -> float:
    """``(1/4pi) ∫_R tr[log(1 + K) - K] dw``."""
    return split_correlation(es, sqrt_kernel, quadrature, **kw).term3


def trace_difference(es: EigenSystem, sqrt_kernel: SqrtKernel, omega: float, f_occ: float = 4.0) -> tuple[float, float]:
    """``(tr(-M) - tr(K), alpha |zeta|^2)`` at one frequency; both must agree."""
    sc = SplitChannels(es, sqrt_kernel, f_occ)
    trM = float(np.trace(sc.full.M(sc.f, omega)))
    c = sc.f * sc.reduced.lorentz(omega)
    trK = float(np.sum(c * np.diag(sc.reduced.G)))
    return -trM - trK, sc.alpha(omega) * sc.zeta_norm2


# --------------------------------------------------------------------------- K and K_R


@dataclass(frozen=True)
class ProjectedChannel:
    """Projectors of the splitting and ``K(w)``, ``K_R(w)`` at one frequency."""

    P: np.ndarray = field(repr=False)
    Pi: np.ndarray = field(repr=False)
    K: np.ndarray = field(repr=False)
    K_R: np.ndarray = field(repr=False)
    omega: float = 0.0


def build_K(omega: float, es: EigenSystem, sqrt_kernel: SqrtKernel, f_occ: float = 4.0) -> np.ndarray:
    """``K(w) = f S psi_0 P g(h - e_0) P psi_0 S`` (all channels but ``psi_0 -> psi_1``)."""
    gc = GramChannels(es, sqrt_kernel, skip_virtual=1)
    K = (gc.Y * (f_occ * gc.lorentz(omega))) @ gc.Y.T
    return 0.5 * (K + K.T)


def _atomic_orbital(es_h: EigenSystem, es: EigenSystem, R: float, side: int) -> np.ndarray:
    if es.grid is None or es_h.grid is None or not es.grid.same_as(es_h.grid):
        raise ConfigError("atomic and molecular systems must share the grid")
    k = es.grid.shift_index(R)
    return translate(es_h.vectors[:, 0], side * k)


class _KRChannels:
    def __init__(self, es: EigenSystem, es_h: EigenSystem, sqrt_kernel: SqrtKernel, R: float, side: int):
        dx = es.spacing
        phi = _atomic_orbital(es_h, es, R, side)
        virt = es.vectors[:, 2:]
        # phi_R * (Pi_R psi_j) for j >= 2
        prod = phi[:, None] * (virt - np.outer(phi, dx * phi @ virt))
        self.Z = np.sqrt(dx) * (sqrt_kernel.S @ prod)
        self.G = self.Z.T @ self.Z
        self.G = 0.5 * (self.G + self.G.T)
        self.excitations = np.array([es.excitation(0, j) for j in range(2, es.k)])
        self.phi = phi

    def lorentz(self, omega):
        d = self.excitations
        return d / (d * d + omega * omega)

    def matrix(self, omega: float) -> np.ndarray:
        K = (self.Z * (2.0 * self.lorentz(omega))) @ self.Z.T
        return 0.5 * (K + K.T)

    def trace_log(self, omega: float) -> float:
        r = np.sqrt(2.0 * self.lorentz(omega))
        lam = np.linalg.eigvalsh(r[:, None] * self.G * r[None, :])
        lam = np.maximum(lam, 0.0)
        return float(np.sum(np.log1p(lam) - lam))


def build_K_R(omega: float, es: EigenSystem, es_h: EigenSystem, sqrt_kernel: SqrtKernel, R: float, side: int = 1) -> np.ndarray:
    """``K_R(w) = 2 S phi_R Pi_R P g(h - e_0) P Pi_R phi_R S`` for ``side = +1`` (``-1`` mirrors)."""
    if side not in (1, -1):
        raise ConfigError("side must be +1 or -1")
    return _KRChannels(es, es_h, sqrt_kernel, R, side).matrix(omega)


def projected_channel(omega: float, es: EigenSystem, es_h: EigenSystem, sqrt_kernel: SqrtKernel, R: float) -> ProjectedChannel:
    dx = es.spacing
    n = es.n
    P = np.eye(n) - dx * es.vectors[:, :2] @ es.vectors[:, :2].T
    phi = _atomic_orbital(es_h, es, R, 1)
    Pi = np.eye(n) - dx * np.outer(phi, phi)
    return ProjectedChannel(P, Pi, build_K(omega, es, sqrt_kernel), build_K_R(omega, es, es_h, sqrt_kernel, R, 1), omega)


@dataclass(frozen=True)
class RemainderComparison:
    R: float
    remainder: float
    two_KR: float
    two_Ec_H: float
    side_asymmetry: float
    cross_hs: float

    @property
    def a_minus_b(self) -> float:
        return abs(self.remainder - self.two_KR)

    @property
    def b_minus_c(self) -> float:
        return abs(self.two_KR - self.two_Ec_H)

    @property
    def a_minus_c_rel(self) -> float:
        return abs(self.remainder - self.two_Ec_H) / abs(self.two_Ec_H)


def remainder_vs_two_atoms(
    es: EigenSystem,
    es_h: EigenSystem,
    sqrt_kernel: SqrtKernel,
    kernel: InteractionKernel,
    R: float,
    E_c_H: float,
    quadrature: FrequencyQuadrature | None = None,
    *,
    remainder: float | None = None,
    threads: int | None = 1,
    n_nodes: int = 64,
    scale: float = 1.0,
) -> RemainderComparison:
    """Compare the remainder term with the ``K_R`` surrogate and with ``2 E_c(H)``."""
    gap = require_open_gap(es)
    quad = quadrature if quadrature is not None else quadrature_for_gap(gap, n_nodes, scale)
    if remainder is None:
        remainder = remainder_term(es, sqrt_kernel, quad, threads=threads)
    right = _KRChannels(es, es_h, sqrt_kernel, R, 1)
    left = _KRChannels(es, es_h, sqrt_kernel, R, -1)
    vr = np.array(map_nodes(lambda i: right.trace_log(float(quad.omega[i])), len(quad), threads))
    vl = np.array(map_nodes(lambda i: left.trace_log(float(quad.omega[i])), len(quad), threads))
    Ir = float(quad.integrate(vr) / (2.0 * np.pi))
    Il = float(quad.integrate(vl) / (2.0 * np.pi))
    cross = pair_hs_norm(right.phi, left.phi, kernel)
    return RemainderComparison(float(R), float(remainder), 2.0 * Ir, 2.0 * E_c_H, abs(Ir - Il), cross)
