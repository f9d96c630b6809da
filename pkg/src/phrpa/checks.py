"""Property suite behind ``phrpa verify``.

Every check returns a :class:`CheckResult` with a pass flag, the measured
value and the tolerance it was compared with.  Randomised sweeps draw from a
single ``numpy.random.Generator`` seeded from the configuration, so two runs
with the same configuration produce identical numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .config import RunConfig
from .energy import GramChannels, Model, correlation_energy, h2_system, map_nodes, trace_log_from_eigenvalues
from .grid import atom_hamiltonian, build_grid, solve_eigensystem
from .interaction import interaction_matrix, kernel_sqrt
from .quadrature import rational_gauss_legendre
from .response import chi0_frequency_integral, chi0_resolvent, chi0_spectral
from .splitting import (
    SplitChannels,
    log_identity_check,
    log_lemma_check,
    rank1_logdet_identity,
    residue_closed_form,
    residue_numeric,
    sherman_morrison_resolvent,
    split_correlation,
    trace_difference,
)
from .twoelectron import build_two_electron_hamiltonian, ground_state, pair_trace_identity_check

__all__ = ["CheckResult", "VerifyContext", "CHECKS", "run_checks", "hs_profile", "fit_hs_constant"]

#: Operational meaning of "finite" for the empirical log-lemma constant.
LOG_LEMMA_CAP = 1e6
#: Pairs used by the residue check.
RESIDUE_GRID = [(g, c) for g in (1.0, 1e-1, 1e-3) for c in (0.5, 1.0, 5.0)]
RANK1_ALPHAS = (0.0, 0.5, 5.0)
LOG_IDENTITY_T = (-0.9, 0.0, 1.0, 10.0)


@dataclass(frozen=True)
class CheckResult:
    passed: bool
    value: float
    tolerance: float
    details: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        out = {"pass": bool(self.passed), "value": float(self.value), "tolerance": float(self.tolerance)}
        if self.details:
            out["details"] = self.details
        return out


class VerifyContext:
    """Lazily built systems shared between checks."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.rng = np.random.default_rng(cfg.seed)
        self.fault = cfg.debug.fault_prefactor
        self.model = Model.from_config(cfg)
        self._cache: dict = {}

    def _get(self, key, make):
        if key not in self._cache:
            self._cache[key] = make()
        return self._cache[key]

    @property
    def atom(self):
        def make():
            h = atom_hamiltonian(self.model.grid, self.model.potential)
            return h, solve_eigensystem(h)

        return self._get("atom", make)

    def molecule(self, R: float):
        return self._get(("mol", R), lambda: h2_system(self.model, R))

    def spectral_f(self, f_true: float) -> tuple[float, bool]:
        """Prefactor for the spectral/direct side, with the fault hook applied."""
        if self.fault is None:
            return f_true, True
        return float(self.fault), False


# --------------------------------------------------------------------------- helpers


def hs_profile(gc: GramChannels, f_occ: float, omegas, threads: int | None = 1) -> np.ndarray:
    """``||M(w)||_HS`` at each frequency (from the Gram representation)."""
    omegas = np.asarray(omegas, dtype=float)

    def one(i):
        mu = np.linalg.eigvalsh(gc.reduced(f_occ, float(omegas[i])))
        return float(np.sqrt(np.sum(mu * mu)))

    return np.array(map_nodes(one, omegas.shape[0], threads))


def fit_hs_constant(omegas: np.ndarray, hs: np.ndarray, upper: float = 64.0) -> float:
    """Smallest ``C`` with ``hs(w) <= C / (1 + w)`` on the sampled ``w <= upper``."""
    omegas = np.asarray(omegas)
    sel = omegas <= upper
    return float(np.max(hs[sel] * (1.0 + omegas[sel])))


def _rel(a: np.ndarray, b: np.ndarray) -> float:
    nb = float(np.linalg.norm(b))
    return float(np.linalg.norm(a - b)) / nb if nb > 0 else float(np.linalg.norm(a))


def _random_psd(rng: np.random.Generator, n: int, scale: float = 1.0) -> np.ndarray:
    X = rng.standard_normal((n, n))
    A = X @ X.T / n
    return scale * 0.5 * (A + A.T)


# --------------------------------------------------------------------------- checks


def check_backend_equivalence(ctx: VerifyContext) -> CheckResult:
    cfg = ctx.cfg
    systems = [("H", 2.0, ctx.atom), (f"H2(R={cfg.verify.backend_R})", 4.0, ctx.molecule(cfg.verify.backend_R))]
    worst = 0.0
    per = {}
    for name, f, (h, es) in systems:
        fs, strict = ctx.spectral_f(f)
        for w in cfg.verify.backend_omegas:
            a = chi0_spectral(es, fs, w, strict=strict).matrix
            b = chi0_resolvent(h, es.occupied, es.values[: es.n_occ], f, w).matrix
            r = _rel(a, b)
            per[f"{name} w={w!r}"] = r
            worst = max(worst, r)
    tol = 1e-10
    return CheckResult(worst <= tol, worst, tol, per)


def _correlation_runs(ctx: VerifyContext):
    def make():
        h, es = ctx.atom
        _, es2 = ctx.molecule(ctx.cfg.verify.split_R)
        m = ctx.model
        out = {}
        for name, f, e in (("H", 2.0, es), (f"H2(R={ctx.cfg.verify.split_R})", 4.0, es2)):
            out[name] = (f, e, correlation_energy(e, m.sqrt_kernel, f, refine=False, threads=m.threads,
                                                  n_nodes=m.n_nodes, scale=m.scale))
        return out

    return ctx._get("corr", make)


def check_trace_log_sandwich(ctx: VerifyContext) -> CheckResult:
    worst = 0.0
    per = {}
    for name, (_, _, res) in _correlation_runs(ctx).items():
        v = res.sandwich_violation()
        per[name] = {"violation": v, "nodes": int(res.omega.shape[0])}
        worst = max(worst, v)
    return CheckResult(worst == 0.0, worst, 0.0, per)


def check_hs_decay_fit(ctx: VerifyContext) -> CheckResult:
    """Fit ``C`` on the ladder and all nodes in ``[0, 64]``; the bound must hold on every node."""
    ladder = np.asarray(ctx.cfg.verify.hs_ladder, dtype=float)
    worst = 0.0
    per = {}
    for name, (f, es, res) in _correlation_runs(ctx).items():
        gc = GramChannels(es, ctx.model.sqrt_kernel)
        hs_ladder = hs_profile(gc, f, ladder, ctx.model.threads)
        om = np.concatenate([ladder, res.omega])
        hs = np.concatenate([hs_ladder, res.hs_norm])
        C = fit_hs_constant(om, hs)
        ratio = float(np.max(hs * (1.0 + om)) / C)
        per[name] = {"C": C, "max_ratio": ratio, "largest_node": float(res.omega.max()),
                     "tail_product": float(res.hs_norm[-1] * (1.0 + res.omega[-1]))}
        ok = math.isfinite(C) and C > 0
        worst = max(worst, ratio if ok else float("inf"))
    tol = 1.0 + 1e-12
    return CheckResult(worst <= tol, worst, tol, per)


def check_sherman_morrison(ctx: VerifyContext) -> CheckResult:
    rng = ctx.rng
    worst = 0.0
    for _ in range(ctx.cfg.verify.sherman_morrison_trials):
        n = int(rng.integers(2, 17))
        A = _random_psd(rng, n)
        zeta = rng.standard_normal(n)
        alpha = float(rng.uniform(0.01, 5.0))
        # z in the left half plane or off the real axis keeps both inverses well defined
        z = complex(-rng.uniform(0.1, 2.0), rng.uniform(-2.0, 2.0))
        sm = sherman_morrison_resolvent(A, alpha, zeta, z)
        direct = np.linalg.inv(A + alpha * np.outer(zeta, zeta) - z * np.eye(n))
        worst = max(worst, _rel(sm, direct))
    tol = 1e-12
    return CheckResult(worst <= tol, worst, tol, {"trials": ctx.cfg.verify.sherman_morrison_trials})


def check_rank1_trace_log(ctx: VerifyContext) -> CheckResult:
    """Matrix determinant lemma on random PSD data and node by node on stretched H2."""
    rng = ctx.rng
    worst_random = 0.0
    for _ in range(ctx.cfg.verify.rank1_trials):
        n = int(rng.integers(2, 31))
        A = _random_psd(rng, n, float(rng.uniform(0.1, 3.0)))
        zeta = rng.standard_normal(n)
        for alpha in RANK1_ALPHAS:
            lhs, rhs = rank1_logdet_identity(A, alpha, zeta)
            worst_random = max(worst_random, abs(lhs - rhs) / max(1.0, abs(rhs)))
    R = ctx.cfg.verify.split_R
    _, es = ctx.molecule(R)
    f, strict = ctx.spectral_f(4.0)
    sc = SplitChannels(es, ctx.model.sqrt_kernel, 4.0)
    worst_node = 0.0
    for w in (0.0, sc.gap, 0.1, 1.0, 10.0):
        log_t, rem, _ = sc.node(w)
        direct = -np.linalg.eigvalsh(sc.full.reduced(f, w))
        d = trace_log_from_eigenvalues(direct)
        lhs = log_t + rem - sc.alpha(w) * sc.zeta_norm2
        worst_node = max(worst_node, abs(lhs - d) / max(1.0, abs(d)))
    worst = max(worst_random, worst_node)
    tol = 1e-10
    return CheckResult(worst <= tol, worst, tol, {"random": worst_random, "h2_nodes": worst_node})


def check_trace_difference(ctx: VerifyContext) -> CheckResult:
    _, es = ctx.molecule(ctx.cfg.verify.split_R)
    worst = 0.0
    for w in (0.0, 0.01, 1.0, 100.0):
        a, b = trace_difference(es, ctx.model.sqrt_kernel, w)
        worst = max(worst, abs(a - b) / max(abs(b), 1e-300))
    tol = 1e-10
    return CheckResult(worst <= tol, worst, tol)


def check_log_identity(ctx: VerifyContext) -> CheckResult:
    worst = 0.0
    for t in LOG_IDENTITY_T:
        _, _, err = log_identity_check(t)
        worst = max(worst, err)
    tol = 1e-8
    return CheckResult(worst <= tol, worst, tol)


def check_log_lemma_sweep(ctx: VerifyContext) -> CheckResult:
    rng = ctx.rng
    ratios = []
    for _ in range(ctx.cfg.verify.log_lemma_trials):
        n = int(rng.integers(2, 9))
        A = _random_psd(rng, n, float(rng.uniform(0.01, 3.0)))
        B = _random_psd(rng, n, float(rng.uniform(0.01, 3.0)))
        ratios.append(log_lemma_check(A, B))
    ratios = np.array(ratios)
    C = float(ratios.max())
    ok = bool(np.all(np.isfinite(ratios))) and C <= LOG_LEMMA_CAP
    return CheckResult(ok, C, LOG_LEMMA_CAP, {"empirical_constant": C, "median_ratio": float(np.median(ratios)),
                                              "trials": int(ratios.size)})


def check_residue_closed_form(ctx: VerifyContext) -> CheckResult:
    worst = 0.0
    per = {}
    for g, c in RESIDUE_GRID:
        exact = residue_closed_form(g, c)
        num = residue_numeric(g, c)
        r = abs(num - exact) / abs(exact)
        per[f"g={g!r},c={c!r}"] = r
        worst = max(worst, r)
    tol = 1e-6
    return CheckResult(worst <= tol, worst, tol, per)


def check_frequency_integral_identity(ctx: VerifyContext) -> CheckResult:
    _, es = ctx.atom
    rep = chi0_frequency_integral(es, 2.0, rational_gauss_legendre(128, ctx.model.scale))
    tol = 1e-6
    return CheckResult(rep.relative_deviation <= tol, rep.relative_deviation, tol, {"nodes": 128})


def check_pair_trace_identity(ctx: VerifyContext) -> CheckResult:
    oc = ctx.cfg.oracle
    grid = build_grid(oc.pair_grid.half_extent, oc.pair_grid.n_points)
    ic = ctx.cfg.interaction
    H = build_two_electron_hamiltonian(grid, oc.pair_R, ctx.model.potential, ic.softening, ic.scale)
    st = ground_state(H, oc.tol)
    kernel = interaction_matrix(grid, ic.softening)
    if ic.scale != 1.0:
        kernel = kernel.scaled(ic.scale)
    rep = pair_trace_identity_check(st, kernel, kernel_sqrt(kernel))
    tol = 1e-8
    return CheckResult(rep.residual <= tol, rep.residual, tol,
                       {"trace": rep.trace, "pair_integral": rep.pair_integral, "n_points": grid.n_points})


def check_splitting_identity(ctx: VerifyContext) -> CheckResult:
    R = ctx.cfg.verify.split_R
    _, es = ctx.molecule(R)
    f, strict = ctx.spectral_f(4.0)
    m = ctx.model
    sb = split_correlation(es, m.sqrt_kernel, f_occ=4.0, direct_f_occ=f, threads=m.threads,
                           n_nodes=m.n_nodes, scale=m.scale, R=R, strict=strict)
    tol = ctx.cfg.tolerances.residual
    return CheckResult(sb.residual <= tol, sb.residual, tol,
                       {"term1": sb.term1, "term2": sb.term2, "term3": sb.term3, "direct_Ec": sb.direct_Ec})


def check_quadrature_refinement(ctx: VerifyContext) -> CheckResult:
    _, es = ctx.atom
    m = ctx.model
    res = correlation_energy(es, m.sqrt_kernel, 2.0, refine=True, threads=m.threads, n_nodes=m.n_nodes, scale=m.scale)
    tol = ctx.cfg.tolerances.quad
    return CheckResult(res.refinement_residual <= tol, res.refinement_residual, tol, {"E_c": res.E_c})


CHECKS: dict[str, Callable[[VerifyContext], CheckResult]] = {
    "backend_equivalence": check_backend_equivalence,
    "trace_log_sandwich": check_trace_log_sandwich,
    "hs_decay_fit": check_hs_decay_fit,
    "sherman_morrison": check_sherman_morrison,
    "rank1_trace_log": check_rank1_trace_log,
    "trace_difference": check_trace_difference,
    "log_identity": check_log_identity,
    "log_lemma_sweep": check_log_lemma_sweep,
    "residue_closed_form": check_residue_closed_form,
    "frequency_integral_identity": check_frequency_integral_identity,
    "pair_trace_identity": check_pair_trace_identity,
    "splitting_identity": check_splitting_identity,
    "quadrature_refinement": check_quadrature_refinement,
}


def run_checks(cfg: RunConfig, names: list[str] | None = None) -> dict[str, CheckResult]:
    """Run the named checks (all by default) in a fixed order."""
    ctx = VerifyContext(cfg)
    selected = list(CHECKS) if names is None else names
    return {name: CHECKS[name](ctx) for name in selected}
