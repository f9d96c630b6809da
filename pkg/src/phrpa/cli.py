"""Command-line entry point: ``phrpa {curve,split,verify,oracle}``.

Exit codes
----------
0  success
1  ``verify`` ran but at least one check failed
2  invalid configuration or command line
3  numerical failure (closed gap, kernel not PSD, solver did not converge,
   splitting residual above tolerance)
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path
from typing import Sequence

from .config import RunConfig, load_config
from .errors import ConfigError, NumericalError

__all__ = ["main", "build_parser", "CURVE_HEADER", "SPLIT_HEADER", "ORACLE_HEADER"]

CURVE_HEADER = ["R", "E_kin_ext", "E_H", "E_x", "E_rhf", "E_c_phrpa", "E_total", "gap", "twoE_H_ref", "delta_phrpa", "delta_rhf"]
SPLIT_HEADER = ["R", "term1", "term2", "term3", "direct_Ec", "residual"]
ORACLE_HEADER = ["R", "E0_exact", "two_eps0", "gap_to_limit", "lower_bound_ok"]

EXIT_OK, EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    # repr of a Python float is the shortest string that round-trips
    return repr(float(v))


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _write_json(path: Path, payload: dict) -> None:
    with path.open("w", newline="\n") as fh:
        json.dump(payload, fh, indent=2, allow_nan=False)
        fh.write("\n")


def _records(header: list[str], rows: list[list]) -> list[dict]:
    return [{k: (v if isinstance(v, bool) else float(v)) for k, v in zip(header, row)} for row in rows]


# --------------------------------------------------------------------------- commands


def cmd_curve(cfg: RunConfig, out: Path) -> int:
    from .energy import Model, dissociation_curve

    model = Model.from_config(cfg)
    curve = dissociation_curve(cfg.ladder.R_values, model)
    ref = curve.twoE_H
    rows = []
    for r, dp, dr in zip(curve.rows, curve.delta_phrpa, curve.delta_rhf):
        rows.append([r.R, r.E_kin_ext, r.E_H, r.E_x, r.E_rhf, r.E_c, r.E_total, r.gap, ref, dp, dr])
    _write_csv(out / "curve.csv", CURVE_HEADER, rows)
    atom = curve.atom
    _write_json(out / "curve.json", {
        "columns": CURVE_HEADER,
        "rows": _records(CURVE_HEADER, rows),
        "E_nn": [float(r.E_nn) for r in curve.rows],
        "quadrature_refinement": [r.correlation.refinement_residual for r in curve.rows],
        "atom": {"E_one_body": atom.E_kin_ext, "E_c": atom.E_c, "E_total": atom.E_total, "eps0": atom.eps0,
                 "gap": atom.gap, "quadrature_refinement": atom.correlation.refinement_residual},
        "rhf_limit_constant": curve.rhf_constant,
        "config": cfg.model_dump(mode="json"),
    })
    return EXIT_OK


def cmd_split(cfg: RunConfig, out: Path) -> int:
    from .energy import Model, h2_system, validate_ladder
    from .splitting import split_correlation

    model = Model.from_config(cfg)
    Rs = validate_ladder(cfg.ladder.R_values, model.grid)
    fault = cfg.debug.fault_prefactor
    rows, extra = [], []
    for R in Rs:
        _, es = h2_system(model, R)
        sb = split_correlation(
            es, model.sqrt_kernel, f_occ=4.0, direct_f_occ=fault, threads=model.threads,
            n_nodes=model.n_nodes, scale=model.scale, R=R, strict=fault is None,
        )
        rows.append([R, sb.term1, sb.term2, sb.term3, sb.direct_Ec, sb.residual])
        extra.append({"R": R, "gap": sb.gap, "nodes": sb.n_nodes})
    _write_csv(out / "split.csv", SPLIT_HEADER, rows)
    tol = cfg.tolerances.residual
    worst = max(r[-1] for r in rows)
    _write_json(out / "split.json", {
        "columns": SPLIT_HEADER,
        "rows": _records(SPLIT_HEADER, rows),
        "quadrature": extra,
        "residual_tolerance": tol,
        "config": cfg.model_dump(mode="json"),
    })
    if not worst <= tol:
        print(f"error: splitting residual {worst:.3e} exceeds {tol:.1e}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_verify(cfg: RunConfig, out: Path) -> int:
    from .checks import run_checks

    results = run_checks(cfg)
    payload = {name: r.as_dict() for name, r in results.items()}
    _write_json(out / "verify.json", payload)
    failed = [n for n, r in results.items() if not r.passed]
    for name, r in results.items():
        print(f"{'PASS' if r.passed else 'FAIL'} {name}: value={r.value!r} tolerance={r.tolerance!r}")
    return EXIT_CHECK_FAILED if failed else EXIT_OK


def cmd_oracle(cfg: RunConfig, out: Path) -> int:
    from .grid import PotentialSpec, build_grid
    from .interaction import interaction_matrix, kernel_sqrt
    from .twoelectron import build_two_electron_hamiltonian, ground_state, nbody_dissociation_report, pair_trace_identity_check

    oc = cfg.oracle
    ic = cfg.interaction
    pot = PotentialSpec(cfg.potential.kind, cfg.potential.charge, cfg.potential.softening, 0.0)
    grid = build_grid(oc.grid.half_extent, oc.grid.n_points)
    report = nbody_dissociation_report(
        oc.R_values, grid, pot, ic.softening,
        interaction_scale=ic.scale, nuclear_repulsion=cfg.nuclear_repulsion, tol=oc.tol,
    )
    rows = [[r.R, r.E0_exact, r.two_eps0, r.gap_to_limit, r.lower_bound_ok] for r in report]
    _write_csv(out / "oracle.csv", ORACLE_HEADER, rows)

    pgrid = build_grid(oc.pair_grid.half_extent, oc.pair_grid.n_points)
    H = build_two_electron_hamiltonian(pgrid, oc.pair_R, pot, ic.softening, ic.scale)
    st = ground_state(H, oc.tol)
    kernel = interaction_matrix(pgrid, ic.softening)
    if ic.scale != 1.0:
        kernel = kernel.scaled(ic.scale)
    pt = pair_trace_identity_check(st, kernel, kernel_sqrt(kernel))
    _write_json(out / "oracle.json", {
        "columns": ORACLE_HEADER,
        "rows": _records(ORACLE_HEADER, rows),
        "E_nn": [r.E_nn for r in report],
        "two_eps_molecule": [r.two_eps_molecule for r in report],
        "trial_energy": [r.trial_energy for r in report],
        "upper_bound_ok": [r.upper_bound_ok for r in report],
        "pair_identity_residual": pt.residual,
        "pair_identity": {"trace": pt.trace, "pair_integral": pt.pair_integral, "full_trace": pt.full_trace,
                          "R": oc.pair_R, "n_points": pgrid.n_points, "state_residual": st.residual},
        "config": cfg.model_dump(mode="json"),
    })
    return EXIT_OK


COMMANDS = {"curve": cmd_curve, "split": cmd_split, "verify": cmd_verify, "oracle": cmd_oracle}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="phrpa", description="phRPA correlation energies on 1D grid models.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", type=Path, default=None, help="JSON configuration file (defaults if omitted)")
    p.add_argument("--out", type=Path, default=Path("."), help="output directory (created if missing)")
    p.add_argument("--threads", type=int, default=None, help="worker threads over frequency nodes (default: all cores)")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config entry, e.g. --set ladder.R_values=[6,8]; repeatable")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        overrides = list(args.overrides)
        if args.threads is not None:
            overrides.append(f"threads={args.threads}")
        cfg = load_config(args.config, overrides)
        if cfg.threads is None:
            cfg = cfg.model_copy(update={"threads": os.cpu_count() or 1})
        args.out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](cfg, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
