"""Shared fixtures.  Expensive systems are built once per session."""

from __future__ import annotations

import time

import numpy as np
import pytest

from phrpa.energy import Model, h2_system, total_energy_h
from phrpa.grid import atom_hamiltonian, solve_eigensystem
from phrpa.splitting import split_correlation

LADDER = (6.0, 8.0, 12.0, 16.0, 20.0)


@pytest.fixture(scope="session")
def model() -> Model:
    """Default discretisation: L = 45, n = 451 (dx = 0.2), a = b = 1, Z = 1."""
    return Model.build(threads=1)


@pytest.fixture(scope="session")
def small_model() -> Model:
    """Coarse model for quick property tests: L = 20, n = 101 (dx = 0.4)."""
    return Model.build(20.0, 101, threads=1)


@pytest.fixture(scope="session")
def atom(model):
    h = atom_hamiltonian(model.grid, model.potential)
    return h, solve_eigensystem(h)


@pytest.fixture(scope="session")
def atom_energy(model):
    return total_energy_h(model)


@pytest.fixture(scope="session")
def molecules(model):
    """``R -> (h, EigenSystem)`` for the ladder plus R = 2, 4 and 10."""
    return {R: h2_system(model, R) for R in (2.0, 4.0, 10.0) + LADDER}


@pytest.fixture(scope="session")
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def ladder_splits(model, molecules):
    """``(R -> SplitBreakdown, seconds)`` on the default ladder."""
    t0 = time.perf_counter()
    out = {R: split_correlation(molecules[R][1], model.sqrt_kernel, R=R) for R in LADDER}
    return out, time.perf_counter() - t0


# --------------------------------------------------------------------------- acceptance summary

ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, msg = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {msg}")
