"""Exact two-electron ground states and the pair-density trace identity."""

from __future__ import annotations

import numpy as np
import pytest
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from phrpa.errors import ConfigError
from phrpa.grid import PotentialSpec, atom_hamiltonian, build_grid, solve_eigensystem
from phrpa.interaction import interaction_matrix, kernel_sqrt
from phrpa.twoelectron import (
    build_two_electron_hamiltonian,
    ground_state,
    marginal_density,
    nbody_dissociation_report,
    pair_trace_identity_check,
    trial_state_energy,
)

POT = PotentialSpec()


@pytest.fixture(scope="module")
def oracle_grid():
    # spacing 0.4, the default oracle grid of the CLI
    return build_grid(45.2, 227)


@pytest.fixture(scope="module")
def ladder_rows(oracle_grid):
    return nbody_dissociation_report([6.0, 10.0, 20.0], oracle_grid, POT)


def _kron_oracle(grid, R, scale=1.0):
    """Full (unsymmetrised) n^2 Hamiltonian as a sparse Kronecker sum, lowest eigenvalue."""
    n = grid.n_points
    dx = grid.spacing
    x = grid.points
    centres = [0.0] if R == 0 else [R, -R]
    V = -sum(1.0 / np.sqrt((x - c) ** 2 + 1.0) for c in centres)
    h = sp.diags([np.full(n - 1, -0.5 / dx**2), 1.0 / dx**2 + V, np.full(n - 1, -0.5 / dx**2)], [-1, 0, 1])
    eye = sp.identity(n)
    w = scale / np.sqrt((x[:, None] - x[None, :]) ** 2 + 1.0)
    H = sp.kron(h, eye) + sp.kron(eye, h) + sp.diags(w.ravel())
    return float(spla.eigsh(H.tocsc(), k=1, sigma=-10.0, which="LM")[0][0])


def test_noninteracting_single_well_is_product():
    g = build_grid(10.0, 41)
    H = build_two_electron_hamiltonian(g, 0.0, POT, interaction_scale=0.0)
    st = ground_state(H)
    es = solve_eigensystem(atom_hamiltonian(g, POT))
    phi = es.vectors[:, 0]
    assert st.E0 == pytest.approx(2.0 * es.values[0], abs=1e-10)
    assert np.abs(st.psi - np.outer(phi, phi)).max() <= 1e-8


def test_interaction_diagonal():
    g = build_grid(5.0, 11)
    H = build_two_electron_hamiltonian(g, 0.0, POT, interaction_softening=0.5)
    assert np.allclose(np.diag(H.w), 2.0, rtol=0, atol=1e-15)


def test_dense_and_lanczos_agree():
    g = build_grid(10.0, 41)
    H = build_two_electron_hamiltonian(g, 2.0, POT)
    a = ground_state(H, dense=True)
    b = ground_state(H, dense=False)
    assert a.E0 == pytest.approx(b.E0, abs=1e-9)
    assert np.abs(a.psi - b.psi).max() <= 1e-6


@pytest.mark.parametrize("R", [0.0, 1.2, 4.0])
def test_against_kronecker_oracle(R):
    g = build_grid(10.0, 51)
    st = ground_state(build_two_electron_hamiltonian(g, R, POT))
    assert st.E0 == pytest.approx(_kron_oracle(g, R), abs=1e-9)


def test_state_symmetry_norm_and_marginal():
    g = build_grid(10.0, 51)
    st = ground_state(build_two_electron_hamiltonian(g, 1.2, POT))
    assert st.asymmetry <= 1e-12
    assert st.norm == pytest.approx(1.0, abs=1e-12)
    assert g.spacing * marginal_density(st).sum() == pytest.approx(2.0, abs=1e-12)
    assert st.residual <= 1e-8


def test_pair_trace_noninteracting_is_twice_J():
    g = build_grid(10.0, 41)
    st = ground_state(build_two_electron_hamiltonian(g, 0.0, POT, interaction_scale=0.0))
    k = interaction_matrix(g, 1.0)
    phi = solve_eigensystem(atom_hamiltonian(g, POT)).vectors[:, 0]
    J = g.spacing * (phi * phi) @ k.W @ (phi * phi)
    rep = pair_trace_identity_check(st, k, kernel_sqrt(k))
    assert rep.pair_integral == pytest.approx(2.0 * J, rel=1e-8)
    assert rep.residual <= 1e-8


def test_pair_trace_zero_kernel():
    g = build_grid(10.0, 41)
    st = ground_state(build_two_electron_hamiltonian(g, 1.0, POT))
    z = interaction_matrix(g, 1.0).scaled(0.0)
    rep = pair_trace_identity_check(st, z, kernel_sqrt(z.W))
    assert rep.trace == 0.0 and rep.pair_integral == 0.0 and rep.residual == 0.0


def test_pair_trace_interacting():
    g = build_grid(10.0, 101)
    st = ground_state(build_two_electron_hamiltonian(g, 1.0, POT))
    k = interaction_matrix(g, 1.0)
    rep = pair_trace_identity_check(st, k, kernel_sqrt(k))
    assert rep.residual <= 1e-8
    with pytest.raises(ConfigError):
        pair_trace_identity_check(st, interaction_matrix(build_grid(10.0, 41), 1.0), kernel_sqrt(k))


def test_bounds_and_approach_to_limit(ladder_rows):
    for row in ladder_rows:
        assert row.lower_bound_ok and row.upper_bound_ok
    gaps = [r.gap_to_limit for r in ladder_rows]
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[2] < 1e-6


def test_nuclear_repulsion_follows_interaction_scale(oracle_grid):
    g = build_grid(15.0, 61)
    rows = nbody_dissociation_report([4.0], g, POT, interaction_scale=0.0)
    r = rows[0]
    assert r.E_nn == 0.0
    # without interaction the exact energy is the doubly filled two-well level
    assert r.E0_exact == pytest.approx(r.two_eps_molecule, abs=1e-10)


def test_trial_energy_upper_bound():
    g = build_grid(15.0, 61)
    H = build_two_electron_hamiltonian(g, 4.5, POT)
    phi = solve_eigensystem(atom_hamiltonian(g, POT)).vectors[:, 0]
    assert ground_state(H).E0 <= trial_state_energy(H, phi) + 1e-12


def test_single_point_and_errors():
    g = build_grid(15.0, 61)
    assert len(nbody_dissociation_report([3.0], g, POT)) == 1
    with pytest.raises(ConfigError):
        nbody_dissociation_report([], g, POT)
    with pytest.raises(ConfigError):
        build_two_electron_hamiltonian(build_grid(50.0, 401), 0.0, POT)
    with pytest.raises(ConfigError):
        build_two_electron_hamiltonian(g, 0.0, POT, interaction_softening=0.0)
