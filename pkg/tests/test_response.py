"""Noninteracting response: spectral and resolvent backends, symmetrisation, frequency integral."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from phrpa.errors import ConfigError, GapClosedError
from phrpa.grid import PotentialSpec, atom_hamiltonian, build_grid, molecule_hamiltonian, solve_eigensystem, solve_symmetric
from phrpa.quadrature import rational_gauss_legendre
from phrpa.response import (
    chi0_frequency_integral,
    chi0_resolvent,
    chi0_spectral,
    middle_operator_norm,
    symmetrize,
)


@pytest.fixture(scope="module")
def toy():
    # eigenvalues 0 and 1, eigenvectors (1, -1)/sqrt2 and (1, 1)/sqrt2 on unit spacing
    return solve_symmetric(np.array([[0.5, 0.5], [0.5, 0.5]]), 1.0, n_occ=1)


@pytest.fixture(scope="module")
def grid50():
    g = build_grid(7.0, 51)
    h = atom_hamiltonian(g, PotentialSpec())
    return h, solve_eigensystem(h)


def _rel(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


def test_two_level_toy(toy):
    p = toy.vectors[:, 0] * toy.vectors[:, 1]
    chi = chi0_spectral(toy, 2.0, 0.0).matrix
    assert np.allclose(chi, -2.0 * np.outer(p, p), atol=1e-15)
    lam = np.linalg.eigvalsh(chi)
    assert lam[0] == pytest.approx(-2.0 * p @ p, rel=1e-14)
    assert abs(lam[1]) < 1e-15


def test_high_frequency_decay(atom):
    _, es = atom
    # excitations reach ~2/dx^2 = 50, so 1e4 is already in the 1/w^2 regime
    n1 = np.linalg.norm(chi0_spectral(es, 2.0, 1e4).matrix)
    n2 = np.linalg.norm(chi0_spectral(es, 2.0, 1e6).matrix)
    assert n2 / n1 == pytest.approx(1e-4, rel=1e-4)
    assert n2 <= np.linalg.norm(chi0_spectral(es, 2.0, 1.0).matrix) * 1e-9


@pytest.mark.parametrize("omega", [0.1, 1.0, 10.0])
def test_backends_agree_small_grid(grid50, omega):
    h, es = grid50
    a = chi0_spectral(es, 2.0, omega).matrix
    b = chi0_resolvent(h, es.occupied, es.values[:1], 2.0, omega).matrix
    assert _rel(a, b) <= 1e-10


@pytest.mark.parametrize("omega", [0.0, 0.5, 5.0])
def test_backends_agree_atom_and_molecule(atom, molecules, omega):
    for (h, es), f in ((atom, 2.0), (molecules[2.0], 4.0)):
        a = chi0_spectral(es, f, omega).matrix
        b = chi0_resolvent(h, es.occupied, es.values[: es.n_occ], f, omega).matrix
        assert _rel(a, b) <= 1e-10


def test_resolvent_multiple_occupied():
    g = build_grid(8.0, 81)
    h = molecule_hamiltonian(g, PotentialSpec(charge=2.0), 1.0)
    es = solve_eigensystem(h, n_occ=2)
    a = chi0_spectral(es, 4.0, 0.7).matrix
    b = chi0_resolvent(h, es.occupied, es.values[:2], 4.0, 0.7).matrix
    assert _rel(a, b) <= 1e-10


def test_prefactor_linearity(grid50):
    h, es = grid50
    a2 = chi0_resolvent(h, es.occupied, es.values[:1], 2.0, 0.3).matrix
    a4 = chi0_resolvent(h, es.occupied, es.values[:1], 4.0, 0.3).matrix
    assert np.array_equal(a4, 2.0 * a2)


def test_static_response_negative_semidefinite(grid50):
    h, es = grid50
    chi = chi0_resolvent(h, es.occupied, es.values[:1], 2.0, 0.0).matrix
    lam = np.linalg.eigvalsh(chi)
    assert np.all(np.isfinite(chi)) and lam.max() <= 1e-10 * abs(lam).max()


_EVEN_ES = solve_eigensystem(atom_hamiltonian(build_grid(7.0, 51), PotentialSpec()))


@settings(max_examples=20, deadline=None)
@given(st.floats(0.0, 100.0))
def test_evenness(omega):
    es = _EVEN_ES
    assert np.max(np.abs(chi0_spectral(es, 2.0, omega).matrix - chi0_spectral(es, 2.0, -omega).matrix)) <= 1e-14


def test_prefactor_whitelist(grid50):
    h, es = grid50
    with pytest.raises(ConfigError):
        chi0_spectral(es, 3.0, 1.0)
    with pytest.raises(ConfigError):
        chi0_resolvent(h, es.occupied, es.values[:1], 1.0, 1.0)
    # the fault-injection path bypasses the whitelist
    assert chi0_spectral(es, 3.0, 1.0, strict=False).f_occ == 3.0


def test_closed_gap_rejected():
    es = solve_symmetric(np.diag([1.0, 1.0, 2.0]), 1.0, n_occ=1)
    with pytest.raises(GapClosedError):
        chi0_spectral(es, 2.0, 1.0)


def test_symmetrize_trivial(grid50):
    _, es = grid50
    chi = chi0_spectral(es, 2.0, 1.0)
    m = symmetrize(chi, np.eye(es.n))
    assert np.allclose(m.matrix, chi.matrix, atol=1e-16)
    z = symmetrize(np.zeros((es.n, es.n)), np.eye(es.n))
    assert z.hs_norm == 0.0
    with pytest.raises(ConfigError):
        symmetrize(chi, np.eye(3))


def test_symmetrized_nonpositive_and_hs_product_bound(model, atom):
    _, es = atom
    S = model.sqrt_kernel.S
    phi0 = es.vectors[:, 0]
    dx = es.spacing
    # ||S D M D S||_F <= ||S D||_F ||M||_2 ||D S||_F, with ||M||_2 the middle factor norm
    SD = np.linalg.norm(S * phi0[None, :])
    for omega in (0.0, 0.3, 3.0, 30.0):
        m = symmetrize(chi0_spectral(es, 2.0, omega), model.sqrt_kernel)
        lam = np.linalg.eigvalsh(m.matrix)
        assert lam.max() <= 1e-10 * max(1.0, abs(lam).max())
        bound = 2.0 * dx * SD * middle_operator_norm(es, 0, omega) * SD
        assert m.hs_norm <= bound * (1 + 1e-12)


@pytest.mark.parametrize("omega", [0.5, 2.0, 20.0, 200.0])
def test_middle_operator_norm(atom, omega):
    _, es = atom
    # sup_l l / (l^2 + w^2) = 1 / (2 |w|); the bound applies above the gap
    assert middle_operator_norm(es, 0, omega) <= 1.0 / (2.0 * omega) + 1e-15


def test_frequency_integral_toy(toy):
    rep = chi0_frequency_integral(toy, 2.0, rational_gauss_legendre(128))
    p = toy.vectors[:, 0] * toy.vectors[:, 1]
    assert np.allclose(rep.numeric, -2.0 * np.pi * np.outer(p, p), atol=1e-12)
    assert rep.relative_deviation <= 1e-12


def test_frequency_integral_atom(atom):
    rep = chi0_frequency_integral(atom[1], 2.0, rational_gauss_legendre(128))
    assert rep.relative_deviation <= 1e-6


def test_frequency_integral_zero_prefactor(atom):
    rep = chi0_frequency_integral(atom[1], 0.0, rational_gauss_legendre(8))
    assert not rep.numeric.any() and rep.relative_deviation == 0.0


def test_backends_agree_on_stretched_molecule(molecules):
    # the static resolvent solve is conditioned like 1/gap (gap ~ 1e-4 at R = 6)
    h, es = molecules[6.0]
    a = chi0_spectral(es, 4.0, 0.0).matrix
    b = chi0_resolvent(h, es.occupied, es.values[:1], 4.0, 0.0).matrix
    assert _rel(a, b) <= 1e-9
