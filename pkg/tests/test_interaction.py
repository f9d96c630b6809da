"""Interaction kernel, its square root, Hartree and exchange energies."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from phrpa.errors import ConfigError, KernelError
from phrpa.grid import build_grid
from phrpa.interaction import (
    exchange_energy,
    hartree_energy,
    interaction_matrix,
    kernel_from_points,
    kernel_sqrt,
    pair_hs_norm,
    soft_coulomb,
)


def test_two_point_kernel():
    k = kernel_from_points(np.array([0.0, 1.0]), 1.0, 1.0)
    assert np.allclose(k.W, [[1.0, 1 / np.sqrt(2)], [1 / np.sqrt(2), 1.0]], rtol=0, atol=1e-16)


@pytest.mark.parametrize("b", [0.5, 1.0, 2.0])
def test_diagonal_is_dx_over_b(b):
    g = build_grid(5.0, 51)
    k = interaction_matrix(g, b)
    assert np.allclose(np.diag(k.W), g.spacing / b, rtol=1e-15, atol=0)


def test_kernel_nearly_psd():
    g = build_grid(10.0, 201)
    lam = np.linalg.eigvalsh(interaction_matrix(g, 1.0).W)
    assert lam.min() >= -1e-10 * lam.max()


def test_bad_softening():
    with pytest.raises(ConfigError):
        interaction_matrix(build_grid(1.0, 3), 0.0)


def test_sqrt_of_identity_and_diagonal():
    assert np.allclose(kernel_sqrt(np.eye(4)).S, np.eye(4), atol=1e-15)
    s = kernel_sqrt(np.diag([4.0, 9.0]))
    assert np.allclose(s.S, np.diag([2.0, 3.0]), atol=1e-15)
    assert s.clip_count == 0 and s.clip_mass == 0.0


def test_sqrt_reconstructs_kernel(model):
    W = model.kernel.W
    S = model.sqrt_kernel.S
    assert np.linalg.norm(S @ S - W) / np.linalg.norm(W) <= 1e-10
    assert np.array_equal(S, S.T)
    assert np.linalg.norm(S @ S - model.sqrt_kernel.W_clipped) <= 1e-10 * np.linalg.norm(W)


def test_sqrt_rejects_indefinite():
    with pytest.raises(KernelError):
        kernel_sqrt(np.diag([1.0, -0.5]))
    with pytest.raises(KernelError):
        kernel_sqrt(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_sqrt_of_zero_kernel():
    s = kernel_sqrt(np.zeros((3, 3)))
    assert not s.S.any()


def test_sqrt_clips_roundoff():
    W = np.diag([1.0, -1e-14, 0.5])
    s = kernel_sqrt(W)
    assert s.clip_count == 1 and s.clip_mass == pytest.approx(1e-14)
    assert np.allclose(s.S, np.diag([1.0, 0.0, np.sqrt(0.5)]))


@settings(max_examples=30, deadline=None)
@given(arrays(np.float64, 61, elements=st.floats(-1, 1)))
def test_kernel_quadratic_form_nonnegative(f):
    g = build_grid(6.0, 61)
    s = kernel_sqrt(interaction_matrix(g, 1.0))
    assert f @ s.W_clipped @ f >= -1e-12 * max(1.0, f @ f)


# --------------------------------------------------------------------------- Hartree and exchange


def test_hartree_zero_density(model):
    assert hartree_energy(np.zeros(model.grid.n_points), model.kernel) == 0.0


def test_hartree_two_points():
    q, d, b, dx = 0.7, 2.0, 1.0, 1.0
    k = kernel_from_points(np.array([0.0, d]), dx, b)
    expect = 0.5 * (2 * q * q / b + 2 * q * q / np.sqrt(d * d + b * b)) * dx * dx
    assert hartree_energy(np.array([q, q]), k) == pytest.approx(expect, rel=1e-15)


def test_hartree_rejects_negative_density(model):
    rho = np.zeros(model.grid.n_points)
    rho[3] = -1.0
    with pytest.raises(ConfigError):
        hartree_energy(rho, model.kernel)


def test_hartree_scaling_and_exchange_identity(model, atom):
    phi = atom[1].vectors[:, 0]
    single = hartree_energy(phi * phi, model.kernel)
    assert hartree_energy(2 * phi * phi, model.kernel) == pytest.approx(4 * single, rel=1e-14)
    e_x = exchange_energy(phi, model.kernel)
    assert e_x == pytest.approx(-0.5 * hartree_energy(2 * phi * phi, model.kernel), rel=1e-13)
    # E_H + E_x is the single Hartree integral ∬|phi|^2|phi'|^2 w
    dx = model.grid.spacing
    x = model.grid.points
    J = dx * dx * np.sum(np.outer(phi**2, phi**2) * soft_coulomb(x[:, None] - x[None, :], 1.0))
    assert hartree_energy(2 * phi * phi, model.kernel) + e_x == pytest.approx(J, abs=1e-12)


def test_exchange_zero_kernel(model, atom):
    z = model.kernel.scaled(0.0)
    assert exchange_energy(atom[1].vectors[:, :2], z) == 0.0


def test_exchange_brute_force(rng):
    g = build_grid(2.0, 9)
    dx = g.spacing
    q, _ = np.linalg.qr(rng.standard_normal((9, 2)))
    phi = q / np.sqrt(dx)
    k = interaction_matrix(g, 1.0)
    x = g.points
    brute = 0.0
    for i in range(2):
        for j in range(2):
            for a in range(9):
                for b in range(9):
                    brute += phi[a, i] * phi[a, j] * phi[b, i] * phi[b, j] * soft_coulomb(x[a] - x[b], 1.0)
    assert exchange_energy(phi, k) == pytest.approx(-brute * dx * dx, rel=1e-13)


def test_exchange_rejects_non_orthonormal(model):
    with pytest.raises(ConfigError):
        exchange_energy(np.ones(model.grid.n_points), model.kernel)


def test_pair_hs_norm_finite(model, atom):
    v = atom[1].vectors
    val = pair_hs_norm(v[:, 0], v[:, 1], model.kernel)
    assert np.isfinite(val) and val > 0
