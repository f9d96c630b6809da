"""Half-line frequency quadratures."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from phrpa.quadrature import LOG_GAP_SWITCH, log_trapezoid, quadrature_for_gap, rational_gauss_legendre


def lorentz_integral(quad, a):
    return float(quad.integrate(a / (a * a + quad.omega**2)))


@pytest.mark.parametrize("a", [0.3, 1.0, 3.0])
def test_gauss_legendre_lorentzian(a):
    # ∫_0^inf a / (a^2 + w^2) dw = pi / 2
    assert lorentz_integral(rational_gauss_legendre(64), a) == pytest.approx(np.pi / 2, abs=1e-10)


@settings(max_examples=40, deadline=None)
@given(st.floats(-40.0, float(np.log(LOG_GAP_SWITCH))))
def test_log_trapezoid_any_width(log_a):
    # used for gaps below LOG_GAP_SWITCH; step 0.4 leaves ~1.2e-10, the cut at 1e8 leaves a / 1e8
    # and the cut at a * e^-30 leaves a few e^-30
    a = float(np.exp(log_a))
    quad = log_trapezoid(64, gap=a)
    assert lorentz_integral(quad, a) == pytest.approx(np.pi / 2, abs=2e-10 + a * 1e-8)
    assert lorentz_integral(quad.refined(), a) == pytest.approx(np.pi / 2, abs=1e-12 + a * 1e-8)


def test_log_trapezoid_lorentzian_squared():
    # ∫_0^inf a^2 / (a^2 + w^2)^2 dw = pi / (4 a)
    a = 1e-6
    q = log_trapezoid(64, gap=a)
    val = q.integrate(a * a / (a * a + q.omega**2) ** 2)
    assert val * a == pytest.approx(np.pi / 4, rel=1e-10)


def test_refinement_doubles_resolution():
    q = rational_gauss_legendre(32, 2.0)
    r = q.refined()
    assert r.kind == q.kind and r.n_nodes == 64 and r.scale == 2.0
    lq = log_trapezoid(64, 1e-3)
    lr = lq.refined()
    assert lr.n_nodes == 128 and len(lr) == pytest.approx(2 * len(lq), abs=2)


def test_rule_selection():
    assert quadrature_for_gap(0.5).kind == "rational-gl"
    assert quadrature_for_gap(LOG_GAP_SWITCH * 0.99).kind == "log-trapezoid"


def test_nodes_positive_and_weights_positive():
    for q in (rational_gauss_legendre(64), log_trapezoid(64, 1e-17)):
        assert np.all(q.omega > 0) and np.all(q.weights > 0)
        assert np.all(np.diff(q.omega) > 0)


def test_bad_arguments():
    with pytest.raises(ValueError):
        rational_gauss_legendre(0)
    with pytest.raises(ValueError):
        rational_gauss_legendre(8, -1.0)
    with pytest.raises(ValueError):
        log_trapezoid(8, gap=0.0)


def test_polynomial_in_t_exact():
    # under omega = t/(1-t), ∫_0^inf (1+w)^-3 dw = ∫_0^1 (1-t) dt = 1/2
    q = rational_gauss_legendre(4)
    assert q.integrate((1 + q.omega) ** -3.0) == pytest.approx(0.5, abs=1e-15)
