"""The named verification checks behind ``phrpa verify``."""

from __future__ import annotations

import numpy as np
import pytest

from phrpa.checks import CHECKS, fit_hs_constant, run_checks
from phrpa.config import load_config


@pytest.fixture(scope="module")
def default_results():
    return run_checks(load_config())


def test_all_checks_pass_by_default(default_results):
    assert list(default_results) == list(CHECKS)
    failed = [k for k, r in default_results.items() if not r.passed]
    assert failed == []
    for r in default_results.values():
        d = r.as_dict()
        assert {"pass", "value", "tolerance"} <= set(d) <= {"pass", "value", "tolerance", "details"}
        assert np.isfinite(d["value"])


def test_fault_prefactor_is_detected():
    cfg = load_config(overrides=["debug.fault_prefactor=3"])
    names = ["backend_equivalence", "rank1_trace_log", "splitting_identity", "log_identity"]
    res = run_checks(cfg, names)
    assert not res["backend_equivalence"].passed
    assert not res["rank1_trace_log"].passed
    assert not res["splitting_identity"].passed
    # checks that never touch the response prefactor are unaffected
    assert res["log_identity"].passed


def test_seeded_checks_are_deterministic():
    cfg = load_config()
    names = ["sherman_morrison", "log_lemma_sweep"]
    a, b = run_checks(cfg, names), run_checks(cfg, names)
    assert all(a[k].value == b[k].value for k in names)


def test_unknown_check_name():
    with pytest.raises(Exception):
        run_checks(load_config(), ["no_such_check"])


def test_fit_hs_constant():
    om = np.array([0.0, 1.0, 64.0, 1e3])
    hs = np.array([2.0, 1.5, 0.05, 0.0])
    # the fit uses the nodes up to 64 only
    assert fit_hs_constant(om, hs) == pytest.approx(max(2.0, 3.0, 0.05 * 65))
