import numpy as np
import pytest

from backend.src.nhqc.dynamics import Propagator, TwoParticleState
from backend.src.nhqc.errors import ParameterError
from backend.src.nhqc.model import ModelParams
from backend.src.nhqc.oracle import (
    OracleReport,
    apply_check,
    evolution_check,
    factorization_check,
    kronecker_check,
    naive_evolution,
    naive_h2,
    run_all,
)

L13 = ModelParams(alpha="fib:6", h=1.0)


def test_report_pass_flag():
    assert OracleReport.measure("x", 13, 1e-9, 1e-8).passed
    assert not OracleReport.measure("x", 13, 1e-7, 1e-8).passed


def test_two_site_noninteracting_spectrum():
    params = ModelParams(alpha="1/2", V=0.0)
    evals = np.sort(np.linalg.eigvals(naive_h2(params)).real)
    np.testing.assert_allclose(evals, [-4.0, 0.0, 0.0, 4.0], atol=1e-12)
    assert factorization_check(params).passed


def test_factorization_at_U_zero():
    report = factorization_check(L13)
    assert report.passed
    assert report.max_deviation < 1e-8
    with pytest.raises(ParameterError):
        factorization_check(L13.replace(U=0.5))


def test_library_matrices_match_loops():
    params = L13.replace(U=3.0, gamma=0.1)
    assert kronecker_check(params).passed
    assert apply_check(params).passed


def test_naive_evolution_step_limit_and_identity():
    start = TwoParticleState.pair(13, 2, 3)
    with pytest.raises(ParameterError):
        naive_evolution(L13, start, 1.0, dt=0.1)
    same = naive_evolution(L13, start, 0.0, dt=0.001)
    np.testing.assert_array_equal(same.amplitudes, start.amplitudes)


def test_naive_evolution_agrees_with_spectral():
    params = L13.replace(U=2.0)
    start = TwoParticleState.pair(13, 4, 5)
    reference = naive_evolution(params, start, 1.0, dt=0.004)
    state = Propagator.spectral(params).propagate(start, 1.0)
    np.testing.assert_allclose(state.amplitudes, reference.amplitudes, atol=1e-6)


def test_evolution_check_both_methods():
    params = L13.replace(U=2.0)
    assert evolution_check(params, method="spectral").passed
    assert evolution_check(params, method="direct").passed


def test_run_all_passes():
    reports = run_all()
    assert {r.L for r in reports} == {13, 21}
    assert all(r.passed for r in reports), [r for r in reports if not r.passed]
