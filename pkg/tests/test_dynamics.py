import dataclasses

import numpy as np
import pytest
import scipy.linalg as la

from backend.src.nhqc.dynamics import (
    PropagationMethod,
    Propagator,
    TwoParticleState,
    bunching_probability,
    bunching_time,
    evolve,
    pair_distance_series,
    sample_times,
    site_density,
)
from backend.src.nhqc.errors import NumericalError, ParameterError
from backend.src.nhqc.hamiltonian import build_h1
from backend.src.nhqc.model import ModelParams

L13 = ModelParams(alpha="fib:6", U=2.0, h=1.0)


def test_pair_state():
    state = TwoParticleState.pair(13, 3, 4)
    assert state.norm == pytest.approx(1.0)
    assert state.amplitudes[3, 4] == state.amplitudes[4, 3]
    assert bunching_probability(state) == 0.0
    doublon = TwoParticleState.doublon(13, 5)
    assert bunching_probability(doublon) == 1.0
    np.testing.assert_allclose(site_density(doublon), np.eye(13)[5])
    with pytest.raises(ParameterError):
        TwoParticleState.pair(13, 0, 13)


def test_sample_times():
    np.testing.assert_allclose(sample_times(1.0, 0.5), [0.0, 0.5, 1.0])
    np.testing.assert_allclose(sample_times(1.2, 0.5), [0.0, 0.5, 1.0, 1.2])
    with pytest.raises(ParameterError):
        sample_times(1.0, 0.0)


def test_spectral_and_direct_agree():
    start = TwoParticleState.pair(13, 5, 6)
    times = [0.0, 2.5, 10.0]
    spectral = Propagator.spectral(L13).evolve(start, times)
    direct = Propagator.direct(L13).evolve(start, times)
    assert spectral.method is PropagationMethod.SPECTRAL
    assert direct.method is PropagationMethod.DIRECT
    for a, b in zip(spectral.states, direct.states):
        assert a.time == b.time
        np.testing.assert_allclose(a.amplitudes, b.amplitudes, atol=1e-6)


def test_evolution_keeps_exchange_symmetry():
    start = TwoParticleState.pair(13, 2, 9)
    times = [0.0, 1.5, 7.0]
    for propagator in (Propagator.spectral(L13), Propagator.direct(L13)):
        for state in propagator.evolve(start, times).states:
            np.testing.assert_allclose(state.amplitudes, state.amplitudes.T, atol=1e-10)


def test_zero_time_is_identity():
    start = TwoParticleState.pair(13, 1, 2)
    trajectory = evolve(L13, start, [0.0])
    np.testing.assert_array_equal(trajectory.states[0].amplitudes, start.amplitudes)


def test_norm_is_conserved_without_gain_and_loss():
    params = L13.replace(h=0.0)
    start = TwoParticleState.pair(13, 2, 7)
    state = Propagator.spectral(params).propagate(start, 15.0, normalize=False)
    assert state.norm == pytest.approx(1.0, abs=1e-8)


def test_uniform_loss_drops_out_after_normalization():
    start = TwoParticleState.pair(13, 2, 3)
    plain = Propagator.spectral(L13).propagate(start, 6.0)
    lossy = Propagator.spectral(L13.replace(gamma=0.4)).propagate(start, 6.0)
    np.testing.assert_allclose(plain.amplitudes, lossy.amplitudes, atol=1e-10)


def test_noninteracting_evolution_factorizes():
    params = L13.replace(U=0.0)
    t = 3.0
    u = la.expm(-1j * t * build_h1(params).matrix)[:, 4]
    # U=0 pair sums are degenerate, so integrate directly
    state = Propagator.direct(params).propagate(TwoParticleState.doublon(13, 4), t, normalize=False)
    np.testing.assert_allclose(state.amplitudes, np.outer(u, u), atol=1e-7)


def test_adjoint_coefficients_match_linear_solve():
    start = TwoParticleState.pair(13, 0, 9)
    solve = Propagator.spectral(L13)
    adjoint = Propagator.spectral(L13, coefficient_mode="adjoint")
    # eigenvalue order can differ between the two decompositions
    a = solve.coefficients(start) * solve.spectrum.right_eigenvectors
    b = adjoint.coefficients(start) * adjoint.spectrum.right_eigenvectors
    np.testing.assert_allclose(a.sum(axis=1), start.flat(), atol=1e-8)
    np.testing.assert_allclose(b.sum(axis=1), start.flat(), atol=1e-8)
    np.testing.assert_allclose(
        adjoint.propagate(start, 4.0).amplitudes, solve.propagate(start, 4.0).amplitudes, atol=1e-8
    )


def test_unknown_coefficient_mode():
    with pytest.raises(ParameterError):
        Propagator.spectral(L13, coefficient_mode="guess")


def test_ill_conditioned_basis_falls_back_to_direct():
    spectrum = Propagator.spectral(L13).spectrum
    bad = dataclasses.replace(spectrum, eigenvector_condition=1e14)
    propagator = Propagator.build(L13, spectrum=bad)
    assert propagator.method is PropagationMethod.DIRECT
    assert propagator.fallback
    with pytest.raises(NumericalError):
        Propagator(L13, PropagationMethod.SPECTRAL, bad)
    trajectory = propagator.evolve(TwoParticleState.pair(13, 1, 2), [0.0, 1.0])
    assert trajectory.fallback


def test_evolve_rejects_bad_times_and_shapes():
    propagator = Propagator.spectral(L13)
    with pytest.raises(ParameterError):
        propagator.evolve(TwoParticleState.pair(13, 1, 2), [1.0, 0.5])
    with pytest.raises(ParameterError):
        propagator.evolve(TwoParticleState.pair(8, 1, 2), [1.0])


def test_attractor_overlap_grows():
    params = ModelParams(alpha="fib:6", U=10.0, h=1.0)
    propagator = Propagator.spectral(params)
    start = TwoParticleState.pair(13, 5, 6)
    late = propagator.propagate(start, 1000.0)
    assert propagator.attractor_overlap(late) > propagator.attractor_overlap(start)
    assert propagator.attractor_overlap(late) > 0.9


def test_bunching_time_same_site_is_zero():
    result = bunching_time(L13, 3, 3)
    assert result.tau0 == 0.0 and result.reached
    strong = bunching_time(ModelParams(alpha="fib:6", U=10.0, h=1.0), 3, 3, t_max=50.0)
    assert strong.tau0 == 0.0
    assert strong.sustained


def test_hermitian_pair_does_not_bunch():
    params = ModelParams(alpha="fib:6", U=10.0, h=0.0)
    trajectory = evolve(params, TwoParticleState.pair(13, 5, 6), sample_times(50.0, 0.5))
    assert np.max(trajectory.bunching()) < 0.5
    result = bunching_time(params, 5, 6, t_max=50.0)
    assert result.tau0 is None and not result.reached


def test_non_hermitian_pair_bunches():
    params = ModelParams(alpha="fib:6", U=10.0, h=1.0)
    result = bunching_time(params, 5, 6, t_max=200.0)
    assert result.reached
    assert 0.0 < result.tau0 < 200.0
    # the refined crossing sits on the target within the bisection resolution
    propagator = Propagator.build(params)
    at_tau = propagator.propagate(TwoParticleState.pair(13, 5, 6), result.tau0)
    assert bunching_probability(at_tau) >= 0.8 - 1e-9


def test_pair_distance_series_shares_propagator():
    params = ModelParams(alpha="fib:5", U=10.0, h=1.0)
    results = pair_distance_series(params, 2, [0, 1], t_max=100.0)
    assert results[0].tau0 == 0.0
    assert len(results) == 2
