"""Reference-lattice checks (L=55, alpha=34/55, J=1, V=0.15, theta=0).

Deselected by default; run with ``pytest -m slow``.
"""
import math

import numpy as np
import pytest

from backend.src.nhqc.doublon import branch_transition, thresholds, validate_asymptotics
from backend.src.nhqc.dynamics import (
    Propagator,
    TwoParticleState,
    bunching_time,
    evolve,
    pair_distance_series,
    sample_times,
)
from backend.src.nhqc.model import ModelParams
from backend.src.nhqc.oracle import factorization_check
from backend.src.nhqc.spectral import (
    Localization,
    classify_states,
    epsilon_scan,
    sector_transition,
    two_particle_spectrum,
)
from backend.src.nhqc.topology import winding_number

pytestmark = pytest.mark.slow

REFERENCE = ModelParams()
H_C = math.log(2.0 / 0.15)


def test_single_particle_transition():
    rows = epsilon_scan(REFERENCE, [2.0, 2.4, 2.8], sector="single")
    assert rows[0].epsilon < 1e-6
    # finite-size floor below the transition stays under the bisection threshold
    assert rows[1].epsilon < 0.02
    assert rows[2].epsilon > 0.02
    assert sector_transition(REFERENCE, "single", 2.0, 3.0) == pytest.approx(H_C, abs=0.15)


@pytest.mark.parametrize(
    "U, base_energy, expected",
    [(0.0, 0.0, -55), (0.0, 1.5, -45), (0.0, 2.5, -37),
     (10.0, 0.0, -54), (10.0, 1.5, -43), (10.0, 2.5, -36)],
)
def test_two_particle_winding(U, base_energy, expected):
    params = REFERENCE.replace(U=U, h=3.3)
    result = winding_number(params, base_energy, sector="two")
    assert result.winding == expected
    doubled = winding_number(params, base_energy, sector="two", n_samples=2 * result.theta_samples)
    assert doubled.winding == expected


def test_single_particle_winding():
    assert winding_number(REFERENCE.replace(h=1.0), 0.5j, sector="single").winding == 0
    assert winding_number(REFERENCE.replace(h=3.3), 0.0, sector="single").winding == -1


def test_noninteracting_factorization():
    assert factorization_check(REFERENCE.replace(h=1.0)).passed


def test_weak_interaction_mobility_edge():
    # at U=1 the two-particle spectrum turns complex at a measured h'_c below h_c
    params = REFERENCE.replace(U=1.0)
    L = params.L
    h_c_prime = sector_transition(params, "two", 0.0, H_C, tol=0.02)
    assert 0.0 < h_c_prime < 2.4

    for h in (2.4, 2.5, 2.55):
        spectrum = two_particle_spectrum(params.replace(h=h))
        kinds = {c.kind for c in classify_states(spectrum, params)}
        assert kinds == {Localization.EXTENDED, Localization.LOCALIZED}
        assert spectrum.ipr_min < 10.0 / L**2 * 5
        assert spectrum.ipr_max > 0.05
        assert spectrum.epsilon > 0.02

    below = two_particle_spectrum(params.replace(h=0.5 * h_c_prime))
    assert {c.kind for c in classify_states(below, params)} == {Localization.EXTENDED}
    assert below.epsilon < 0.02


def test_doublon_branch_localizes_between_thresholds():
    params = REFERENCE.replace(U=10.0)
    th = thresholds(params)
    L = params.L
    for h in np.linspace(th.h_c_prime, th.h_c, 5)[1:4]:
        spectrum = two_particle_spectrum(params.replace(h=float(h)))
        kinds = {c.kind for c in classify_states(spectrum, params)}
        assert kinds == {Localization.EXTENDED, Localization.LOCALIZED}
        assert spectrum.ipr_min < 10.0 / L**2 * 5
        assert spectrum.ipr_max > 0.05


def test_doublon_threshold():
    h = branch_transition(REFERENCE.replace(U=10.0), 0.0, 2.0)
    assert h == pytest.approx(0.2877, abs=0.3)
    strong = two_particle_spectrum(REFERENCE.replace(U=20.0, h=0.1), want_vectors=False)
    assert strong.epsilon > 1e-6


def test_strong_coupling_asymptotics():
    report = validate_asymptotics(REFERENCE.replace(U=50.0, h=1.0))
    assert report.spectral_mismatch < 0.01
    assert report.dynamical_mismatch < 0.02


def test_non_hermitian_bunching():
    params = REFERENCE.replace(U=10.0, h=1.0)
    result = bunching_time(params, 25, 26, t_max=200.0)
    assert result.reached and result.sustained

    hermitian = evolve(params.replace(h=0.0), TwoParticleState.pair(55, 25, 26), sample_times(200.0))
    assert np.max(hermitian.bunching()) < 0.5

    d = np.arange(1, 6)
    taus = np.array([r.tau0 for r in pair_distance_series(params, 25, d)])
    assert np.all(np.diff(taus) > 0)
    slope, intercept = np.polyfit(d, taus, 1)
    residual = taus - (slope * d + intercept)
    r_squared = 1.0 - np.sum(residual**2) / np.sum((taus - taus.mean()) ** 2)
    assert r_squared > 0.9


def test_evolution_cross_validation():
    params = ModelParams(alpha="fib:7", U=2.0, h=1.0)
    start = TwoParticleState.pair(21, 10, 11)
    times = np.linspace(0.0, 20.0, 5)
    spectral = Propagator.spectral(params).evolve(start, times)
    direct = Propagator.direct(params).evolve(start, times)
    for a, b in zip(spectral.states, direct.states):
        assert np.max(np.abs(a.amplitudes - b.amplitudes)) < 1e-6

    lossy = Propagator.spectral(params.replace(gamma=0.5)).evolve(start, times)
    for a, b in zip(spectral.states, lossy.states):
        assert np.max(np.abs(a.amplitudes - b.amplitudes)) < 1e-10

    hermitian = Propagator.spectral(params.replace(h=0.0))
    assert hermitian.propagate(start, 20.0, normalize=False).norm == pytest.approx(1.0, abs=1e-8)
