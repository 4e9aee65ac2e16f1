import numpy as np
import pytest

from backend.src.nhqc.errors import NumericalError, ParameterError, SpectrumProximityError
from backend.src.nhqc.model import ModelParams
from backend.src.nhqc.spectral import single_particle_spectrum
from backend.src.nhqc.topology import (
    WindingMethod,
    log_det,
    spectral_gap,
    winding_number,
    winding_slope,
    wrap_phase,
)

L13 = ModelParams(alpha="fib:6")


def test_log_det_matches_slogdet():
    rng = np.random.default_rng(11)
    A = rng.standard_normal((30, 30)) + 1j * rng.standard_normal((30, 30))
    log_abs, phase = log_det(A)
    sign, expected = np.linalg.slogdet(A)
    assert log_abs == pytest.approx(expected, rel=1e-10)
    assert np.exp(1j * phase) == pytest.approx(sign, abs=1e-9)


def test_log_det_counts_row_swaps():
    P = np.array([[0.0, 1.0], [1.0, 0.0]])
    log_abs, phase = log_det(P)
    assert log_abs == pytest.approx(0.0)
    assert abs(phase) == pytest.approx(np.pi)


def test_log_det_singular():
    with pytest.raises(NumericalError):
        log_det(np.zeros((3, 3)))


def test_wrap_phase():
    assert wrap_phase(2 * np.pi + 0.1) == pytest.approx(0.1)
    assert wrap_phase(-0.2) == pytest.approx(-0.2)


def test_single_particle_winding_inside_loop():
    result = winding_number(L13.replace(h=3.3), 0.0, sector="single")
    assert result.winding == -1
    assert result.method is WindingMethod.PHASE_UNWRAP
    assert result.theta_samples >= 256
    assert result.min_gap > 1e-4
    assert len(result.trace_rows()) == result.theta_samples + 1
    assert result.summary().winding == -1


def test_min_gap_covers_only_the_gap_check_angles():
    params = L13.replace(h=3.3)
    one = winding_number(params, 0.0, sector="single", n_samples=64, gap_angles=1)
    assert one.min_gap == pytest.approx(spectral_gap(params, 0.0, "single", np.array([0.0])))
    every = winding_number(params, 0.0, sector="single", n_samples=64)
    thetas = 2.0 * np.pi * np.arange(64) / 64
    assert every.min_gap == pytest.approx(spectral_gap(params, 0.0, "single", thetas))
    assert every.min_gap <= one.min_gap


def test_single_particle_winding_real_spectrum():
    result = winding_number(L13.replace(h=1.0), 0.5j, sector="single")
    assert result.winding == 0


def test_winding_stable_under_sample_doubling():
    params = L13.replace(h=3.3)
    coarse = winding_number(params, 0.0, sector="single", n_samples=128)
    fine = winding_number(params, 0.0, sector="single", n_samples=512)
    assert coarse.winding == fine.winding


def test_winding_slope_matches_integral():
    slope = winding_slope(L13.replace(h=3.3), 0.0, sector="single")
    assert slope == pytest.approx(-1.0, abs=0.05)


def test_winding_rejects_eigenvalue_as_base_energy():
    params = L13.replace(h=3.3)
    eigenvalue = single_particle_spectrum(params, want_vectors=False).eigenvalues[0]
    with pytest.raises(SpectrumProximityError) as info:
        winding_number(params, eigenvalue, sector="single")
    assert info.value.min_gap < 1e-4


def test_winding_parameter_checks():
    with pytest.raises(ParameterError):
        winding_number(L13, 0.5j, sector="single", n_samples=16)
    with pytest.raises(ParameterError):
        winding_number(L13, 0.5j, sector="single", theta_scale="half")
