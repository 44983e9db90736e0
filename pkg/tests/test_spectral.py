import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wavesrc.spectral import (Box, GridError, PeriodicAxis, SimulationGrid, SpectralField, SymmetryError,
                              conjugate_residual, dft, evaluate_at_points, forward_dft3, idft, inverse_dft3,
                              parseval_norms, spectral_gradient)
from oracles import gaussian_transform


def gaussian(box, sigma):
    X, Y, Z = box.nodes()
    return np.exp(-(X ** 2 + Y ** 2 + Z ** 2) / (2 * sigma ** 2))


def test_gaussian_transform_matches_closed_form():
    box = Box(2.0, 64)
    sigma = 0.2
    c = forward_dft3(gaussian(box, sigma), box)
    assert abs(c[0, 0, 0] - sigma ** 3) / sigma ** 3 <= 1e-6
    KX, KY, KZ = box.wavevectors()
    ref = sigma ** 3 * np.exp(-0.5 * sigma ** 2 * (KX ** 2 + KY ** 2 + KZ ** 2))
    assert np.abs(c - ref).max() <= 1e-6 * sigma ** 3


@settings(max_examples=25, deadline=None)
@given(n=st.sampled_from([4, 6, 8, 10]), origin=st.floats(-3, 3), period=st.floats(0.5, 8), seed=st.integers(0, 99))
def test_dft_round_trip(n, origin, period, seed):
    axes = [PeriodicAxis(origin, period, n), PeriodicAxis(-origin, period / 2, n + 2)]
    v = np.random.default_rng(seed).normal(size=(n, n + 2))
    assert np.allclose(idft(dft(v, axes), axes).real, v, atol=1e-12)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 1000))
def test_real_fields_have_conjugate_symmetric_coefficients(seed):
    box = Box(1.5, 8)
    v = np.random.default_rng(seed).normal(size=(8, 8, 8))
    assert conjugate_residual(forward_dft3(v, box), box.axes) <= 1e-12


def test_parseval():
    box = Box(2.0, 32)
    v = gaussian(box, 0.4)
    a, b = parseval_norms(v, forward_dft3(v, box), box)
    assert a == pytest.approx(b, rel=1e-12)


def test_inverse_rejects_asymmetric_coefficients(rng):
    box = Box(1.0, 8)
    with pytest.raises(SymmetryError):
        inverse_dft3(rng.normal(size=(8, 8, 8)) + 1j * rng.normal(size=(8, 8, 8)), box)
    with pytest.raises(GridError):
        forward_dft3(np.zeros((4, 4, 4)), box)


def _dense_field(coeffs, L):
    n = coeffs.shape[0]
    grid = SimulationGrid(L, n, 0.5, 2, 1.0, 0.2, 0.2)
    return SpectralField.dense(grid, np.repeat(coeffs[..., None], 2, axis=-1))


def test_constant_mode_evaluates_to_scaled_constant():
    L, n = 2.0, 16
    c = np.zeros((n, n, n), complex)
    c[0, 0, 0] = 0.7
    pts = np.random.default_rng(0).uniform(-1.5, 1.5, size=(10, 3))
    vals = evaluate_at_points(_dense_field(c, L), pts)
    assert np.allclose(vals, 0.7 * (2 * np.pi) ** 1.5 / (2 * L) ** 3, atol=1e-14)


def test_point_evaluation_matches_direct_sum(rng):
    L, n = 1.7, 16
    box = Box(L, n)
    v = rng.normal(size=(n, n, n))
    c = forward_dft3(v, box)
    c[n // 2] = c[:, n // 2] = c[:, :, n // 2] = 0
    pts = rng.uniform(-L, L, size=(100, 3))
    KX, KY, KZ = box.wavevectors()
    xi = np.stack([KX.ravel(), KY.ravel(), KZ.ravel()], axis=1)
    direct = (np.exp(1j * pts @ xi.T) @ c.ravel()) * (2 * np.pi) ** 1.5 / (2 * L) ** 3
    got = evaluate_at_points(_dense_field(c, L), pts)[:, 0]
    assert np.abs(got - direct).max() <= 1e-8 * np.abs(direct).max()
    # at the grid nodes the evaluation reproduces the inverse DFT
    X, Y, Z = box.nodes()
    nodes = np.stack([X.ravel(), Y.ravel(), Z.ravel()], axis=1)[:50]
    assert np.allclose(evaluate_at_points(_dense_field(c, L), nodes)[:, 0].real,
                       inverse_dft3(c, box).ravel()[:50], atol=1e-10)


def test_gradient_of_gaussian():
    L, n, sigma = 2.0, 64, 0.2
    box = Box(L, n)
    f = gaussian(box, sigma)
    fld = _dense_field(forward_dft3(f, box), L)
    X, Y, Z = box.nodes()
    for comp, x in zip(spectral_gradient(fld), (X, Y, Z)):
        got = inverse_dft3(comp.coeffs(0), box)
        ref = -x / sigma ** 2 * f
        assert np.linalg.norm(got - ref) / np.linalg.norm(ref) <= 1e-6


def test_grid_rejects_wrapping_and_odd_sizes():
    with pytest.raises(GridError, match="no-wrap"):
        SimulationGrid(2.0, 32, 4.0, 100, 1.0, 1.0, 1.0)
    with pytest.raises(GridError):
        SimulationGrid(3.0, 33, 1.0, 100)
    g = SimulationGrid(3.0, 32, 2.0, 101)
    assert g.dt == pytest.approx(0.02)
    assert g.with_lambda(0.25, 4.0, 201).fingerprint() != g.fingerprint()


def test_gaussian_helper_consistent():
    assert gaussian_transform(0.3, np.zeros(3))[0] == pytest.approx(0.027)
