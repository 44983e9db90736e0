import numpy as np
import pytest
from hypothesis import given, strategies as st

from wavesrc.quadrature import SphereQuadrature, cumulative_simpson, simpson_weights


@given(n=st.integers(2, 60), h=st.floats(0.01, 2.0))
def test_simpson_integrates_cubics_exactly(n, h):
    t = h * np.arange(n)
    T = t[-1]
    w = simpson_weights(n, h)
    y = 1 + 2 * t - 3 * t ** 2 + 0.5 * t ** 3
    exact = T + T ** 2 - T ** 3 + T ** 4 / 8
    tol = 1e-9 * max(1.0, abs(exact))
    if n == 2:
        assert w.sum() == pytest.approx(T)
    else:
        assert abs(w @ y - exact) <= tol


def test_cumulative_simpson_is_fourth_order():
    errs = []
    for n in (41, 81, 161):
        t = np.linspace(0, 3, n)
        errs.append(np.abs(cumulative_simpson(np.cos(t), t[1] - t[0]) - np.sin(t)).max())
    assert errs[0] / errs[1] > 12 and errs[1] / errs[2] > 12


def test_cumulative_matches_weights_at_every_index():
    t = np.linspace(0, 2, 30)
    y = np.exp(t)
    h = t[1] - t[0]
    c = cumulative_simpson(y, h)
    for j in range(2, 30):
        assert c[j] == pytest.approx(simpson_weights(j + 1, h) @ y[:j + 1], rel=1e-12)


@pytest.mark.parametrize("R", [0.5, 1.0, 2.5])
def test_sphere_rule_moments(R):
    q = SphereQuadrature(R, 8, 16)
    pts, w = q.nodes()
    assert w.sum() == pytest.approx(4 * np.pi * R ** 2, rel=1e-13)
    assert w @ pts[:, 2] ** 2 == pytest.approx(4 * np.pi * R ** 4 / 3, rel=1e-13)
    assert w @ (pts[:, 0] ** 2 * pts[:, 1] ** 2 * pts[:, 2] ** 2) == pytest.approx(4 * np.pi * R ** 8 / 105, rel=1e-12)
    assert abs(w @ pts[:, 0] ** 3) < 1e-12
    assert np.allclose(np.linalg.norm(pts, axis=1), R)


def test_sphere_rule_plane_wave():
    # int over the unit sphere of exp(i k . x) = 4 pi sin|k| / |k|
    k = np.array([1.2, -0.7, 2.0])
    pts, w = SphereQuadrature(1.0, 16, 32).nodes()
    kk = np.linalg.norm(k)
    assert w @ np.exp(1j * pts @ k) == pytest.approx(4 * np.pi * np.sin(kk) / kk, abs=1e-12)


def test_invalid_parameters():
    with pytest.raises(ValueError):
        SphereQuadrature(0.0, 4, 8)
    with pytest.raises(ValueError):
        simpson_weights(1, 0.1)
