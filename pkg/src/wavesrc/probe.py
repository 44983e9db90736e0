"""Recovery of f_hat from boundary traces when F(x, t) = f(x) g(t).

With the test function w(x, t) = exp(-i (xi . x + omega t)) and
omega^2 = lambda |xi|^2, Green's formula and the vanishing of u inside B_R
after the Huygens time give

    (2 pi)^2 F_hat(xi, omega) = lambda int_0^T int_{|x|=R} (u dw/dnu - w du/dnu) ds dt,

so for separable sources the boundary integral equals f_hat(xi) g_hat(omega).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .forward import BoundaryDataset, huygens_cutoff
from .quadrature import simpson_weights
from .spectral import Box, idft

DELTA_MIN = 1e-6


class DispersionError(ValueError):
    """Test frequency does not satisfy omega^2 = lambda |xi|^2."""


class HorizonError(ValueError):
    """Time horizon shorter than the Huygens time of the source."""


class BandConditionError(ValueError):
    """|g_hat| falls below delta_min on the band."""


def ghat(g: np.ndarray, omega, t: np.ndarray) -> np.ndarray:
    """(2 pi)^(-1/2) int g(t) exp(-i omega t) dt by composite Simpson.

    Parameters
    ----------
    g : samples of the temporal factor on the uniform grid ``t``.
    omega : scalar or array of angular frequencies.
    t : uniform sample times covering the support of g.
    """
    g = np.asarray(g, dtype=float)
    t = np.asarray(t, dtype=float)
    if g.shape != t.shape or g.ndim != 1:
        raise ValueError("g and t must be 1D arrays of equal length")
    if g.size < 64:
        raise ValueError("need at least 64 samples of g")
    w = simpson_weights(t.size, t[1] - t[0]) * g / np.sqrt(2 * np.pi)
    omega = np.asarray(omega, dtype=float)
    out = np.exp(-1j * np.multiply.outer(omega, t)) @ w
    return out


def sample_profile(profile, support: tuple[float, float], n: int = 4001) -> tuple[np.ndarray, np.ndarray]:
    """Uniform samples of a callable over its support."""
    t = np.linspace(support[0], support[1], n)
    return np.asarray(profile(t), dtype=float), t


@dataclass(frozen=True)
class BandCondition:
    b: float
    delta: float
    satisfied: bool
    delta_min: float


def check_bandwidth_condition(g: np.ndarray, t: np.ndarray, b: float, delta_min: float = DELTA_MIN,
                              n_probe: int = 256) -> BandCondition:
    """Smallest |g_hat| over ``n_probe`` equispaced frequencies in (0, b)."""
    if not b > 0:
        raise ValueError("b must be positive")
    omega = b * np.arange(1, n_probe + 1) / (n_probe + 1)
    delta = float(np.abs(ghat(g, omega, t)).min())
    return BandCondition(float(b), delta, delta >= delta_min, float(delta_min))


def _check_horizon(ds: BoundaryDataset) -> None:
    if ds.source_T0 is None:
        return
    need = huygens_cutoff(ds.source_T0, ds.radius_R, ds.lam)
    if not ds.horizon > need:
        raise HorizonError(f"horizon {ds.horizon:g} does not exceed T0 + 2R/sqrt(lambda) = {need:g}")


def boundary_integrals(ds: BoundaryDataset, xi: np.ndarray, omega: np.ndarray, chunk: int = 256,
                       check_dispersion: bool = True) -> np.ndarray:
    """lambda (2 pi)^-2 int int (u dw/dnu - w du/dnu) for many (xi, omega) pairs.

    Parameters
    ----------
    xi : (Q, 3) spatial test frequencies.
    omega : (Q,) temporal test frequencies.
    check_dispersion : reject pairs off the cone omega^2 = lambda |xi|^2.
    """
    xi = np.atleast_2d(np.asarray(xi, dtype=float))
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    if xi.shape != (omega.size, 3):
        raise ValueError("xi must have shape (Q, 3) matching omega")
    if check_dispersion:
        k2 = ds.lam * np.sum(xi ** 2, axis=1)
        bad = np.abs(omega ** 2 - k2) > 1e-10 * np.maximum(1.0, k2)
        if np.any(bad):
            raise DispersionError(f"{bad.sum()} test frequencies violate omega^2 = lambda |xi|^2")
    _check_horizon(ds)
    pts, w = ds.quadrature.nodes()
    wt = ds.time_weights()
    uw, inv = np.unique(omega, return_inverse=True)
    et = np.exp(-1j * np.outer(ds.times, uw)) * wt[:, None]
    u_hat = ds.dirichlet @ et
    n_hat = ds.neumann @ et
    out = np.empty(omega.size, complex)
    R = ds.radius_R
    for start in range(0, omega.size, chunk):
        sl = slice(start, start + chunk)
        proj = pts @ xi[sl].T
        phase = np.exp(-1j * proj) * w[:, None]
        cols = inv[sl]
        integrand = u_hat[:, cols] * (-1j * proj / R) - n_hat[:, cols]
        out[sl] = np.sum(phase * integrand, axis=0)
    return out * ds.lam / (2 * np.pi) ** 2


def boundary_integral(ds: BoundaryDataset, xi, omega) -> complex:
    """Single-frequency version of :func:`boundary_integrals`."""
    return complex(boundary_integrals(ds, np.reshape(xi, (1, 3)), np.array([float(omega)]))[0])


@dataclass
class FourierSamples:
    """Recovered transform values at explicit frequency points.

    ``modes`` holds the integer indices of each entry on ``box``'s DFT grid,
    so inversion needs no frequency interpolation.
    """

    xi: np.ndarray
    omega: np.ndarray
    value: np.ndarray
    valid: np.ndarray
    divisor_mag: np.ndarray
    band_b: float
    box: Box
    modes: np.ndarray
    lam: float = 1.0

    def __len__(self) -> int:
        return self.omega.size

    def dispersion_residual(self) -> float:
        k2 = self.lam * np.sum(self.xi ** 2, axis=1)
        return float(np.max(np.abs(self.omega ** 2 - k2), initial=0.0))

    def conjugate_residual(self) -> float:
        """max |v(-xi, -omega) - conj v(xi, omega)| over pairs present, relative to max |v|."""
        lookup = {tuple(m): i for i, m in enumerate(self.modes)}
        scale = np.abs(self.value).max(initial=0.0)
        if scale == 0:
            return 0.0
        worst = 0.0
        for i, m in enumerate(self.modes):
            j = lookup.get(tuple(-m))
            if j is not None and np.isclose(self.omega[j], -self.omega[i], atol=1e-12):
                worst = max(worst, abs(self.value[j] - np.conj(self.value[i])))
        return worst / scale

    def to_grid(self, k: float | None = None) -> np.ndarray:
        """Dense coefficient array on ``box`` with entries outside |xi| <= k zeroed."""
        n = self.box.n
        grid = np.zeros((n, n, n), complex)
        keep = self.valid.copy()
        if k is not None:
            keep &= np.linalg.norm(self.xi, axis=1) <= k + 1e-12
        idx = self.modes[keep] % n
        grid[idx[:, 0], idx[:, 1], idx[:, 2]] = self.value[keep]
        return grid


def reconstruction_box(R: float, b: float, n: int | None = None) -> Box:
    """Periodic box [-R, R)^3 whose DFT grid resolves frequencies up to b."""
    if n is None:
        n = max(32, 2 * int(np.ceil(b * R / np.pi)) + 8)
        n += n % 2
    return Box(R, n)


def ball_modes(box: Box, b: float, half: bool = False) -> np.ndarray:
    """Integer mode triples with |xi| <= b, optionally one per +/- pair."""
    m = box.axis.index
    m = m[np.abs(m) < box.n // 2]
    M1, M2, M3 = np.meshgrid(m, m, m, indexing="ij")
    modes = np.stack([M1.ravel(), M2.ravel(), M3.ravel()], axis=1)
    modes = modes[np.linalg.norm(modes * box.dxi, axis=1) <= b + 1e-12]
    if half:
        keep = (modes[:, 0] > 0) | ((modes[:, 0] == 0) & (modes[:, 1] > 0)) | \
               ((modes[:, 0] == 0) & (modes[:, 1] == 0) & (modes[:, 2] >= 0))
        modes = modes[keep]
    order = np.lexsort((modes[:, 2], modes[:, 1], modes[:, 0]))
    return modes[order]


def extract_fhat(ds: BoundaryDataset, g: np.ndarray, t: np.ndarray, b: float,
                 delta_min: float = DELTA_MIN, box: Box | None = None) -> FourierSamples:
    """f_hat(xi) = boundary_integral(xi, |xi|) / g_hat(|xi|) on the ball |xi| <= b.

    Entries are computed on the half space of modes with omega = +|xi| and
    mirrored by conjugation.  Entries with |g_hat| < delta_min are flagged
    invalid and set to zero.
    """
    cond = check_bandwidth_condition(g, t, b, delta_min)
    if not cond.satisfied:
        raise BandConditionError(f"min |g_hat| on (0, {b:g}) is {cond.delta:.3e} < {delta_min:g}")
    if box is None:
        box = reconstruction_box(ds.radius_R, b)
    half = ball_modes(box, b, half=True)
    xi = half * box.dxi
    omega = np.sqrt(ds.lam) * np.linalg.norm(xi, axis=1)
    bi = boundary_integrals(ds, xi, omega)
    gh = ghat(g, omega, t)
    mag = np.abs(gh)
    valid = mag >= delta_min
    value = np.where(valid, bi / np.where(valid, gh, 1.0), 0.0)
    return _mirror(xi, omega, value, valid, mag, half, b, box, ds.lam)


def _mirror(xi, omega, value, valid, mag, half, b, box, lam) -> FourierSamples:
    nonzero = np.any(half != 0, axis=1)
    return FourierSamples(
        xi=np.concatenate([xi, -xi[nonzero]]),
        omega=np.concatenate([omega, -omega[nonzero]]),
        value=np.concatenate([value, np.conj(value[nonzero])]),
        valid=np.concatenate([valid, valid[nonzero]]),
        divisor_mag=np.concatenate([mag, mag[nonzero]]),
        band_b=float(b), box=box,
        modes=np.concatenate([half, -half[nonzero]]), lam=lam)


def invert(samples: FourierSamples, k: float) -> np.ndarray:
    """Band-limited reconstruction of f on the nodes of ``samples.box``."""
    coeffs = samples.to_grid(k)
    values = idft(coeffs, samples.box.axes)
    return values.real


def relative_l2(estimate: np.ndarray, truth: np.ndarray) -> float:
    den = np.linalg.norm(truth)
    return float(np.linalg.norm(estimate - truth) / den) if den > 0 else float(np.linalg.norm(estimate))
