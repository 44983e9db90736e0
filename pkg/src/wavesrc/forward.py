"""Forward solver for d_t^2 u - lambda Lap u = F with zero initial data.

Each Fourier mode obeys u'' + lambda |xi|^2 u = F_hat(xi, t), whose
solution with zero data is the Duhamel integral

    u_hat(xi, t) = int_0^t sin(c (t - s)) / c * F_hat(xi, s) ds,  c = sqrt(lambda) |xi|,

with kernel (t - s) at xi = 0.  The integral is evaluated with fourth
order cumulative Simpson quadrature on the solver time grid.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .quadrature import SphereQuadrature, cumulative_simpson, simpson_weights
from .sources import SourceSpec, smooth_step
from .spectral import (SimulationGrid, SpectralField, evaluate_many, evaluate_with_normal_derivative,
                       forward_dft3)

RESOLUTION_TOL = 1e-6


class ResolutionError(ValueError):
    """Source spectrum is not negligible near the Nyquist frequency."""


class WindowError(ValueError):
    """The time horizon does not contain the requested check window."""


class GeometryError(ValueError):
    """Measurement sphere incompatible with the grid."""


@dataclass
class BoundaryDataset:
    """Dirichlet and Neumann traces on a sphere, node-major and time-minor.

    ``dirichlet`` and ``neumann`` have shape (n_nodes, n_time).  ``source_T0``
    records the time support of the source when it is known, which lets
    the probes check that the horizon covers the Huygens window.
    """

    radius_R: float
    lam: float
    n_theta: int
    n_phi: int
    times: np.ndarray
    dirichlet: np.ndarray
    neumann: np.ndarray
    noise_level: float = 0.0
    source_T0: float | None = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.dirichlet = np.asarray(self.dirichlet, dtype=float)
        self.neumann = np.asarray(self.neumann, dtype=float)
        shape = (self.n_theta * self.n_phi, self.times.size)
        if self.dirichlet.shape != shape or self.neumann.shape != shape:
            raise ValueError(f"trace arrays must have shape {shape}")

    @property
    def quadrature(self) -> SphereQuadrature:
        return SphereQuadrature(self.radius_R, self.n_theta, self.n_phi)

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    def time_weights(self) -> np.ndarray:
        return simpson_weights(self.times.size, self.dt)

    def surrogate_norm(self, values: np.ndarray) -> float:
        """Discrete space-time L2 norm: surface quadrature times Simpson in t."""
        _, w = self.quadrature.nodes()
        return float(np.sqrt(max(w @ (values ** 2) @ self.time_weights(), 0.0)))

    def replace(self, **changes) -> "BoundaryDataset":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class HuygensReport:
    cutoff_time: float
    residual_ratio: float
    pass_: bool
    tolerance: float

    def as_dict(self) -> dict:
        return {"cutoff_time": self.cutoff_time, "residual_ratio": self.residual_ratio,
                "pass": self.pass_, "tolerance": self.tolerance}


def shell_labels(grid: SimulationGrid) -> tuple[np.ndarray, np.ndarray]:
    """Label of every mode by its |m|^2 shell and the shell values."""
    q = grid.box.shell_index()
    shells, labels = np.unique(q, return_inverse=True)
    return labels.reshape(q.shape), shells


def duhamel_kernel(freq: np.ndarray, b: np.ndarray, dt: float) -> np.ndarray:
    """h(c, t) = int_0^t sin(c (t - s)) / c * b(s) ds on a uniform time grid.

    Parameters
    ----------
    freq : (S,) nonnegative angular frequencies c.
    b : (..., n_time) forcing samples starting at t = 0.
    dt : time step.

    Returns
    -------
    Array of shape (..., S, n_time).
    """
    freq = np.asarray(freq, dtype=float)
    b = np.asarray(b, dtype=float)
    nt = b.shape[-1]
    t = dt * np.arange(nt)
    bb = b[..., None, :]
    out = np.empty(b.shape[:-1] + (freq.size, nt))
    pos = freq > 0
    if np.any(pos):
        c = freq[pos][:, None]
        ct, st = np.cos(c * t), np.sin(c * t)
        C = cumulative_simpson(bb * ct, dt)
        S = cumulative_simpson(bb * st, dt)
        out[..., pos, :] = (st * C - ct * S) / c
    if np.any(~pos):
        B0 = cumulative_simpson(b, dt)
        B1 = cumulative_simpson(b * t, dt)
        out[..., ~pos, :] = (t * B0 - B1)[..., None, :]
    return out


def nyquist_ratio(coeffs: np.ndarray) -> float:
    """Largest coefficient with some |m_d| >= n/2 - 1, relative to the largest overall."""
    n = coeffs.shape[0]
    m = np.abs(np.rint(np.fft.fftfreq(n, 1.0 / n)))
    edge = m >= n // 2 - 1
    mask = edge[:, None, None] | edge[None, :, None] | edge[None, None, :]
    peak = np.abs(coeffs).max()
    if peak == 0:
        return 0.0
    return float(np.abs(coeffs[mask]).max() / peak)


def _zero_nyquist(coeffs: np.ndarray) -> np.ndarray:
    n = coeffs.shape[0]
    coeffs = coeffs.copy()
    h = n // 2
    coeffs[h, :, :] = 0
    coeffs[:, h, :] = 0
    coeffs[:, :, h] = 0
    return coeffs


def solve(source: SourceSpec, grid: SimulationGrid) -> SpectralField:
    """Per-mode Duhamel solution of the forward problem.

    The returned field stores one spatial coefficient array per source term
    and the temporal kernel per |xi| shell, see
    :class:`wavesrc.spectral.SpectralField`.
    """
    source.check_support()
    if source.spatial_radius > grid.source_radius + 1e-12:
        raise GeometryError(
            f"source radius {source.spatial_radius:g} exceeds the grid's source radius {grid.source_radius:g}")
    box = grid.box
    X, Y, Z = box.nodes()
    spatial = []
    for k, a in enumerate(source.spatial_samples(X, Y, Z)):
        c = forward_dft3(a, box)
        ratio = nyquist_ratio(c)
        if ratio > RESOLUTION_TOL:
            raise ResolutionError(
                f"spatial factor {k} is under-resolved: spectral tail ratio {ratio:.2e} > {RESOLUTION_TOL:g}")
        spatial.append(_zero_nyquist(c))
    labels, shells = shell_labels(grid)
    freq = np.sqrt(grid.lam) * box.dxi * np.sqrt(shells)
    b = source.temporal_samples(grid.times)
    temporal = duhamel_kernel(freq, b, grid.dt)
    return SpectralField(grid, np.stack(spatial), labels, temporal)


def extract_boundary(fld: SpectralField, radius_R: float, n_theta: int = 24, n_phi: int = 48,
                     source_T0: float | None = None) -> BoundaryDataset:
    """Dirichlet and outward normal derivative traces on the sphere of radius R."""
    grid = fld.grid
    if radius_R >= grid.half_width_L:
        raise GeometryError(f"R = {radius_R:g} must be smaller than L = {grid.half_width_L:g}")
    if radius_R > grid.r_measure + 1e-12:
        raise GeometryError(f"R = {radius_R:g} exceeds the radius the grid was sized for ({grid.r_measure:g})")
    quad = SphereQuadrature(radius_R, n_theta, n_phi)
    pts, _ = quad.nodes()
    u, dn = evaluate_with_normal_derivative(fld, pts, pts / radius_R)
    return BoundaryDataset(radius_R, grid.lam, n_theta, n_phi, grid.times.copy(),
                           u.real, dn.real, 0.0, source_T0)


def huygens_cutoff(T0: float, R: float, lam: float) -> float:
    """Time after which u vanishes in B_R: T0 + 2R / sqrt(lambda).

    The wave speed is sqrt(lambda).  The form T0 + 2R / lambda, sometimes
    quoted, agrees with this only at lambda = 1.
    """
    return T0 + 2.0 * R / np.sqrt(lam)


def interior_points(R: float, fractions=(0.0, 0.3, 0.6, 0.9), n_theta: int = 6, n_phi: int = 12) -> np.ndarray:
    pts = [np.zeros((1, 3))]
    for f in fractions:
        if f > 0:
            pts.append(SphereQuadrature(f * R, n_theta, n_phi).nodes()[0])
    return np.concatenate(pts)


def verify_huygens(fld: SpectralField, source: SourceSpec, radius_R: float, tol: float = 1e-3) -> HuygensReport:
    """Check that the field has left B_R after T0 + 2R / sqrt(lambda)."""
    grid = fld.grid
    cutoff = huygens_cutoff(source.T0, radius_R, grid.lam)
    times = grid.times
    window = times > cutoff + 2 * grid.dt
    if not np.any(window):
        raise WindowError(f"horizon T = {grid.horizon_T:g} leaves no samples after {cutoff + 2 * grid.dt:g}")
    u = np.abs(evaluate_many([fld], interior_points(radius_R))[0])
    peak = u.max()
    ratio = float(u[:, window].max() / peak) if peak > 0 else 0.0
    return HuygensReport(float(cutoff), ratio, ratio <= tol, tol)


def smooth_noise(quad: SphereQuadrature, times: np.ndarray, rng: np.random.Generator,
                 n_waves: int = 64, k_max: float = 2.0, w_max: float = 2.0) -> np.ndarray:
    """Random superposition of plane waves cos(kappa . x - nu t + phase) on the sphere."""
    pts, _ = quad.nodes()
    direction = rng.normal(size=(n_waves, 3))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    kappa = direction * (k_max * rng.uniform(size=(n_waves, 1)) ** (1 / 3))
    nu = rng.uniform(-w_max, w_max, size=n_waves)
    phase = rng.uniform(0, 2 * np.pi, size=n_waves)
    amp = rng.normal(size=n_waves)
    # cos(kappa . x - nu t + phase) = Re[exp(i (kappa . x + phase)) exp(-i nu t)]
    space = np.exp(1j * (pts @ kappa.T + phase)) * amp      # (P, n_waves)
    waves = (space @ np.exp(-1j * np.outer(nu, times))).real
    # ramp in from zero so the perturbed traces keep zero initial values
    ramp = smooth_step(times / (0.05 * times[-1]))
    return waves * ramp


def add_noise(ds: BoundaryDataset, epsilon: float, seed: int = 0, kind: str = "smooth",
              **noise_options) -> BoundaryDataset:
    """Perturb both traces by relative surrogate norm ``epsilon``.

    Each trace receives an independent perturbation scaled so that its
    discrete space-time L2 norm equals ``epsilon`` times the norm of the
    clean trace.  ``kind="smooth"`` draws random band-limited plane waves,
    ``kind="white"`` draws independent Gaussian values per sample.
    """
    if not epsilon >= 0:
        raise ValueError(f"epsilon must be nonnegative, got {epsilon}")
    if epsilon == 0:
        return ds.replace(noise_level=0.0)
    rng = np.random.default_rng(seed)
    out = {}
    for name in ("dirichlet", "neumann"):
        clean = getattr(ds, name)
        if kind == "smooth":
            pert = smooth_noise(ds.quadrature, ds.times, rng, **noise_options)
        elif kind == "white":
            pert = rng.normal(size=clean.shape)
        else:
            raise ValueError(f"unknown noise kind {kind!r}")
        target = epsilon * ds.surrogate_norm(clean)
        norm = ds.surrogate_norm(pert)
        out[name] = clean + pert * (target / norm if norm > 0 else 0.0)
    return ds.replace(noise_level=float(epsilon), **out)
