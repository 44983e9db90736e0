"""Recovery of a general source F(x, t) from a family of wave speeds.

For every lambda in the sweep the boundary identity

    (2 pi)^2 F_hat(xi, omega) = lambda int int (u_lambda dw/dnu - w du_lambda/dnu) ds dt

holds on the cone omega = +/- sqrt(lambda) |xi|.  A finite set of lambdas
gives, for each spatial frequency xi, samples of F_hat along the omega
axis at omega = +/- sqrt(lambda_j) |xi|.  These are interpolated onto a
Cartesian omega grid and the result is inverted by a 4D discrete
transform over the region E(s) = {|xi| <= s, |omega| <= s |xi|}.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator

from .forward import add_noise, extract_boundary, huygens_cutoff, solve
from .probe import HorizonError, ball_modes, boundary_integrals, reconstruction_box
from .sources import SourceSpec
from .spectral import Box, GridError, PeriodicAxis, SimulationGrid, idft


class SweepError(RuntimeError):
    """A forward solve or extraction failed for one lambda of the sweep."""


def sqrt_lambda_ladder(Lambda: float, count: int = 8) -> np.ndarray:
    """lambda_j = (j Lambda / count)^2, j = 1..count.

    Equispaced square roots put the cone samples of every xi at equal
    omega spacing Lambda |xi| / count.
    """
    if not Lambda > 0:
        raise ValueError("Lambda must be positive")
    if count < 1:
        raise ValueError("need at least one lambda")
    return (Lambda * np.arange(1, count + 1) / count) ** 2


@dataclass
class LambdaSweep:
    """Boundary datasets for increasing lambda, all on one sphere and time step."""

    lambdas: np.ndarray
    datasets: list
    Lambda: float

    def __post_init__(self):
        self.lambdas = np.asarray(self.lambdas, dtype=float)
        if self.lambdas.size != len(self.datasets):
            raise ValueError("one dataset per lambda is required")
        if np.any(np.diff(self.lambdas) <= 0):
            raise ValueError("lambdas must be strictly increasing")
        if self.lambdas[0] <= 0 or self.lambdas[-1] > self.Lambda ** 2 * (1 + 1e-12):
            raise ValueError("lambdas must lie in (0, Lambda^2]")
        first = self.datasets[0]
        for lam, ds in zip(self.lambdas, self.datasets):
            if not np.isclose(ds.lam, lam, rtol=1e-14):
                raise ValueError(f"dataset lambda {ds.lam:g} does not match key {lam:g}")
            if (ds.radius_R, ds.n_theta, ds.n_phi) != (first.radius_R, first.n_theta, first.n_phi):
                raise ValueError("all datasets must share the measurement sphere")
            if not np.isclose(ds.dt, first.dt, rtol=1e-12):
                raise ValueError("all datasets must share the time step")

    @property
    def radius_R(self) -> float:
        return self.datasets[0].radius_R

    def with_noise(self, epsilon: float, seed: int = 0, **options) -> "LambdaSweep":
        """Independent perturbation of every dataset, seeded by (seed, j)."""
        noisy = [add_noise(ds, epsilon, seed=[seed, j], **options) for j, ds in enumerate(self.datasets)]
        return LambdaSweep(self.lambdas.copy(), noisy, self.Lambda)


def lambda_horizon(T0: float, R: float, lam: float, dt: float, margin: float = 0.6) -> tuple[float, int]:
    """Horizon past the Huygens time, rounded up to a whole number of steps."""
    need = huygens_cutoff(T0, R, lam) + margin
    steps = int(np.ceil(need / dt - 1e-9))
    return steps * dt, steps + 1


def sweep_forward(source: SourceSpec, template: SimulationGrid, lambdas, radius_R: float,
                  n_theta: int = 24, n_phi: int = 48, Lambda: float | None = None,
                  margin: float = 0.6, per_lambda_horizon: bool = True) -> LambdaSweep:
    """One forward solve and trace extraction per lambda.

    Parameters
    ----------
    template : grid whose box and time step are shared by every lambda.
    per_lambda_horizon : if true, each lambda gets the shortest horizon
        that passes T0 + 2R / sqrt(lambda) by ``margin``; otherwise the
        template horizon is used for all.
    """
    lambdas = np.asarray(lambdas, dtype=float)
    if Lambda is None:
        Lambda = float(np.sqrt(lambdas.max()))
    datasets = []
    for lam in lambdas:
        if per_lambda_horizon:
            T, nt = lambda_horizon(source.T0, radius_R, lam, template.dt, margin)
        else:
            T, nt = template.horizon_T, template.n_time
        try:
            grid = template.with_lambda(float(lam), T, nt)
            fld = solve(source, grid)
            datasets.append(extract_boundary(fld, radius_R, n_theta, n_phi, source.T0))
        except (GridError, ValueError) as exc:
            raise SweepError(f"lambda = {lam:g}: {exc}") from exc
    return LambdaSweep(lambdas, datasets, float(Lambda))


@dataclass
class ConeSamples4D:
    """F_hat(xi, omega) on the cone family omega = +/- sqrt(lambda_j) |xi|.

    ``values[q, :]`` holds the samples of mode ``modes[q]`` ordered by
    increasing omega, i.e. at row q of ``omega()`` =
    ``|xi_q| * [-s_J, ..., -s_1, s_1, ..., s_J]`` with ``s_j = sqrt(lambda_j)``.
    """

    box: Box
    modes: np.ndarray
    sqrt_lams: np.ndarray
    values: np.ndarray
    Lambda: float

    @property
    def xi(self) -> np.ndarray:
        return self.modes * self.box.dxi

    @property
    def signed_speeds(self) -> np.ndarray:
        return np.concatenate([-self.sqrt_lams[::-1], self.sqrt_lams])

    def omega(self) -> np.ndarray:
        return np.outer(np.linalg.norm(self.xi, axis=1), self.signed_speeds)

    def conjugate_residual(self) -> float:
        """max |v(-xi, -omega) - conj v(xi, omega)| relative to max |v|."""
        lookup = {tuple(m): i for i, m in enumerate(self.modes)}
        partner = np.array([lookup[tuple(-m)] for m in self.modes])
        scale = np.abs(self.values).max(initial=0.0)
        if scale == 0:
            return 0.0
        diff = self.values[partner][:, ::-1] - np.conj(self.values)
        return float(np.abs(diff).max() / scale)


def extract_Fhat_cones(sweep: LambdaSweep, box: Box | None = None, band: float | None = None) -> ConeSamples4D:
    """Boundary integrals of every dataset on its own cone, for all grid xi with |xi| <= band."""
    band = sweep.Lambda if band is None else band
    R = sweep.radius_R
    if box is None:
        box = reconstruction_box(R, band)
    for lam, ds in zip(sweep.lambdas, sweep.datasets):
        if ds.source_T0 is not None and not ds.horizon > huygens_cutoff(ds.source_T0, R, lam):
            raise HorizonError(f"lambda = {lam:g}: horizon {ds.horizon:g} ends before the Huygens time")
    half = ball_modes(box, band, half=True)
    xi = half * box.dxi
    r = np.linalg.norm(xi, axis=1)
    J = sweep.lambdas.size
    s = np.sqrt(sweep.lambdas)
    pos = np.empty((half.shape[0], J), complex)
    neg = np.empty_like(pos)
    for j, ds in enumerate(sweep.datasets):
        pos[:, j] = boundary_integrals(ds, xi, s[j] * r)
        neg[:, j] = boundary_integrals(ds, xi, -s[j] * r)
    half_vals = np.concatenate([neg[:, ::-1], pos], axis=1)
    nonzero = np.any(half != 0, axis=1)
    modes = np.concatenate([half, -half[nonzero]])
    # F_hat(-xi, -omega) = conj F_hat(xi, omega): reversing the omega order maps the row
    values = np.concatenate([half_vals, np.conj(half_vals[nonzero][:, ::-1])])
    return ConeSamples4D(box, modes, s, values, float(sweep.Lambda))


def time_axis_for(T0: float, Lambda: float, band: float | None = None, pad: float | None = None,
                  n: int | None = None) -> PeriodicAxis:
    """Periodic time axis around (0, T0) whose frequencies reach Lambda * band."""
    band = Lambda if band is None else band
    pad = 0.25 * T0 if pad is None else pad
    period = T0 + 2 * pad
    if n is None:
        n = 2 * int(np.ceil(Lambda * band * period / (2 * np.pi))) + 8
        n += n % 2
    return PeriodicAxis(-pad, period, n)


@dataclass
class Grid4Samples:
    """F_hat on the Cartesian grid of ``box`` x ``time_axis``, FFT ordered.

    ``covered`` marks entries that lie inside the sampled cone range;
    everything else is zero.
    """

    box: Box
    time_axis: PeriodicAxis
    values: np.ndarray
    covered: np.ndarray
    Lambda: float
    warnings: list = field(default_factory=list)

    @property
    def cell(self) -> float:
        return self.box.dxi ** 3 * self.time_axis.fundamental

    def frequency_magnitudes(self) -> tuple[np.ndarray, np.ndarray]:
        """|xi| and |omega| broadcastable against ``values``."""
        k = self.box.axis.freqs
        r = np.sqrt(k[:, None, None] ** 2 + k[None, :, None] ** 2 + k[None, None, :] ** 2)
        return r[..., None], np.abs(self.time_axis.freqs)[None, None, None, :]


def resample_to_grid4(cones: ConeSamples4D, time_axis: PeriodicAxis, center: float | None = None) -> Grid4Samples:
    """Monotone cubic interpolation along omega for every sampled xi.

    A source concentrated near time ``center`` has F_hat(xi, omega) close
    to a smooth function times exp(-i omega center).  The samples are
    multiplied by exp(i omega center) before interpolating and the factor
    is restored afterwards, so the interpolant only has to follow the
    slowly varying envelope.  ``center`` defaults to the midpoint of the
    time axis.  Targets with |omega| beyond the largest cone speed times
    |xi| are left at zero and not flagged as covered.
    """
    n = cones.box.n
    nt = time_axis.n
    values = np.zeros((n, n, n, nt), complex)
    covered = np.zeros((n, n, n, nt), bool)
    notes = []
    if cones.sqrt_lams.size < 4:
        notes.append(f"only {cones.sqrt_lams.size} lambda values; interpolation in omega is coarse")
    w = time_axis.freqs
    if center is None:
        center = time_axis.origin + 0.5 * time_axis.period
    speeds = cones.signed_speeds
    smax = cones.sqrt_lams[-1]
    r = np.linalg.norm(cones.xi, axis=1)
    idx = cones.modes % n
    for q in range(cones.modes.shape[0]):
        a, b, c = idx[q]
        if r[q] == 0:
            zero = np.flatnonzero(w == 0)
            values[a, b, c, zero] = cones.values[q, speeds.size // 2]
            covered[a, b, c, zero] = True
            continue
        inside = np.abs(w) <= smax * r[q] * (1 + 1e-12)
        if not np.any(inside):
            continue
        if speeds.size < 2:
            notes.append(f"mode {tuple(cones.modes[q])}: fewer than 2 samples along omega")
            continue
        x = speeds * r[q]
        v = cones.values[q] * np.exp(1j * x * center)
        wq = np.clip(w[inside], x[0], x[-1])
        re = PchipInterpolator(x, v.real)(wq)
        im = PchipInterpolator(x, v.imag)(wq)
        values[a, b, c, inside] = (re + 1j * im) * np.exp(-1j * w[inside] * center)
        covered[a, b, c, inside] = True
    return Grid4Samples(cones.box, time_axis, values, covered, cones.Lambda, notes)


@dataclass(frozen=True)
class TruncationReport:
    """Energy of the retained set and of the discarded regions.

    ``E1`` is the part with |xi| > s and |omega| <= s |xi|; ``E2`` the part
    with |omega| > s |xi|.  The three sets partition the frequency grid.
    """

    s: float
    total: float
    kept: float
    E1: float
    E2: float

    @property
    def discarded(self) -> float:
        return self.E1 + self.E2

    def fractions(self) -> dict:
        if self.total == 0:
            return {"kept": 0.0, "E1": 0.0, "E2": 0.0, "discarded": 1.0}
        return {"kept": self.kept / self.total, "E1": self.E1 / self.total,
                "E2": self.E2 / self.total, "discarded": self.discarded / self.total}

    def as_dict(self) -> dict:
        return {"s": self.s, "total": self.total, "kept": self.kept, "E1": self.E1, "E2": self.E2,
                "fractions": self.fractions()}


def region_E(r, w, s: float):
    """Membership in E(s) = {|xi| <= s, |omega| <= s |xi|}."""
    tol = 1e-12 * max(s, 1.0)
    return (r <= s + tol) & (w <= s * r + tol)


def invert4(samples: Grid4Samples, s: float) -> tuple[np.ndarray, TruncationReport]:
    """Inverse 4D transform of the samples restricted to E(s).

    Returns
    -------
    F on the nodes of ``samples.box`` x ``samples.time_axis`` (real part),
    and the energy report.
    """
    if s < 0:
        raise ValueError("cutoff must be nonnegative")
    if s > samples.Lambda * (1 + 1e-12):
        raise ValueError(f"cutoff {s:g} exceeds the window Lambda = {samples.Lambda:g}")
    r, w = samples.frequency_magnitudes()
    keep = region_E(r, w, s) if s > 0 else np.zeros(samples.values.shape, bool)
    energy = np.abs(samples.values) ** 2 * samples.cell
    beyond = np.broadcast_to(w > s * r + 1e-12 * max(s, 1.0), energy.shape) & ~keep
    rep = TruncationReport(float(s), float(energy.sum()), float(energy[keep].sum()),
                           float(energy[~keep & ~beyond].sum()), float(energy[beyond].sum()))
    coeffs = np.where(keep, samples.values, 0.0)
    F = idft(coeffs, (*samples.box.axes, samples.time_axis)).real
    return F, rep


def sample_source(source: SourceSpec, box: Box, time_axis: PeriodicAxis) -> np.ndarray:
    """F on the reconstruction nodes, shape (n, n, n, nt)."""
    X, Y, Z = box.nodes()
    t = time_axis.nodes
    out = np.zeros((box.n,) * 3 + (t.size,))
    for k in range(source.n_terms):
        a = np.asarray(source.spatial_factor(k)(X, Y, Z), dtype=float)
        b = np.asarray(source.temporal[k](t), dtype=float)
        out += a[..., None] * b
    return out
