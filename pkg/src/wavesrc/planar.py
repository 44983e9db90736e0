"""Recovery of f(x1, x2, t) when F(x, t) = f(x1, x2, t) g(x3) with g known.

With lambda = 1 the boundary integral at a test frequency (xi, omega) on
the cone omega^2 = |xi|^2 equals f_hat(xi1, xi2, omega) g_hat(xi3).  For a
target (xi1, xi2, omega) with |omega| >= |xi~| the third component is
fixed by xi3 = sign(omega) sqrt(omega^2 - |xi~|^2), so one dataset gives
f_hat on the set

    E(b) = {|xi~| <= b, |xi~| <= |omega|, omega^2 - |xi~|^2 < b^2}

where xi~ = (xi1, xi2).  The region |omega| < |xi~| is not reached by the
identity; :func:`continuation_fill` extends f_hat there by polynomial
least squares.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .forward import BoundaryDataset
from .probe import DELTA_MIN, BandConditionError, boundary_integrals, check_bandwidth_condition, ghat
from .spectral import PeriodicAxis, idft


class PlanarGeometryError(ValueError):
    """The planar support does not satisfy R0 < R / sqrt(2)."""


class FitError(ValueError):
    """Least-squares continuation is underdetermined."""


@dataclass(frozen=True)
class PlanarGrid:
    """Periodic grid for f(x1, x2, t): a square in x~ and an interval in t."""

    space: PeriodicAxis
    time: PeriodicAxis

    @property
    def axes(self) -> tuple[PeriodicAxis, PeriodicAxis, PeriodicAxis]:
        return (self.space, self.space, self.time)

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.space.n, self.space.n, self.time.n)

    @property
    def cell(self) -> float:
        return self.space.fundamental ** 2 * self.time.fundamental

    def nodes(self):
        x = self.space.nodes
        return np.meshgrid(x, x, self.time.nodes, indexing="ij")


def planar_grid(R0: float, T0: float, b: float, pad: float = 8.0, n_space: int | None = None,
                n_time: int | None = None) -> PlanarGrid:
    """Grid whose frequency spacing is ``pad`` times finer than the support needs.

    The spatial period is 2 pad R0 and the temporal period pad T0, centred
    on the support; the node counts reach frequency sqrt(2) b.
    """
    half = pad * R0
    tpad = 0.5 * (pad - 1.0) * T0
    space = PeriodicAxis(-half, 2 * half, 2)
    time = PeriodicAxis(-tpad, pad * T0, 2)
    top = np.sqrt(2.0) * b
    if n_space is None:
        n_space = 2 * int(np.ceil(top / space.fundamental)) + 4
    if n_time is None:
        n_time = 2 * int(np.ceil(top / time.fundamental)) + 4
    return PlanarGrid(PeriodicAxis(-half, 2 * half, n_space), PeriodicAxis(-tpad, pad * T0, n_time))


@dataclass
class PlanarSamples:
    """f_hat(xi1, xi2, omega) at integer modes of ``grid``.

    ``xi3`` is the third test frequency used for the entry; it is NaN for
    entries produced by continuation, which are flagged ``extrapolated``.
    """

    grid: PlanarGrid
    modes: np.ndarray
    value: np.ndarray
    xi3: np.ndarray
    divisor_mag: np.ndarray
    valid: np.ndarray
    extrapolated: np.ndarray
    band_b: float

    @property
    def xi1(self) -> np.ndarray:
        return self.modes[:, 0] * self.grid.space.fundamental

    @property
    def xi2(self) -> np.ndarray:
        return self.modes[:, 1] * self.grid.space.fundamental

    @property
    def omega(self) -> np.ndarray:
        return self.modes[:, 2] * self.grid.time.fundamental

    def __len__(self) -> int:
        return self.value.size

    def dispersion_residual(self) -> float:
        """max |omega^2 - |xi~|^2 - xi3^2| over extracted entries."""
        m = ~self.extrapolated
        res = self.omega[m] ** 2 - self.xi1[m] ** 2 - self.xi2[m] ** 2 - self.xi3[m] ** 2
        return float(np.max(np.abs(res), initial=0.0))

    def conjugate_residual(self) -> float:
        lookup = {tuple(m): i for i, m in enumerate(self.modes)}
        scale = np.abs(self.value).max(initial=0.0)
        if scale == 0:
            return 0.0
        worst = 0.0
        for i, m in enumerate(self.modes):
            j = lookup.get(tuple(-m))
            if j is not None:
                worst = max(worst, abs(self.value[j] - np.conj(self.value[i])))
        return worst / scale

    def to_grid(self, mask: np.ndarray | None = None) -> np.ndarray:
        out = np.zeros(self.grid.shape, complex)
        keep = self.valid if mask is None else (self.valid & mask)
        idx = self.modes[keep]
        out[idx[:, 0] % self.grid.space.n, idx[:, 1] % self.grid.space.n, idx[:, 2] % self.grid.time.n] = \
            self.value[keep]
        return out


def _target_modes(grid: PlanarGrid, b: float) -> np.ndarray:
    """Modes with omega >= 0 (omega > 0 unless xi~ = 0) inside the closure of E(b)."""
    ms = grid.space.index
    ms = ms[np.abs(ms) < grid.space.n // 2]
    mt = grid.time.index
    mt = mt[(mt >= 0) & (mt < grid.time.n // 2)]
    M1, M2, MT = np.meshgrid(ms, ms, mt, indexing="ij")
    modes = np.stack([M1.ravel(), M2.ravel(), MT.ravel()], axis=1)
    h, k = grid.space.fundamental, grid.time.fundamental
    r2 = (modes[:, 0] ** 2 + modes[:, 1] ** 2) * h * h
    w2 = (modes[:, 2] * k) ** 2
    tol = 1e-12 * max(b * b, 1.0)
    keep = (r2 <= b * b + tol) & (r2 <= w2 + tol) & (w2 - r2 <= b * b + tol)
    modes = modes[keep]
    order = np.lexsort((modes[:, 2], modes[:, 1], modes[:, 0]))
    return modes[order]


def extract_fhat_planar(ds: BoundaryDataset, g: np.ndarray, z: np.ndarray, b: float, R0: float,
                        grid: PlanarGrid, delta_min: float = DELTA_MIN) -> PlanarSamples:
    """f_hat on the grid points of E(b) from one dataset with lambda = 1.

    Parameters
    ----------
    g, z : samples of the vertical factor g(x3) on a uniform grid ``z``
        covering (-R0, R0).
    R0 : radius of the planar support; must satisfy R0 < R / sqrt(2).
    grid : frequency grid of the reconstruction.
    """
    if not R0 < ds.radius_R / np.sqrt(2.0):
        raise PlanarGeometryError(f"need R0 < R / sqrt(2): R0 = {R0:g}, R = {ds.radius_R:g}")
    if not np.isclose(ds.lam, 1.0):
        raise ValueError("the planar pipeline assumes lambda = 1")
    # g is real, so |g_hat| is even and checking (0, b) covers (-b, b)
    cond = check_bandwidth_condition(g, z, b, delta_min)
    if not cond.satisfied:
        raise BandConditionError(f"min |g_hat| on (-{b:g}, {b:g}) is {cond.delta:.3e} < {delta_min:g}")
    half = _target_modes(grid, b)
    h, k = grid.space.fundamental, grid.time.fundamental
    x1, x2, w = half[:, 0] * h, half[:, 1] * h, half[:, 2] * k
    x3 = np.sqrt(np.clip(w ** 2 - x1 ** 2 - x2 ** 2, 0.0, None))   # omega >= 0 on the half set
    xi = np.stack([x1, x2, x3], axis=1)
    bi = boundary_integrals(ds, xi, np.sqrt(np.sum(xi ** 2, axis=1)))
    gh = ghat(g, x3, z)
    mag = np.abs(gh)
    valid = (mag >= delta_min) & (x3 < b * (1 - 1e-12))
    value = np.where(valid, bi / np.where(valid, gh, 1.0), 0.0)
    nz = np.any(half != 0, axis=1)
    return PlanarSamples(
        grid=grid,
        modes=np.concatenate([half, -half[nz]]),
        value=np.concatenate([value, np.conj(value[nz])]),
        xi3=np.concatenate([x3, -x3[nz]]),
        divisor_mag=np.concatenate([mag, mag[nz]]),
        valid=np.concatenate([valid, valid[nz]]),
        extrapolated=np.zeros(half.shape[0] + int(nz.sum()), bool),
        band_b=float(b))


def monomial_exponents(degree: int) -> np.ndarray:
    """Exponent triples of all monomials of total degree <= ``degree``."""
    out = [(i, j, degree_k - i - j) for degree_k in range(degree + 1)
           for i in range(degree_k, -1, -1) for j in range(degree_k - i, -1, -1)]
    return np.array(out, dtype=int)


def fit_degree(n_samples: int, max_degree: int, oversample: float = 2.0) -> int:
    """Largest degree <= ``max_degree`` with at least ``oversample`` samples per coefficient."""
    d = max_degree
    while d > 0 and n_samples < oversample * monomial_exponents(d).shape[0]:
        d -= 1
    return d


def _design(points: np.ndarray, exps: np.ndarray) -> np.ndarray:
    return np.prod(points[:, None, :] ** exps[None, :, :], axis=2)


def gap_modes(grid: PlanarGrid, b: float) -> np.ndarray:
    """Modes with |xi~| > |omega| and |(xi~, omega)| <= b."""
    ms = grid.space.index
    ms = ms[np.abs(ms) < grid.space.n // 2]
    mt = grid.time.index
    mt = mt[np.abs(mt) < grid.time.n // 2]
    M1, M2, MT = np.meshgrid(ms, ms, mt, indexing="ij")
    modes = np.stack([M1.ravel(), M2.ravel(), MT.ravel()], axis=1)
    h, k = grid.space.fundamental, grid.time.fundamental
    r2 = (modes[:, 0] ** 2 + modes[:, 1] ** 2) * h * h
    w2 = (modes[:, 2] * k) ** 2
    tol = 1e-12 * max(b * b, 1.0)
    modes = modes[(r2 > w2 + tol) & (r2 + w2 <= b * b + tol)]
    order = np.lexsort((modes[:, 2], modes[:, 1], modes[:, 0]))
    return modes[order]


def continuation_fill(samples: PlanarSamples, b: float | None = None, degree: int = 8,
                      center: float | None = None) -> PlanarSamples:
    """Extend f_hat into the gap {|xi~| > |omega|, |(xi~, omega)| <= b}.

    A complex polynomial of total degree ``degree`` in the scaled
    coordinates (xi1, xi2, omega) / b is fitted by least squares to all
    valid extracted entries and evaluated at the gap modes.  Existing
    entries are left untouched; new entries are flagged ``extrapolated``.

    The fit is applied to f_hat exp(i omega center), which removes the
    phase rotation of a time factor supported around ``center`` (by
    default the midpoint of the grid's time period, where the planar grid
    places the support).
    """
    b = samples.band_b if b is None else float(b)
    if degree < 0:
        raise ValueError("degree must be nonnegative")
    src = samples.valid & ~samples.extrapolated
    exps = monomial_exponents(degree)
    if src.sum() < exps.shape[0]:
        raise FitError(f"{src.sum()} samples cannot determine {exps.shape[0]} coefficients")
    tax = samples.grid.time
    c = tax.origin + 0.5 * tax.period if center is None else float(center)
    pts = np.stack([samples.xi1, samples.xi2, samples.omega], axis=1) / b
    demod = samples.value[src] * np.exp(1j * samples.omega[src] * c)
    coef, *_ = np.linalg.lstsq(_design(pts[src], exps), demod, rcond=None)
    gap = gap_modes(samples.grid, b)
    present = {tuple(m) for m in samples.modes}
    gap = np.array([m for m in gap if tuple(m) not in present], dtype=int).reshape(-1, 3)
    h, k = samples.grid.space.fundamental, samples.grid.time.fundamental
    gpts = np.stack([gap[:, 0] * h, gap[:, 1] * h, gap[:, 2] * k], axis=1) / b
    fill = (_design(gpts, exps) @ coef) * np.exp(-1j * gpts[:, 2] * b * c)
    m = gap.shape[0]
    return dataclasses.replace(
        samples,
        modes=np.concatenate([samples.modes, gap]),
        value=np.concatenate([samples.value, fill]),
        xi3=np.concatenate([samples.xi3, np.full(m, np.nan)]),
        divisor_mag=np.concatenate([samples.divisor_mag, np.full(m, np.nan)]),
        valid=np.concatenate([samples.valid, np.ones(m, bool)]),
        extrapolated=np.concatenate([samples.extrapolated, np.ones(m, bool)]))


@dataclass(frozen=True)
class PlanarReport:
    """Energy per frequency region for cutoff s.

    ``E`` is the retained part of E(s); ``E1`` the rest of the cone interior
    |xi~| <= |omega|; ``E2`` the gap |xi~| > |omega| inside radius s; ``E3``
    the gap outside radius s.  These four sets partition the grid.  ``kept``
    is E plus, when the fill is used, E2.
    """

    s: float
    total: float
    kept: float
    E: float
    E1: float
    E2: float
    E3: float
    used_fill: bool

    @property
    def discarded(self) -> float:
        return self.total - self.kept

    def as_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["discarded"] = self.discarded
        return d


def planar_regions(grid: PlanarGrid, s: float) -> dict[str, np.ndarray]:
    """Boolean masks of the four regions on the full grid (FFT order)."""
    k = grid.space.freqs
    r2 = k[:, None, None] ** 2 + k[None, :, None] ** 2
    w2 = (grid.time.freqs ** 2)[None, None, :]
    tol = 1e-12 * max(s * s, 1.0)
    cone = r2 <= w2 + tol
    E = cone & (r2 <= s * s + tol) & (w2 - r2 < s * s - tol)
    E1 = cone & ~E
    E2 = ~cone & (r2 + w2 <= s * s + tol)
    E3 = ~cone & ~E2
    return {"E": E, "E1": E1, "E2": np.broadcast_to(E2, E.shape), "E3": np.broadcast_to(E3, E.shape)}


def invert_planar(samples: PlanarSamples, s: float, use_fill: bool = True) -> tuple[np.ndarray, PlanarReport]:
    """f on the nodes of ``samples.grid`` from the entries in E(s).

    With ``use_fill`` the extrapolated entries of the gap inside radius s
    are kept as well.
    """
    if s < 0:
        raise ValueError("cutoff must be nonnegative")
    grid = samples.grid
    values = samples.to_grid()
    regions = planar_regions(grid, s)
    keep = regions["E"] | (regions["E2"] if use_fill else False)
    if s == 0:
        keep = np.zeros(grid.shape, bool)
    energy = np.abs(values) ** 2 * grid.cell
    parts = {name: float(energy[m].sum()) for name, m in regions.items()}
    rep = PlanarReport(float(s), float(energy.sum()), float(energy[keep].sum()),
                       parts["E"], parts["E1"], parts["E2"], parts["E3"], bool(use_fill))
    f = idft(np.where(keep, values, 0.0), grid.axes).real
    return f, rep
