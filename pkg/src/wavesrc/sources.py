"""Source descriptors for the wave equation d_t^2 u - lambda Lap u = F.

Every source is held as a finite sum of separable terms
``F(x, t) = sum_k a_k(x) b_k(t)``.  Spatial and temporal factors are
closed-form profiles that can be sampled on any grid; some of them also
know their own Fourier transform, which the tests use as an oracle.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import warnings

import numpy as np
from scipy import integrate, special

SUPPORT_TOL = 1e-12


class SourceError(ValueError):
    """Source violates its declared support or the required geometry."""


def smooth_step(s):
    """C-infinity transition from 0 (s <= 0) to 1 (s >= 1)."""
    s = np.asarray(s, dtype=float)
    a = np.where(s > 0, np.exp(-1.0 / np.where(s > 0, s, 1.0)), 0.0)
    b = np.where(s < 1, np.exp(-1.0 / np.where(s < 1, 1.0 - s, 1.0)), 0.0)
    return a / (a + b)


def radial_taper(r, start: float, end: float):
    """Equals 1 for r <= start, 0 for r >= end, smooth in between."""
    return 1.0 - smooth_step((np.asarray(r) - start) / (end - start))


def radial_transform(profile: Callable, k, dim: int, breaks: Sequence[float]) -> np.ndarray:
    """Fourier transform of a radial function by adaptive quadrature in r.

    Uses the reduction of a radial transform to one dimension: kernel
    r^2 sin(kr)/(kr) in 3D, r J0(kr) in 2D and cos(kr) in 1D.  ``breaks``
    lists the radii where the profile is not smooth; the last entry is the
    outer support radius.
    """
    k = np.atleast_1d(np.asarray(k, dtype=float))
    if dim == 3:
        kern = lambda r, q: r ** 2 * np.sinc(q * r / np.pi)
        scale = 4 * np.pi / (2 * np.pi) ** 1.5
    elif dim == 2:
        kern = lambda r, q: r * special.j0(q * r)
        scale = 1.0
    elif dim == 1:
        kern = lambda r, q: np.cos(q * r)
        scale = 2.0 / np.sqrt(2 * np.pi)
    else:
        raise ValueError("dim must be 1, 2 or 3")
    edges = [0.0, *breaks]
    out = np.empty(k.size)
    with warnings.catch_warnings():
        # roundoff warnings appear where the integrand underflows; harmless
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        _radial_loop(profile, k, kern, edges, out)
    return scale * out.reshape(k.shape)


def _radial_loop(profile, k, kern, edges, out):
    for i, q in enumerate(k.ravel()):
        # split long intervals so oscillatory integrands stay well resolved
        total = 0.0
        for lo, hi in zip(edges[:-1], edges[1:]):
            pieces = max(1, int(np.ceil(q * (hi - lo) / np.pi)))
            for j in range(pieces):
                u0 = lo + (hi - lo) * j / pieces
                u1 = lo + (hi - lo) * (j + 1) / pieces
                total += integrate.quad(lambda r: profile(r) * kern(r, q), u0, u1,
                                        epsabs=0.0, epsrel=1e-12, limit=200)[0]
        out[i] = total


class RadialProfile:
    """Base class for centered radial profiles in ``dim`` dimensions."""

    dim: int
    amplitude: float

    def radial(self, r):
        raise NotImplementedError

    def _breaks(self) -> Sequence[float]:
        return [self.support_radius]

    def __call__(self, *coords):
        r = np.sqrt(sum(np.asarray(x, dtype=float) ** 2 for x in coords))
        return self.amplitude * self.radial(r)

    def exact_transform(self, k) -> np.ndarray:
        """Transform of the profile itself (radial quadrature), as a function of |k|."""
        return self.amplitude * radial_transform(self.radial, k, self.dim, self._breaks())

    def transform_at(self, *freqs) -> np.ndarray:
        k = np.sqrt(sum(np.asarray(q, dtype=float) ** 2 for q in freqs))
        return self.exact_transform(k)

    def sq_norm(self) -> float:
        """Squared L2 norm by radial quadrature."""
        area = {1: 2.0, 2: 2 * np.pi, 3: 4 * np.pi}[self.dim]
        val = sum(integrate.quad(lambda r: self.radial(r) ** 2 * r ** (self.dim - 1), lo, hi, epsrel=1e-12)[0]
                  for lo, hi in zip([0.0, *self._breaks()[:-1]], self._breaks()))
        return float(self.amplitude ** 2 * area * val)


@dataclass(frozen=True)
class TaperedGaussian(RadialProfile):
    """exp(-r^2 / (2 sigma^2)) times a smooth radial cutoff on [taper_start, taper_end].

    ``transform`` gives the closed-form transform of the untruncated
    Gaussian, which differs from the tapered profile by at most its value
    at ``taper_start``; ``exact_transform`` integrates the tapered profile.
    """

    sigma: float
    taper_start: float
    taper_end: float
    dim: int = 3
    amplitude: float = 1.0

    def __post_init__(self):
        if not 0 < self.taper_start < self.taper_end:
            raise SourceError("need 0 < taper_start < taper_end")

    @property
    def support_radius(self) -> float:
        return self.taper_end

    def _breaks(self):
        return [self.taper_start, self.taper_end]

    def radial(self, r):
        r = np.asarray(r, dtype=float)
        return np.exp(-r ** 2 / (2 * self.sigma ** 2)) * radial_taper(r, self.taper_start, self.taper_end)

    def transform(self, *freqs):
        """Closed-form transform of the untruncated Gaussian, (2 pi)^(-dim/2) normalization."""
        k2 = sum(np.asarray(q) ** 2 for q in freqs)
        return self.amplitude * self.sigma ** self.dim * np.exp(-self.sigma ** 2 * k2 / 2)

    def gaussian_sq_norm(self) -> float:
        return self.amplitude ** 2 * (np.sqrt(np.pi) * self.sigma) ** self.dim


@dataclass(frozen=True)
class KaiserBessel(RadialProfile):
    """I0(beta sqrt(1 - (r/a)^2)) / I0(beta) for r < a, zero beyond.

    Near the origin this behaves like a Gaussian of width a / sqrt(beta).
    The value at the edge is 1 / I0(beta) (about 1e-12 for beta = 30.5),
    and the spectrum is negligible beyond |k| of order beta / a, which
    makes the profile nearly optimal for joint concentration in space and
    frequency.
    """

    radius: float
    beta: float = 30.5
    dim: int = 3
    amplitude: float = 1.0

    @property
    def support_radius(self) -> float:
        return self.radius

    @property
    def effective_sigma(self) -> float:
        return self.radius / np.sqrt(self.beta)

    def radial(self, r):
        r = np.asarray(r, dtype=float)
        inside = r < self.radius
        s = np.sqrt(np.clip(1 - (r / self.radius) ** 2, 0, None))
        val = special.i0e(self.beta * s) / special.i0e(self.beta) * np.exp(self.beta * (s - 1))
        return np.where(inside, val, 0.0)


@dataclass(frozen=True)
class Bump:
    """exp(1 - 1 / (1 - s^2)) with s mapping (t0, t1) onto (-1, 1)."""

    t0: float
    t1: float
    amplitude: float = 1.0

    @property
    def support(self) -> tuple[float, float]:
        return (self.t0, self.t1)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        s = (2 * t - self.t0 - self.t1) / (self.t1 - self.t0)
        inside = np.abs(s) < 1
        safe = np.where(inside, s, 0.0)
        return np.where(inside, self.amplitude * np.exp(1.0 - 1.0 / (1.0 - safe ** 2)), 0.0)


@dataclass(frozen=True)
class WindowedPulse:
    """Gaussian pulse exp(-(t - c)^2 / eta) times a smooth window on (t0, t1).

    The window is flat on (t0 + ramp, t1 - ramp).
    """

    t0: float
    t1: float
    center: float
    eta: float
    ramp: float = 0.2
    amplitude: float = 1.0

    @property
    def support(self) -> tuple[float, float]:
        return (self.t0, self.t1)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        w = smooth_step((t - self.t0) / self.ramp) * smooth_step((self.t1 - t) / self.ramp)
        return self.amplitude * np.exp(-(t - self.center) ** 2 / self.eta) * w

    def transform(self, omega):
        """Transform of the unwindowed Gaussian, (2 pi)^(-1/2) normalization."""
        omega = np.asarray(omega)
        return (self.amplitude * np.sqrt(self.eta / 2) * np.exp(-self.eta * omega ** 2 / 4)
                * np.exp(-1j * omega * self.center))


@dataclass(frozen=True)
class Product3D:
    """a(x1, x2) * c(x3): the spatial factor of a planar source."""

    planar: Callable
    vertical: Callable

    def __call__(self, x, y, z):
        return self.planar(x, y) * self.vertical(z)


@dataclass
class SourceSpec:
    """F(x, t) = sum_k spatial[k](x) * temporal[k](t).

    Parameters
    ----------
    kind : {"separable_xt", "general", "planar"}
    spatial, temporal : sequences of callables of equal length.  For
        ``planar`` each spatial entry is a function of (x1, x2) and
        ``vertical`` holds the common factor g(x3).
    support_radius : radius of a ball centred at the origin that contains
        the spatial support (for ``planar``, this is R0 of the planar
        cross-section and the vertical half-length).
    T0 : the temporal factors vanish outside (0, T0).
    """

    kind: str
    spatial: Sequence[Callable]
    temporal: Sequence[Callable]
    support_radius: float
    T0: float
    vertical: Callable | None = None
    label: str = ""
    _checked: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.kind not in ("separable_xt", "general", "planar"):
            raise SourceError(f"unknown source kind {self.kind!r}")
        if len(self.spatial) != len(self.temporal) or not self.spatial:
            raise SourceError("need the same positive number of spatial and temporal factors")
        if self.kind == "separable_xt" and len(self.spatial) != 1:
            raise SourceError("a separable source has exactly one term")
        if self.kind == "planar" and self.vertical is None:
            raise SourceError("a planar source needs the vertical factor g(x3)")
        if not (self.support_radius > 0 and self.T0 > 0):
            raise SourceError("support radius and T0 must be positive")

    @property
    def n_terms(self) -> int:
        return len(self.spatial)

    @property
    def spatial_radius(self) -> float:
        """Radius of a 3D ball around the origin containing supp F(., t)."""
        if self.kind == "planar":
            return float(np.sqrt(2.0) * self.support_radius)
        return self.support_radius

    def spatial_factor(self, k: int) -> Callable:
        if self.kind == "planar":
            return Product3D(self.spatial[k], self.vertical)
        return self.spatial[k]

    def spatial_samples(self, X, Y, Z) -> list[np.ndarray]:
        return [np.asarray(self.spatial_factor(k)(X, Y, Z), dtype=float) for k in range(self.n_terms)]

    def temporal_samples(self, t) -> np.ndarray:
        return np.stack([np.asarray(b(t), dtype=float) * np.ones_like(t) for b in self.temporal])

    def evaluate(self, X, Y, Z, t) -> np.ndarray:
        """F at (X, Y, Z) and a scalar time t."""
        out = 0.0
        for k in range(self.n_terms):
            out = out + self.spatial_factor(k)(X, Y, Z) * float(self.temporal[k](t))
        return out

    def check_support(self, n: int = 64, n_t: int = 2001) -> None:
        """Verify that every factor vanishes outside its declared support."""
        key = (n, n_t)
        if key in self._checked:
            return
        rho = self.support_radius
        x = np.linspace(-2 * rho, 2 * rho, n)
        if self.kind == "planar":
            X, Y = np.meshgrid(x, x, indexing="ij")
            outside2 = np.sqrt(X ** 2 + Y ** 2) > rho
            for k, a in enumerate(self.spatial):
                _assert_vanishes(a(X, Y), outside2, f"planar factor {k}")
            _assert_vanishes(self.vertical(x), np.abs(x) >= rho, "vertical factor")
        else:
            X, Y, Z = np.meshgrid(x, x, x, indexing="ij")
            outside = np.sqrt(X ** 2 + Y ** 2 + Z ** 2) > rho
            for k, a in enumerate(self.spatial):
                _assert_vanishes(a(X, Y, Z), outside, f"spatial factor {k}")
        t = np.linspace(-self.T0, 2 * self.T0, n_t)
        t_out = (t <= 0) | (t >= self.T0)
        for k, b in enumerate(self.temporal):
            _assert_vanishes(b(t), t_out, f"temporal factor {k}")
        self._checked[key] = True

    def check_geometry(self, problem: str, R: float) -> None:
        """Support requirements of the three inverse problems."""
        if problem in ("ip1", "ip2"):
            if self.spatial_radius >= R:
                raise SourceError(f"source support radius {self.spatial_radius:g} not inside B_R, R = {R:g}")
            if problem == "ip1" and self.kind != "separable_xt":
                raise SourceError("IP1 needs a separable source f(x) g(t)")
        elif problem == "ip3":
            if self.kind != "planar":
                raise SourceError("IP3 needs a planar source f(x1, x2, t) g(x3)")
            if not self.support_radius < R / np.sqrt(2.0):
                raise SourceError(f"IP3 needs R0 < R / sqrt(2); R0 = {self.support_radius:g}, R = {R:g}")
        else:
            raise SourceError(f"unknown problem {problem!r}")


def _assert_vanishes(values, outside, what):
    values = np.abs(np.asarray(values, dtype=float))
    peak = values.max()
    if peak == 0:
        return
    if np.any(outside) and values[outside].max() > SUPPORT_TOL * peak:
        raise SourceError(f"{what} does not vanish outside its declared support")


def separable(f: Callable, g: Callable, support_radius: float, T0: float, label: str = "") -> SourceSpec:
    return SourceSpec("separable_xt", [f], [g], support_radius, T0, label=label)


def planar(f_xy: Callable, h_t: Callable, g_z: Callable, R0: float, T0: float, label: str = "") -> SourceSpec:
    """F = f(x1, x2, t) g(x3) with f(x1, x2, t) = f_xy(x1, x2) h_t(t)."""
    return SourceSpec("planar", [f_xy], [h_t], R0, T0, vertical=g_z, label=label)
