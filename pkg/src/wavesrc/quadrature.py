"""Quadrature rules: composite Simpson in time and product rules on spheres."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def simpson_weights(n: int, h: float) -> np.ndarray:
    """Weights of the composite Simpson rule on ``n`` equispaced samples.

    For an even number of intervals the rule is the classical 1/3 rule.  For
    an odd number the last three intervals use the 3/8 rule, which keeps the
    fourth order of accuracy.  Two samples fall back to the trapezoid.
    """
    if n < 2:
        raise ValueError("need at least two samples")
    w = np.zeros(n)
    if n == 2:
        w[:] = h / 2
        return w
    intervals = n - 1
    m = intervals if intervals % 2 == 0 else intervals - 3
    if m > 0:
        w[0:m + 1:2] += 2 * h / 3
        w[1:m:2] += 4 * h / 3
        w[0] -= h / 3
        w[m] -= h / 3
    if intervals % 2:
        w[m:m + 4] += 3 * h / 8 * np.array([1.0, 3.0, 3.0, 1.0])
    return w


def cumulative_simpson(y: np.ndarray, h: float) -> np.ndarray:
    """Running integral from the first sample along the last axis.

    Even indices use composite Simpson, odd indices >= 3 add a 3/8 panel
    over the final three intervals, and index 1 integrates the quadratic
    through the first three samples.  Every entry is fourth-order accurate.
    """
    y = np.asarray(y)
    n = y.shape[-1]
    out = np.zeros(y.shape, dtype=np.result_type(y, float))
    if n < 2:
        return out
    if n == 2:
        out[..., 1] = h / 2 * (y[..., 0] + y[..., 1])
        return out
    pairs = h / 3 * (y[..., 0:-2:2] + 4 * y[..., 1:-1:2] + y[..., 2::2])
    out[..., 2::2] = np.cumsum(pairs, axis=-1)
    out[..., 1] = h / 12 * (5 * y[..., 0] + 8 * y[..., 1] - y[..., 2])
    if n > 3:
        j = np.arange(3, n, 2)
        out[..., j] = out[..., j - 3] + 3 * h / 8 * (
            y[..., j - 3] + 3 * y[..., j - 2] + 3 * y[..., j - 1] + y[..., j])
    return out


@dataclass(frozen=True)
class SphereQuadrature:
    """Gauss-Legendre in cos(theta) times the trapezoid rule in phi."""

    radius: float
    n_theta: int
    n_phi: int

    def __post_init__(self):
        if self.radius <= 0 or self.n_theta < 1 or self.n_phi < 1:
            raise ValueError("invalid sphere quadrature parameters")

    def angles(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(theta, phi, weight) per node, flattened theta-major."""
        mu, wmu = np.polynomial.legendre.leggauss(self.n_theta)
        phi = 2 * np.pi * np.arange(self.n_phi) / self.n_phi
        theta = np.arccos(mu)
        T, P = np.meshgrid(theta, phi, indexing="ij")
        W = np.outer(wmu, np.full(self.n_phi, 2 * np.pi / self.n_phi)) * self.radius ** 2
        return T.ravel(), P.ravel(), W.ravel()

    def nodes(self) -> tuple[np.ndarray, np.ndarray]:
        """Cartesian node positions (P, 3) and weights (P,)."""
        theta, phi, w = self.angles()
        st = np.sin(theta)
        pts = self.radius * np.stack([st * np.cos(phi), st * np.sin(phi), np.cos(theta)], axis=1)
        return pts, w

    @property
    def size(self) -> int:
        return self.n_theta * self.n_phi
