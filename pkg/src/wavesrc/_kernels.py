"""Compiled inner loops.

The only hot spot of the package is the direct summation of a
trigonometric polynomial at scattered points.  Modes sharing a label
(|xi|^2 shell) share their time dependence, so the sum over modes is
accumulated per label first and the time factors are applied afterwards
with a dense matrix product.  Loops run in a fixed order, which fixes the
floating point reduction order.
"""
import numba
import numpy as np


@numba.njit(cache=True)
def label_sums(e1, e2, e3, label, coef, n_labels):
    """out[f, p, s] = sum over modes with label s of coef[f, mode] * exp(i xi . x_p).

    ``e_d[p, j]`` holds exp(i xi_j x_{p,d}); ``label`` and ``coef[f]`` are
    (n, n, n) arrays in FFT order.
    """
    n_fields = coef.shape[0]
    n_points = e1.shape[0]
    n = label.shape[0]
    out = np.zeros((n_fields, n_points, n_labels), np.complex128)
    for p in range(n_points):
        for a in range(n):
            pa = e1[p, a]
            for b in range(n):
                pab = pa * e2[p, b]
                for c in range(n):
                    ph = pab * e3[p, c]
                    s = label[a, b, c]
                    for f in range(n_fields):
                        out[f, p, s] += coef[f, a, b, c] * ph
    return out


@numba.njit(cache=True)
def trace_sums(e1, e2, e3, freqs, normals, label, coef, n_labels):
    """Label sums of a field and of its normal derivative at sphere nodes.

    Returns ``(u, dn)`` where ``dn`` still lacks the factor i:
    dn[f, p, s] = sum coef * (xi . normal_p) * exp(i xi . x_p).
    """
    n_fields = coef.shape[0]
    n_points = e1.shape[0]
    n = label.shape[0]
    u = np.zeros((n_fields, n_points, n_labels), np.complex128)
    dn = np.zeros((n_fields, n_points, n_labels), np.complex128)
    for p in range(n_points):
        nx = normals[p, 0]
        ny = normals[p, 1]
        nz = normals[p, 2]
        for a in range(n):
            pa = e1[p, a]
            ka = freqs[a] * nx
            for b in range(n):
                pab = pa * e2[p, b]
                kab = ka + freqs[b] * ny
                for c in range(n):
                    ph = pab * e3[p, c]
                    kn = kab + freqs[c] * nz
                    s = label[a, b, c]
                    for f in range(n_fields):
                        cp = coef[f, a, b, c] * ph
                        u[f, p, s] += cp
                        dn[f, p, s] += kn * cp
    return u, dn
