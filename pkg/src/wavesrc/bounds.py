"""Closed-form stability estimates and the quantities entering them.

The constants C in the estimates are not known; every evaluator takes a
multiplicative ``C_fit`` (default 1) and returns the individual terms so
that callers can compare shapes with measured errors.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

E_INV = math.exp(-1.0)


class DomainError(ValueError):
    """Argument outside the range where a formula applies."""


class CoverageError(ValueError):
    """Samples do not cover the requested frequency region."""


def mu_lower(z: float, L: float) -> float:
    """Lower bound for the harmonic measure exponent mu(z).

    Equals 1/2 on (L, 2^(1/4) L] and (1/pi) ((z/L)^4 - 1)^(-1/2) beyond.
    """
    if not (L > 0 and z > L):
        raise DomainError(f"need z > L > 0, got z = {z}, L = {L}")
    if z <= 2 ** 0.25 * L:
        return 0.5
    return mu_formula(z, L)


def mu_formula(z: float, L: float) -> float:
    """(1/pi) ((z/L)^4 - 1)^(-1/2), the outer branch evaluated anywhere above L."""
    if not (L > 0 and z > L):
        raise DomainError(f"need z > L > 0, got z = {z}, L = {L}")
    return 1.0 / (math.pi * math.sqrt((z / L) ** 4 - 1.0))


def lemma1_bound(k: complex, R: float, f_norm: float) -> float:
    """(4 pi / 3)^2 R^3 |k|^3 exp(2 R |Im k|) ||f||^2."""
    if not R > 0:
        raise DomainError("R must be positive")
    k = complex(k)
    return (4 * math.pi / 3) ** 2 * R ** 3 * abs(k) ** 3 * math.exp(2 * R * abs(k.imag)) * f_norm ** 2


def spherical_energy(samples, k: float) -> float:
    """int_{|xi| <= k} |f_hat|^2 d xi by the Cartesian cell rule.

    ``samples`` is a :class:`wavesrc.probe.FourierSamples`; the ball must be
    covered by the sampled band.
    """
    if k > samples.band_b + 1e-12:
        raise CoverageError(f"samples cover |xi| <= {samples.band_b:g}, asked for {k:g}")
    r = np.linalg.norm(samples.xi, axis=1)
    mask = samples.valid & (r <= k + 1e-12)
    return float(np.sum(np.abs(samples.value[mask]) ** 2) * samples.box.dxi ** 3)


def _log_abs(epsilon: float | None, log_eps: float | None) -> float:
    if log_eps is not None:
        if not log_eps < -1.0:
            raise DomainError("need ln(epsilon) < -1")
        return -float(log_eps)
    if not (0 < epsilon < E_INV):
        raise DomainError(f"need 0 < epsilon < 1/e, got {epsilon}")
    return -math.log(epsilon)


def select_cutoff(b: float, epsilon: float | None, R: float, log_eps: float | None = None) -> tuple[float, str]:
    """Low-pass radius k from the IP1 case split.

    k = b^(2/3) |ln eps|^(1/4) / ((2R + 3) pi)^(1/3) when
    2^(1/4) ((2R + 3) pi)^(1/3) b^(1/3) < |ln eps|^(1/4), otherwise k = b.
    ``epsilon = 0`` (noise-free data) returns k = b.  Very small epsilon can
    be passed through ``log_eps`` to avoid underflow.

    Returns
    -------
    (k, branch) with branch "log", "band" or "noise_free".
    """
    if not b > 0:
        raise DomainError("b must be positive")
    if log_eps is None and epsilon == 0:
        return float(b), "noise_free"
    ln = _log_abs(epsilon, log_eps)
    c = ((2 * R + 3) * math.pi) ** (1 / 3)
    if 2 ** 0.25 * c * b ** (1 / 3) < ln ** 0.25:
        return b ** (2 / 3) * ln ** 0.25 / c, "log"
    return float(b), "band"


def select_cutoff_planar(b: float, epsilon: float | None, R: float, R0: float, T0: float,
                         log_eps: float | None = None) -> tuple[float, str]:
    """IP3 analog of :func:`select_cutoff` with R replaced by R0 + T0."""
    return select_cutoff(b, epsilon, R0 + T0, log_eps)


def select_cutoff_multi(Lam: float, epsilon: float | None, R: float, T0: float, alpha: float = 0.5,
                        log_eps: float | None = None) -> tuple[float, str]:
    """IP2 cutoff s with Delta = max(2R, 4 T0).

    s = Lam^(1/2) |ln eps|^((1 - alpha)/4) / (2 (Delta + 2) pi)^(1/4) when
    |ln eps|^((1 - alpha)/4) > 2^(1/4) Lam^(1/2) (2 (Delta + 2) pi)^(1/4),
    otherwise s = Lam.
    """
    if not Lam > 0:
        raise DomainError("Lambda must be positive")
    if not 0 < alpha < 1:
        raise DomainError("alpha must lie in (0, 1)")
    if log_eps is None and epsilon == 0:
        return float(Lam), "noise_free"
    ln = _log_abs(epsilon, log_eps)
    c = (2 * (max(2 * R, 4 * T0) + 2) * math.pi) ** 0.25
    q = ln ** ((1 - alpha) / 4)
    if q > 2 ** 0.25 * Lam ** 0.5 * c:
        return Lam ** 0.5 * q / c, "log"
    return float(Lam), "band"


@dataclass
class BoundInputs:
    """Parameters of the stability estimates.

    ``window`` is b for IP1 and IP3 and Lambda for IP2.
    """

    window: float
    epsilon: float | None
    M: float
    alpha: float = 0.5
    C_fit: float = 1.0
    R: float = 1.0
    R0: float | None = None
    T0: float | None = None
    log_eps: float | None = None

    def validate(self) -> None:
        if not self.window > 1:
            raise DomainError(f"window parameter must exceed 1, got {self.window}")
        if not self.M > 1:
            raise DomainError(f"M must exceed 1, got {self.M}")
        if not 0 < self.alpha < 1:
            raise DomainError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not self.C_fit >= 0:
            raise DomainError("C_fit must be nonnegative")
        _log_abs(self.epsilon, self.log_eps)


@dataclass
class BoundResult:
    total: float
    terms: dict
    C_fit: float
    extras: dict = field(default_factory=dict)


def bound_terms(problem: str, inp: BoundInputs) -> tuple[dict, dict]:
    """Unscaled terms of the estimate and auxiliary quantities."""
    inp.validate()
    ln = _log_abs(inp.epsilon, inp.log_eps)
    log_eps = -ln
    x, M, a = inp.window, inp.M, inp.alpha
    # eps^p computed in log space so tiny epsilon does not underflow early
    eps_pow = lambda p: math.exp(p * log_eps)
    extras = {}
    if problem == "ip1":
        terms = {"lipschitz": x ** 5 * eps_pow(2), "logarithmic": M ** 2 / (x ** (4 / 3) * ln ** 0.5)}
    elif problem == "ip2":
        terms = {"lipschitz": x ** 10 * eps_pow(2), "logarithmic": M ** 2 / (x * ln ** ((1 - a) / 2))}
        extras["logarithmic_proof_variant"] = M ** 2 / (x * ln ** (1 - (1 - a) / 2))
    elif problem == "ip3":
        terms = {
            "lipschitz": x ** 5 * eps_pow(2),
            "continuation": x ** 3 * math.exp(2 * x * (1 - a)) * (1 + x) ** (2 * a) * eps_pow(2 * a),
            "logarithmic": M ** 2 / (x ** (4 / 3) * (a * ln) ** 0.5),
        }
        root = x ** (2 / 3) * (a * ln) ** 0.25
        extras["b23_alpha_log_quarter"] = root
        extras["b23_alpha_log_quarter_squared"] = root ** 2
    else:
        raise DomainError(f"unknown problem {problem!r}")
    return terms, extras


def theorem_bound(problem: str, inp: BoundInputs) -> BoundResult:
    """C_fit times the sum of the displayed terms of the stability estimate."""
    terms, extras = bound_terms(problem, inp)
    scaled = {k: inp.C_fit * v for k, v in terms.items()}
    return BoundResult(float(sum(scaled.values())), scaled, inp.C_fit, extras)


def bound_shape(problem: str, window: float, epsilon: float, M: float, alpha: float = 0.5) -> float:
    """Sum of the unscaled terms."""
    terms, _ = bound_terms(problem, BoundInputs(window, epsilon, M, alpha))
    return float(sum(terms.values()))


def continuation_bound(M0: float, data, N: float, mu: float, eta: float | None = None,
                       region_measure: float | None = None, dims: int | None = None):
    """N M0^(1 - mu) data^mu for user-supplied constants N and mu.

    The existence result behind this estimate gives N and mu in terms of
    the dimension, the analyticity radius ``eta`` and the measure of the
    observation set, but not their values; those arguments are accepted
    only to be validated and recorded by callers.
    """
    if not M0 > 0:
        raise DomainError("M0 must be positive")
    if eta is not None and not eta > 0:
        raise DomainError("eta must be positive")
    if not 0 < mu < 1:
        raise DomainError(f"mu must lie in (0, 1), got {mu}")
    data = np.asarray(data, dtype=float)
    out = N * M0 ** (1 - mu) * data ** mu
    return float(out) if out.ndim == 0 else out
