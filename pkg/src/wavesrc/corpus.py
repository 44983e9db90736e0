"""Named test scenarios and the JSON source descriptors used by configs.

A descriptor is a small dictionary such as::

    {"kind": "separable_xt", "support_radius": 5.0, "T0": 1.0,
     "terms": [{"spatial": {"type": "kaiser_bessel", "radius": 5.0},
                "temporal": {"type": "bump", "t0": 0.0, "t1": 1.0}}]}

Planar sources add ``"vertical": {...}`` and use two-dimensional spatial
profiles.  :func:`build_source` turns a descriptor into a
:class:`wavesrc.sources.SourceSpec`.
"""
from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .sources import (Bump, KaiserBessel, SourceError, SourceSpec, TaperedGaussian, WindowedPulse)
from .spectral import SimulationGrid

PROFILE_TYPES = {
    "kaiser_bessel": (KaiserBessel, {"radius", "beta", "dim", "amplitude"}),
    "tapered_gaussian": (TaperedGaussian, {"sigma", "taper_start", "taper_end", "dim", "amplitude"}),
    "bump": (Bump, {"t0", "t1", "amplitude"}),
    "windowed_pulse": (WindowedPulse, {"t0", "t1", "center", "eta", "ramp", "amplitude"}),
}


def build_profile(desc: dict):
    desc = dict(desc)
    kind = desc.pop("type", None)
    if kind not in PROFILE_TYPES:
        raise SourceError(f"unknown profile type {kind!r}")
    cls, allowed = PROFILE_TYPES[kind]
    extra = set(desc) - allowed
    if extra:
        raise SourceError(f"profile {kind!r} does not take {sorted(extra)}")
    return cls(**desc)


def build_source(desc: dict) -> SourceSpec:
    terms = desc["terms"]
    vertical = build_profile(desc["vertical"]) if "vertical" in desc else None
    return SourceSpec(desc["kind"], [build_profile(t["spatial"]) for t in terms],
                      [build_profile(t["temporal"]) for t in terms],
                      float(desc["support_radius"]), float(desc["T0"]), vertical=vertical,
                      label=desc.get("label", ""))


def descriptor_hash(desc: dict) -> str:
    return hashlib.sha1(json.dumps(desc, sort_keys=True).encode()).hexdigest()[:16]


@dataclass
class Scenario:
    """Source, simulation grid and measurement sphere of one experiment.

    ``grid`` carries lambda = 1; multi-lambda runs derive their grids from
    it with their own horizons.
    """

    name: str
    problem: str
    source_desc: dict
    grid: SimulationGrid
    radius_R: float
    n_theta: int
    n_phi: int
    windows: list = field(default_factory=list)
    notes: str = ""
    options: dict = field(default_factory=dict)

    @property
    def source(self) -> SourceSpec:
        return build_source(self.source_desc)

    def grid_dict(self) -> dict:
        g = self.grid
        return {"half_width_L": g.half_width_L, "n_space": g.n_space, "horizon_T": g.horizon_T,
                "n_time": g.n_time}


def _bump(t0, t1, amplitude=1.0):
    d = {"type": "bump", "t0": t0, "t1": t1}
    if amplitude != 1.0:
        d["amplitude"] = amplitude
    return d


def narrow_ip1() -> Scenario:
    """Tapered Gaussian sigma = 0.2 inside B_1, bump on (0, 1), R = 1, T = 4."""
    desc = {"kind": "separable_xt", "support_radius": 1.0, "T0": 1.0, "label": "narrow_gaussian",
            "terms": [{"spatial": {"type": "tapered_gaussian", "sigma": 0.2, "taper_start": 0.9,
                                   "taper_end": 1.0},
                       "temporal": _bump(0.0, 1.0)}]}
    grid = SimulationGrid(3.0, 96, 4.0, 801, 1.0, 1.0)
    return Scenario("narrow_ip1", "ip1", desc, grid, 1.0, 24, 48, [4.0],
                    "corpus source for the solver and identity checks")


def ip1_sweep() -> Scenario:
    """Kaiser-Bessel bump of radius 5 (effective width 0.9); R = 5.2."""
    a, R, T0 = 5.0, 5.2, 1.0
    T = T0 + 2 * R + 0.6
    L = (R + a + T) / 2
    desc = {"kind": "separable_xt", "support_radius": a, "T0": T0, "label": "kaiser_bessel_5",
            "terms": [{"spatial": {"type": "kaiser_bessel", "radius": a}, "temporal": _bump(0.0, T0)}]}
    grid = SimulationGrid(L, 48, T, int(round(T / 0.01)) + 1, 1.0, R, a)
    return Scenario("ip1_sweep", "ip1", desc, grid, R, 40, 80, [1.5, 2.0, 3.0, 4.0],
                    "wide source whose spectrum is resolved by the band b = 4")


def ip2_sweep() -> Scenario:
    """Two separable terms with different radii and time windows; R = 4.7."""
    R, T0, Lmax, margin = 4.7, 4.0, 3.0, 0.6
    desc = {"kind": "general", "support_radius": 4.5, "T0": T0, "label": "two_term",
            "terms": [{"spatial": {"type": "kaiser_bessel", "radius": 4.5, "beta": 20.0},
                       "temporal": _bump(0.0, 4.0)},
                      {"spatial": {"type": "kaiser_bessel", "radius": 3.5, "beta": 20.0, "amplitude": 0.6},
                       "temporal": _bump(1.0, 3.0)}]}
    # the box must hold sqrt(lambda) T for the largest lambda and its own horizon
    L = (R + 4.5 + Lmax * T0 + 2 * R + Lmax * margin) / 2 + 0.05
    dt = 0.05
    T = T0 + 2 * R + margin
    grid = SimulationGrid(L, 64, T, int(round(T / dt)) + 1, 1.0, R, 4.5)
    return Scenario("ip2_sweep", "ip2", desc, grid, R, 32, 64, [1.5, 2.0, 3.0],
                    "sqrt(lambda) ladders of 8 values up to Lambda")


def ip3_planar() -> Scenario:
    """Kaiser-Bessel profiles of radius 1.1 (effective width 0.2) in x~ and x3; R = 1.6."""
    R0, R, T0 = 1.1, 1.6, 1.0
    T = T0 + 2 * R + 0.6
    r_src = float(np.sqrt(2.0) * R0)
    L = (R + r_src + T) / 2 + 0.01
    desc = {"kind": "planar", "support_radius": R0, "T0": T0, "label": "planar_kb",
            "terms": [{"spatial": {"type": "kaiser_bessel", "radius": R0, "dim": 2},
                       "temporal": _bump(0.0, T0)}],
            "vertical": {"type": "kaiser_bessel", "radius": R0, "dim": 1}}
    grid = SimulationGrid(L, 72, T, int(round(T / 0.005)) + 1, 1.0, R, r_src)
    return Scenario("ip3_planar", "ip3", desc, grid, R, 24, 48, [1.5, 2.0, 3.0],
                    "planar source f(x~) h(t) g(x3)")


def ip3_sweep() -> Scenario:
    """Wider planar source (R0 = 3.5, T0 = 3) whose spectrum mostly lies inside |(xi~, omega)| <= 3."""
    R0, R, T0, beta = 3.5, 5.2, 3.0, 20.0
    T = T0 + 2 * R + 0.6
    r_src = float(np.sqrt(2.0) * R0)
    L = (R + r_src + T) / 2 + 0.01
    desc = {"kind": "planar", "support_radius": R0, "T0": T0, "label": "planar_kb_wide",
            "terms": [{"spatial": {"type": "kaiser_bessel", "radius": R0, "dim": 2, "beta": beta},
                       "temporal": _bump(0.0, T0)}],
            "vertical": {"type": "kaiser_bessel", "radius": R0, "dim": 1, "beta": beta}}
    grid = SimulationGrid(L, 64, T, int(round(T / 0.02)) + 1, 1.0, R, r_src)
    return Scenario("ip3_sweep", "ip3", desc, grid, R, 32, 64, [1.5, 2.0, 3.0],
                    "planar sweep source; coarse frequency padding keeps extraction cheap",
                    {"pad": 2.0, "continuation_degree": 4})


PRESETS = {"narrow_ip1": narrow_ip1, "ip1_sweep": ip1_sweep, "ip2_sweep": ip2_sweep, "ip3_planar": ip3_planar,
           "ip3_sweep": ip3_sweep}


def get_scenario(name: str) -> Scenario:
    if name not in PRESETS:
        raise KeyError(f"unknown scenario {name!r}; choose from {sorted(PRESETS)}")
    return PRESETS[name]()


def scenario_from_config(cfg: dict) -> Scenario:
    """Preset named in ``cfg["preset"]`` with optional overrides.

    ``source``, ``grid`` and ``measurement`` entries replace the preset's.
    """
    base = get_scenario(cfg["preset"]) if "preset" in cfg else None
    if base is None and not {"source", "grid", "measurement"} <= set(cfg):
        raise ValueError("a config without preset needs source, grid and measurement")
    desc = copy.deepcopy(cfg.get("source", base.source_desc if base else None))
    meas = {"radius_R": base.radius_R, "n_theta": base.n_theta, "n_phi": base.n_phi} if base else {}
    meas.update(cfg.get("measurement", {}))
    gd = base.grid_dict() if base else {}
    gd.update(cfg.get("grid", {}))
    src = build_source(desc)
    grid = SimulationGrid(float(gd["half_width_L"]), int(gd["n_space"]), float(gd["horizon_T"]),
                          int(gd["n_time"]), 1.0, float(meas["radius_R"]), src.spatial_radius)
    problem = cfg.get("problem", base.problem if base else None)
    return Scenario(base.name if base else "custom", problem, desc, grid, float(meas["radius_R"]),
                    int(meas["n_theta"]), int(meas["n_phi"]), list(base.windows) if base else [],
                    options=dict(base.options) if base else {})
