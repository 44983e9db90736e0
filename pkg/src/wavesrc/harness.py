"""Sweeps over (window, epsilon, seed) with error and bound tabulation.

A sweep simulates each source once per lambda, perturbs the traces for
every (epsilon, seed), reconstructs with the problem's cutoff rule and
compares with the true source sampled on the reconstruction grid.
Results are :class:`StabilityRecord` rows, written to ``sweep.csv`` in a
fixed column order.
"""
from __future__ import annotations

import csv
import io
import json
import math
import time
from collections import OrderedDict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import spectral
from .bounds import (BoundInputs, bound_terms, select_cutoff, select_cutoff_multi, select_cutoff_planar)
from .corpus import Scenario, descriptor_hash, scenario_from_config
from .forward import BoundaryDataset, add_noise, extract_boundary, solve
from .multiparam import (LambdaSweep, extract_Fhat_cones, invert4, lambda_horizon, resample_to_grid4,
                         sample_source, sqrt_lambda_ladder, time_axis_for)
from .planar import continuation_fill, fit_degree, extract_fhat_planar, invert_planar, planar_grid
from .probe import DELTA_MIN, extract_fhat, invert, reconstruction_box, relative_l2, sample_profile
from .spectral import dft


class ConfigError(ValueError):
    """Configuration file is missing or invalid."""


class FitError(ValueError):
    """Too few distinct records to fit a constant."""


def load_schema() -> dict:
    return json.loads(resources.files("wavesrc").joinpath("config.schema.json").read_text())


@dataclass
class SweepConfig:
    problem: str
    scenario: Scenario
    windows: list
    epsilons: list
    seeds: list
    output_dir: Path
    delta_min: float = DELTA_MIN
    huygens_tol: float = 1e-3
    noise: dict = field(default_factory=lambda: {"kind": "smooth"})
    overlay: bool = True
    M: float | None = None
    alpha: float = 0.5
    C_fit: float = 1.0
    lambda_count: int = 8
    pad: float = 8.0
    continuation_degree: int = 8
    fill: bool = True
    workers: int = 1
    record_wall_time: bool = False
    raw: dict = field(default_factory=dict, repr=False)

    @classmethod
    def from_dict(cls, cfg: dict, base_dir: Path | None = None) -> "SweepConfig":
        try:
            jsonschema.validate(cfg, load_schema())
        except jsonschema.ValidationError as exc:
            raise ConfigError(f"invalid config: {exc.message}") from exc
        base_dir = Path(".") if base_dir is None else Path(base_dir)
        if "btrace" in cfg and not (base_dir / cfg["btrace"]).exists():
            raise ConfigError(f"referenced file {cfg['btrace']} does not exist")
        problem = cfg["problem"]
        key = "Lambda_list" if problem == "ip2" else "b_list"
        other = "b_list" if problem == "ip2" else "Lambda_list"
        if other in cfg:
            raise ConfigError(f"{other} does not apply to {problem}; use {key}")
        try:
            scen = scenario_from_config(cfg)
        except (KeyError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        windows = cfg.get(key, scen.windows)
        if not windows:
            raise ConfigError(f"{key} must not be empty")
        eps = cfg.get("epsilon_list", [0.0])
        seeds = cfg.get("seeds", [0])
        bounds = cfg.get("bounds", {})
        overlay = bounds.get("overlay", True)
        if overlay and any(e >= math.exp(-1) for e in eps):
            raise ConfigError("bound overlay needs every epsilon below 1/e")
        tol = cfg.get("tolerances", {})
        pl = cfg.get("planar", {})
        out = Path(cfg.get("output_dir", "out"))
        if not out.is_absolute():
            out = base_dir / out
        return cls(problem, scen, sorted(float(w) for w in windows), sorted(float(e) for e in eps),
                   sorted(int(s) for s in seeds), out,
                   tol.get("delta_min", DELTA_MIN), tol.get("huygens", 1e-3),
                   {"kind": "smooth", **cfg.get("noise", {})}, overlay, bounds.get("M"),
                   bounds.get("alpha", 0.5), bounds.get("C_fit", 1.0), cfg.get("lambda_count", 8),
                   pl.get("pad", scen.options.get("pad", 8.0)),
                   pl.get("continuation_degree", scen.options.get("continuation_degree", 8)), pl.get("fill", True),
                   cfg.get("workers", 1), cfg.get("record_wall_time", False), cfg)

    @classmethod
    def from_file(cls, path) -> "SweepConfig":
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file {path} does not exist")
        try:
            cfg = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        return cls.from_dict(cfg, path.parent)

    def noise_options(self) -> dict:
        opts = dict(self.noise)
        return {"kind": opts.pop("kind"), **opts}


@dataclass
class StabilityRecord:
    problem: str
    b_or_Lambda: float
    epsilon: float
    seed: int
    error_rel_L2: float
    bound_total: float
    bound_terms: dict
    cutoff_k: float
    wall_time: float

    def shape(self) -> float:
        return float(sum(self.bound_terms.values())) if self.bound_terms and "failure" not in self.bound_terms \
            else float("nan")


RECORD_FIELDS = [f.name for f in fields(StabilityRecord)]


class ForwardCache:
    """Boundary datasets keyed by (source hash, grid fingerprint, lambda)."""

    def __init__(self, size: int = 24):
        self.size = size
        self._store: OrderedDict = OrderedDict()
        self.misses = 0

    def get(self, source_desc: dict, grid: spectral.SimulationGrid, scen: Scenario) -> BoundaryDataset:
        key = (descriptor_hash(source_desc), grid.fingerprint(), float(grid.lam),
               scen.radius_R, scen.n_theta, scen.n_phi)
        if key in self._store:
            self._store.move_to_end(key)
            return self._store[key]
        self.misses += 1
        src = scen.source
        fld = solve(src, grid)
        ds = extract_boundary(fld, scen.radius_R, scen.n_theta, scen.n_phi, src.T0)
        self._store[key] = ds
        if len(self._store) > self.size:
            self._store.popitem(last=False)
        return ds


_CACHE = ForwardCache()


def clear_caches() -> None:
    """Drop cached forward solves and cached trigonometric sums."""
    _CACHE._store.clear()
    spectral._SUM_CACHE.clear()


def relative_h1_ratio(values: np.ndarray, axes) -> float:
    """||v||_{H^1} / ||v||_{L^2} from the discrete spectrum, used as the a-priori M."""
    c = dft(values, axes)
    k2 = sum(np.meshgrid(*[a.freqs ** 2 for a in axes], indexing="ij", sparse=True))
    e = np.abs(c) ** 2
    return float(np.sqrt(np.sum((1 + k2) * e) / np.sum(e)))


class _Pipeline:
    """Problem-specific simulate / reconstruct steps sharing one truth grid."""

    def __init__(self, cfg: SweepConfig, cache: ForwardCache):
        self.cfg = cfg
        self.cache = cache
        self.scen = cfg.scenario
        self.src = self.scen.source
        wmax = max(cfg.windows)
        R = self.scen.radius_R
        if cfg.problem == "ip1":
            g = self.src.temporal[0]
            self.g, self.t = sample_profile(g, (0.0, self.src.T0), 4001)
            self.box = reconstruction_box(R, wmax)
            X, Y, Z = self.box.nodes()
            self.truth = self.src.spatial[0](X, Y, Z)
            axes = self.box.axes
        elif cfg.problem == "ip2":
            self.box = reconstruction_box(R, wmax)
            self.taxis = time_axis_for(self.src.T0, wmax)
            self.truth = sample_source(self.src, self.box, self.taxis)
            axes = (*self.box.axes, self.taxis)
        elif cfg.problem == "ip3":
            R0 = self.src.support_radius
            self.z = np.linspace(-R0, R0, 2001)
            self.gz = self.src.vertical(self.z)
            self.pgrid = planar_grid(R0, self.src.T0, wmax, cfg.pad)
            X1, X2, TT = self.pgrid.nodes()
            self.truth = self.src.spatial[0](X1, X2) * self.src.temporal[0](TT)
            axes = self.pgrid.axes
        else:
            raise ConfigError(f"unknown problem {cfg.problem!r}")
        self.M = cfg.M if cfg.M is not None else relative_h1_ratio(self.truth, axes)

    def dataset(self, lam: float = 1.0) -> BoundaryDataset:
        scen = self.scen
        if lam == 1.0 and self.cfg.problem != "ip2":
            grid = scen.grid
        else:
            T, nt = lambda_horizon(self.src.T0, scen.radius_R, lam, scen.grid.dt)
            grid = scen.grid.with_lambda(lam, T, nt)
        return self.cache.get(scen.source_desc, grid, scen)

    def sweep(self, Lambda: float) -> LambdaSweep:
        lams = sqrt_lambda_ladder(Lambda, self.cfg.lambda_count)
        return LambdaSweep(lams, [self.dataset(float(l)) for l in lams], Lambda)

    def cutoff(self, window: float, eps: float) -> float:
        R = self.scen.radius_R
        if self.cfg.problem == "ip1":
            return select_cutoff(window, eps, R)[0]
        if self.cfg.problem == "ip2":
            return select_cutoff_multi(window, eps, R, self.src.T0, self.cfg.alpha)[0]
        return select_cutoff_planar(window, eps, R, self.src.support_radius, self.src.T0)[0]

    def reconstruct(self, window: float, eps: float, seed: int) -> tuple[float, float]:
        """Relative L2 error and the cutoff used."""
        cfg = self.cfg
        opts = cfg.noise_options()
        kind = opts.pop("kind")
        k = self.cutoff(window, eps)
        # samples exist only up to the window; larger cutoffs are clipped
        k_use = min(k, window)
        if cfg.problem == "ip1":
            ds = add_noise(self.dataset(), eps, seed, kind, **opts)
            smp = extract_fhat(ds, self.g, self.t, window, cfg.delta_min, box=self.box)
            return relative_l2(invert(smp, k_use), self.truth), k
        if cfg.problem == "ip2":
            sw = self.sweep(window)
            if eps > 0:
                sw = sw.with_noise(eps, seed, kind=kind, **opts)
            cones = extract_Fhat_cones(sw, self.box)
            F, _ = invert4(resample_to_grid4(cones, self.taxis), k_use)
            return relative_l2(F, self.truth), k
        ds = add_noise(self.dataset(), eps, seed, kind, **opts)
        smp = extract_fhat_planar(ds, self.gz, self.z, window, self.src.support_radius, self.pgrid,
                                  cfg.delta_min)
        if cfg.fill:
            n_fit = int(np.sum(smp.valid & ~smp.extrapolated))
            smp = continuation_fill(smp, window, fit_degree(n_fit, cfg.continuation_degree))
        f, _ = invert_planar(smp, k_use, use_fill=cfg.fill)
        return relative_l2(f, self.truth), k

    def bound(self, window: float, eps: float) -> tuple[float, dict]:
        if not self.cfg.overlay or eps <= 0:
            return float("nan"), {}
        src = self.src
        inp = BoundInputs(window, eps, max(self.M, 1.0 + 1e-12), self.cfg.alpha, self.cfg.C_fit,
                          self.scen.radius_R, src.support_radius, src.T0)
        terms, _ = bound_terms(self.cfg.problem, inp)
        return self.cfg.C_fit * float(sum(terms.values())), terms


def _cell(pipe: _Pipeline, window: float, eps: float, seed: int) -> StabilityRecord:
    t0 = time.perf_counter()
    try:
        err, k = pipe.reconstruct(window, eps, seed)
        total, terms = pipe.bound(window, eps)
    except Exception as exc:  # a failed cell is recorded, the sweep continues
        err, k, total, terms = float("nan"), float("nan"), float("nan"), {"failure": f"{type(exc).__name__}: {exc}"}
    wall = time.perf_counter() - t0 if pipe.cfg.record_wall_time else 0.0
    return StabilityRecord(pipe.cfg.problem, window, eps, seed, float(err), float(total), terms, float(k), wall)


def run_sweep(cfg: SweepConfig, cache: ForwardCache | None = None, write: bool = True) -> list[StabilityRecord]:
    """Evaluate every (window, epsilon, seed) cell; write ``sweep.csv`` when ``write``."""
    cache = _CACHE if cache is None else cache
    pipe = _Pipeline(cfg, cache)
    records = []
    for w in cfg.windows:
        # forward solves happen here, serially, so the pool only runs reconstructions;
        # a failing solve is retried inside each cell and recorded there
        try:
            pipe.sweep(w) if cfg.problem == "ip2" else pipe.dataset()
        except Exception:
            pass
        cells = [(w, e, s) for e in cfg.epsilons for s in cfg.seeds]
        if cfg.workers > 1:
            with ThreadPoolExecutor(cfg.workers) as pool:
                records += list(pool.map(lambda c: _cell(pipe, *c), cells))
        else:
            records += [_cell(pipe, *c) for c in cells]
    records.sort(key=lambda r: (r.b_or_Lambda, r.epsilon, r.seed))
    if write:
        cfg.output_dir.mkdir(parents=True, exist_ok=True)
        write_csv(records, cfg.output_dir / "sweep.csv")
    return records


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def records_to_csv(records: list[StabilityRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RECORD_FIELDS)
    for r in records:
        row = []
        for name in RECORD_FIELDS:
            v = getattr(r, name)
            row.append(json.dumps(v, sort_keys=True) if isinstance(v, dict) else _fmt(v))
        w.writerow(row)
    return buf.getvalue()


def write_csv(records: list[StabilityRecord], path) -> Path:
    path = Path(path)
    path.write_text(records_to_csv(records))
    return path


def read_csv(path) -> list[StabilityRecord]:
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out.append(StabilityRecord(row["problem"], float(row["b_or_Lambda"]), float(row["epsilon"]),
                                       int(row["seed"]), float(row["error_rel_L2"]), float(row["bound_total"]),
                                       json.loads(row["bound_terms"]), float(row["cutoff_k"]),
                                       float(row["wall_time"])))
    return out


@dataclass(frozen=True)
class FitResult:
    C_fit: float
    rms: float
    n: int
    power: float

    def as_dict(self) -> dict:
        return {"C_fit": self.C_fit, "rms": self.rms, "n": self.n, "power": self.power}


def fit_constant(records: list[StabilityRecord], power: float = 1.0) -> FitResult:
    """Least-squares fit of error^power = C * bound_shape in log space.

    ``power = 1`` fits log(error) against log(shape) directly; ``power = 2``
    matches the squared norm that the estimates actually bound.  ``rms`` is
    the root mean square of the log residuals.
    """
    use = [r for r in records if np.isfinite(r.error_rel_L2) and r.error_rel_L2 > 0 and np.isfinite(r.shape())
           and r.shape() > 0]
    if len({(r.b_or_Lambda, r.epsilon) for r in use}) < 3:
        raise FitError("need at least 3 records with distinct (window, epsilon)")
    y = np.array([power * math.log(r.error_rel_L2) for r in use])
    x = np.array([math.log(r.shape()) for r in use])
    logC = float(np.mean(y - x))
    res = y - x - logC
    return FitResult(math.exp(logC), float(np.sqrt(np.mean(res ** 2))), len(use), power)


def median_table(records: list[StabilityRecord]) -> dict:
    """{epsilon: {window: median error over seeds}} ignoring failed cells."""
    groups: dict = {}
    for r in records:
        if np.isfinite(r.error_rel_L2):
            groups.setdefault(r.epsilon, {}).setdefault(r.b_or_Lambda, []).append(r.error_rel_L2)
    return {e: {w: float(np.median(v)) for w, v in sorted(d.items())} for e, d in sorted(groups.items())}


def monotonicity(records: list[StabilityRecord], rtol: float = 1e-9) -> dict:
    """Whether the median error is nonincreasing in the window at each epsilon."""
    table = median_table(records)
    per_eps = {}
    for e, row in table.items():
        vals = list(row.values())
        per_eps[e] = all(b <= a * (1 + rtol) for a, b in zip(vals[:-1], vals[1:]))
    return {"medians": table, "monotone": per_eps, "anomalous": not all(per_eps.values())}


def noise_slope(records: list[StabilityRecord], floor_factor: float = 2.0) -> dict:
    """Slope of log median error against log epsilon where noise dominates.

    A cell (window, epsilon > 0) is noise dominated when its median error is
    at least ``floor_factor`` times the noise-free median at that window
    (taken as 0 when the sweep has no epsilon = 0 rows).  Windows with at
    least two such cells enter a pooled fit with one intercept per window.
    """
    table = median_table(records)
    floors = table.get(0.0, {})
    by_w: dict = {}
    for e, row in table.items():
        if e <= 0:
            continue
        for w, m in row.items():
            if m >= floor_factor * floors.get(w, 0.0) and m > 0:
                by_w.setdefault(w, []).append((math.log(e), math.log(m)))
    xs, ys, used = [], [], []
    for w, pts in sorted(by_w.items()):
        if len(pts) < 2:
            continue
        px, py = np.array(pts).T
        xs.append(px - px.mean())
        ys.append(py - py.mean())
        used += [(w, math.exp(p)) for p in px]
    if not xs:
        return {"slope": float("nan"), "cells": []}
    x, y = np.concatenate(xs), np.concatenate(ys)
    return {"slope": float(x @ y / (x @ x)), "cells": used}


def summarize(records: list[StabilityRecord], power: float = 1.0) -> dict:
    mono = monotonicity(records)
    out = {"n_records": len(records),
           "n_failed": sum(1 for r in records if not np.isfinite(r.error_rel_L2)),
           "medians": {repr(e): {repr(w): m for w, m in row.items()} for e, row in mono["medians"].items()},
           "monotone": {repr(e): v for e, v in mono["monotone"].items()},
           "anomalous": mono["anomalous"],
           "noise_slope": noise_slope(records)["slope"]}
    try:
        out["fit"] = fit_constant(records, power).as_dict()
    except FitError as exc:
        out["fit"] = {"error": str(exc)}
    return _finite(out)


def _finite(obj):
    """Replace NaN and infinities by None so summaries are strict JSON."""
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj
