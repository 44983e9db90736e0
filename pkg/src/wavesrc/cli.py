"""Command line interface: ``wavesrc <subcommand> [options]``.

Every subcommand prints one JSON object on standard output.  Exit codes:
0 on success, 1 for invalid arguments or configuration, 2 when the
computation itself fails.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import fileio
from .bounds import BoundInputs, DomainError, select_cutoff, select_cutoff_multi, select_cutoff_planar, theorem_bound
from .forward import add_noise, solve, verify_huygens
from .harness import (ConfigError, SweepConfig, _finite, _Pipeline, _CACHE, fit_constant, FitError, run_sweep,
                      summarize)
from .multiparam import extract_Fhat_cones
from .planar import continuation_fill, extract_fhat_planar, fit_degree
from .probe import extract_fhat
from .svgplot import emit_plots

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2
DEFAULT_PRESET = {"ip1": "ip1_sweep", "ip2": "ip2_sweep", "ip3": "ip3_sweep"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON configuration file")
    p.add_argument("--out", help="output directory (overrides output_dir)")
    p.add_argument("--problem", choices=["ip1", "ip2", "ip3"], help="problem when no config is given")
    p.add_argument("--continuation-degree", type=int, help="polynomial degree of the planar gap fill")
    p.add_argument("--no-fill", action="store_true", help="skip the planar gap fill")


def _window_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--b", "--Lambda", dest="window", type=float, help="bandwidth b (Lambda for ip2)")
    p.add_argument("--eps", type=float, default=0.0, help="relative noise level")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="wavesrc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    p = sub.add_parser("simulate", help="solve the forward problem and write .btrace files")
    _common(p)
    p = sub.add_parser("probe", help="extract Fourier samples and write them to a sample file")
    _common(p)
    _window_args(p)
    p = sub.add_parser("reconstruct", help="reconstruct once and report the error")
    _common(p)
    _window_args(p)
    p = sub.add_parser("sweep", help="run a full sweep, write sweep.csv and SVG charts")
    _common(p)
    p = sub.add_parser("bounds", help="evaluate the stability estimate and cutoff")
    p.add_argument("--problem", choices=["ip1", "ip2", "ip3"], required=True)
    p.add_argument("--b", "--Lambda", dest="window", type=float, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--M", type=float, required=True)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--C-fit", dest="C_fit", type=float, default=1.0)
    p.add_argument("--R", type=float, default=1.0)
    p.add_argument("--R0", type=float, default=None)
    p.add_argument("--T0", type=float, default=1.0)
    p = sub.add_parser("verify-huygens", help="check that the field leaves B_R after T0 + 2R")
    _common(p)
    p.add_argument("--tol", type=float, default=None)
    return parser


def _load_config(args, presets: dict = DEFAULT_PRESET) -> SweepConfig:
    if args.config:
        cfg = SweepConfig.from_file(args.config)
    else:
        problem = args.problem or "ip1"
        cfg = SweepConfig.from_dict({"problem": problem, "preset": presets[problem]})
    if args.out:
        cfg.output_dir = Path(args.out)
    if args.continuation_degree is not None:
        cfg.continuation_degree = args.continuation_degree
    if args.no_fill:
        cfg.fill = False
    return cfg


def _window(cfg: SweepConfig, args) -> float:
    w = args.window if getattr(args, "window", None) is not None else max(cfg.windows)
    if not w > 0:
        raise ConfigError("the window parameter must be positive")
    if not args.eps >= 0:
        raise ConfigError("eps must be nonnegative")
    return float(w)


def cmd_simulate(args) -> dict:
    cfg = _load_config(args)
    pipe = _Pipeline(cfg, _CACHE)
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    if cfg.problem == "ip2":
        sw = pipe.sweep(max(cfg.windows))
        datasets = list(zip(sw.lambdas, sw.datasets))
    else:
        datasets = [(1.0, pipe.dataset())]
    files = []
    for j, (lam, ds) in enumerate(datasets):
        path = cfg.output_dir / (f"trace_{j:02d}.btrace" if len(datasets) > 1 else "trace.btrace")
        fileio.write_btrace(path, ds)
        files.append({"path": str(path), "lambda": float(lam), "n_nodes": int(ds.dirichlet.shape[0]),
                      "n_time": int(ds.times.size)})
    return {"command": "simulate", "problem": cfg.problem, "scenario": cfg.scenario.name, "files": files}


def cmd_probe(args) -> dict:
    cfg = _load_config(args)
    w = _window(cfg, args)
    cfg.windows = sorted(set(cfg.windows) | {w})
    pipe = _Pipeline(cfg, _CACHE)
    opts = cfg.noise_options()
    kind = opts.pop("kind")
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    if cfg.problem == "ip1":
        ds = add_noise(pipe.dataset(), args.eps, args.seed, kind, **opts)
        smp = extract_fhat(ds, pipe.g, pipe.t, w, cfg.delta_min, box=pipe.box)
        path = fileio.write_fsamp(cfg.output_dir / "samples.fsamp", smp, "ip1")
        info = {"n_samples": len(smp), "n_valid": int(smp.valid.sum()),
                "dispersion_residual": smp.dispersion_residual(), "conjugate_residual": smp.conjugate_residual()}
    elif cfg.problem == "ip2":
        sw = pipe.sweep(w)
        if args.eps > 0:
            sw = sw.with_noise(args.eps, args.seed, kind=kind, **opts)
        cones = extract_Fhat_cones(sw, pipe.box)
        meta = {"dimension_tag": "ip2", "Lambda": w, "box": {"half_width": pipe.box.half_width, "n": pipe.box.n}}
        path = fileio.write_generic(cfg.output_dir / "cones.fsamp4", "fsamp4", meta,
                                    {"modes": cones.modes, "sqrt_lambdas": np.asarray(cones.sqrt_lams),
                                     "values": cones.values})
        info = {"n_modes": int(cones.modes.shape[0]), "n_lambda": int(len(cones.sqrt_lams)),
                "conjugate_residual": cones.conjugate_residual()}
    else:
        ds = add_noise(pipe.dataset(), args.eps, args.seed, kind, **opts)
        smp = extract_fhat_planar(ds, pipe.gz, pipe.z, w, pipe.src.support_radius, pipe.pgrid, cfg.delta_min)
        n_fit = int(smp.valid.sum())
        if cfg.fill:
            smp = continuation_fill(smp, w, fit_degree(n_fit, cfg.continuation_degree))
        meta = {"dimension_tag": "ip3", "band_b": w}
        path = fileio.write_generic(cfg.output_dir / "planar.fsamp", "fsamp", meta,
                                    {"modes": smp.modes, "value": smp.value, "valid": smp.valid,
                                     "extrapolated": smp.extrapolated})
        info = {"n_samples": int(smp.modes.shape[0]), "n_extracted": n_fit,
                "n_filled": int(smp.extrapolated.sum()), "conjugate_residual": smp.conjugate_residual()}
    return {"command": "probe", "problem": cfg.problem, "window": w, "epsilon": args.eps, "seed": args.seed,
            "path": str(path), **info}


def cmd_reconstruct(args) -> dict:
    cfg = _load_config(args)
    w = _window(cfg, args)
    cfg.windows = sorted(set(cfg.windows) | {w})
    pipe = _Pipeline(cfg, _CACHE)
    err, k = pipe.reconstruct(w, args.eps, args.seed)
    total, terms = pipe.bound(w, args.eps) if 0 < args.eps < math.exp(-1) else (float("nan"), {})
    return {"command": "reconstruct", "problem": cfg.problem, "window": w, "epsilon": args.eps, "seed": args.seed,
            "error_rel_L2": err, "cutoff_k": k, "M": pipe.M, "bound_total": total, "bound_terms": terms}


def cmd_sweep(args) -> dict:
    cfg = _load_config(args)
    records = run_sweep(cfg)
    summary = summarize(records)
    try:
        C = fit_constant(records).C_fit
    except FitError:
        C = None
    plots = emit_plots(records, cfg.output_dir, C_fit=C if cfg.overlay else None)
    return {"command": "sweep", "problem": cfg.problem, "csv": str(cfg.output_dir / "sweep.csv"),
            "plots": [str(p) for p in plots], **summary}


def cmd_bounds(args) -> dict:
    R0 = args.R0 if args.R0 is not None else args.R
    inp = BoundInputs(args.window, args.eps, args.M, args.alpha, args.C_fit, args.R, R0, args.T0)
    res = theorem_bound(args.problem, inp)
    if args.problem == "ip1":
        k, branch = select_cutoff(args.window, args.eps, args.R)
    elif args.problem == "ip2":
        k, branch = select_cutoff_multi(args.window, args.eps, args.R, args.T0, args.alpha)
    else:
        k, branch = select_cutoff_planar(args.window, args.eps, args.R, R0, args.T0)
    return {"command": "bounds", "problem": args.problem, "window": args.window, "epsilon": args.eps, "M": args.M,
            "C_fit": res.C_fit, "bound_total": res.total, "bound_terms": res.terms, "extras": res.extras,
            "cutoff_k": k, "cutoff_branch": branch}


def cmd_verify_huygens(args) -> dict:
    cfg = _load_config(args, {**DEFAULT_PRESET, "ip1": "narrow_ip1"})
    scen = cfg.scenario
    src = scen.source
    tol = args.tol if args.tol is not None else cfg.huygens_tol
    rep = verify_huygens(solve(src, scen.grid), src, scen.radius_R, tol)
    return {"command": "verify-huygens", "scenario": scen.name, "radius_R": scen.radius_R, "lambda": scen.grid.lam,
            "horizon_T": scen.grid.horizon_T, **rep.as_dict()}


COMMANDS = {"simulate": cmd_simulate, "probe": cmd_probe, "reconstruct": cmd_reconstruct, "sweep": cmd_sweep,
            "bounds": cmd_bounds, "verify-huygens": cmd_verify_huygens}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        print(json.dumps({"status": "invalid", "error": str(exc)}))
        return EXIT_INVALID
    except SystemExit as exc:   # --help
        return EXIT_OK if not exc.code else EXIT_INVALID
    try:
        result = COMMANDS[args.command](args)
    except (ConfigError, DomainError) as exc:
        print(json.dumps({"status": "invalid", "command": args.command, "error": str(exc)}))
        return EXIT_INVALID
    except Exception as exc:
        print(json.dumps({"status": "failed", "command": args.command, "error": f"{type(exc).__name__}: {exc}"}))
        return EXIT_RUNTIME
    print(json.dumps(_finite({"status": "ok", **result}), sort_keys=True, default=float))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
