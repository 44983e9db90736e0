"""Run a small IP1 stability sweep through the harness and summarize it.

Writes ``demos/out_ip1_small/sweep.csv`` with the two SVG charts next to
it, then prints the fitted constant, the per-noise monotonicity check and
the median error table.  The same run is available from the command line
as ``wavesrc sweep --config demos/configs/ip1_small.json``.
"""
import json
from pathlib import Path

from wavesrc.harness import SweepConfig, run_sweep, summarize
from wavesrc.svgplot import emit_plots

cfg = SweepConfig.from_file(Path(__file__).parent / "configs" / "ip1_small.json")
records = run_sweep(cfg)
summary = summarize(records)
plots = emit_plots(records, cfg.output_dir, summary["fit"]["C_fit"])

print(json.dumps({k: summary[k] for k in ("n_records", "n_failed", "fit", "monotone", "noise_slope")}, indent=1))
print("\nmedian relative error (rows: epsilon, columns: b)")
for eps, row in summary["medians"].items():
    print(f"  {eps:>6}: " + "  ".join(f"{v:.3f}" for v in row.values()))
print("\nwrote", ", ".join(str(p) for p in [cfg.output_dir / "sweep.csv", *plots]))
