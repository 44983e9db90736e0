"""Acceptance criteria 1 to 11, each at its stated tolerance.

Every test records one PASS/FAIL line, printed again in the terminal
summary under "acceptance criteria".
"""
import math
import time

import numpy as np
import pytest

from conftest import record_acceptance
from oracles import leapfrog_field
from wavesrc import harness
from wavesrc.bounds import (continuation_bound, lemma1_bound, mu_lower, select_cutoff, spherical_energy,
                            theorem_bound, BoundInputs)
from wavesrc.corpus import ip1_sweep, narrow_ip1
from wavesrc.forward import duhamel_kernel, extract_boundary, solve, verify_huygens
from wavesrc.multiparam import LambdaSweep, extract_Fhat_cones
from wavesrc.planar import continuation_fill, extract_fhat_planar, planar_grid
from wavesrc.probe import (FourierSamples, ball_modes, boundary_integrals, extract_fhat, ghat, invert,
                           reconstruction_box, relative_l2, sample_profile)
from wavesrc.quadrature import SphereQuadrature
from wavesrc.spectral import Box, SimulationGrid, evaluate_with_normal_derivative
from wavesrc.svgplot import emit_plots


def test_criterion_01_forward_oracle(narrow):
    scen, _, ds = narrow
    t0 = time.perf_counter()
    src = scen.source
    sub = 4
    grid = SimulationGrid(3.0, 64, 4.0, (ds.times.size - 1) * sub + 1, 1.0, 1.0, 1.0)
    fld = leapfrog_field(src, grid)
    pts, _ = SphereQuadrature(1.0, scen.n_theta, scen.n_phi).nodes()
    u, dn = evaluate_with_normal_derivative(fld, pts, pts)
    u, dn = u.real[:, ::sub], dn.real[:, ::sub]
    err_d = ds.surrogate_norm(u - ds.dirichlet) / ds.surrogate_norm(ds.dirichlet)
    err_n = ds.surrogate_norm(dn - ds.neumann) / ds.surrogate_norm(ds.neumann)
    # the spectral solve itself is timed separately since the fixture is shared
    t1 = time.perf_counter()
    solve(src, scen.grid)
    elapsed = time.perf_counter() - t1 + (t1 - t0)
    ok = max(err_d, err_n) <= 1e-2 and elapsed <= 120
    record_acceptance(1, ok, f"rel L2 Dirichlet {err_d:.2e}, Neumann {err_n:.2e} (tol 1e-2); {elapsed:.1f} s")
    assert ok


def test_criterion_02_single_mode():
    a, m = 2.0, 1.0
    t = np.linspace(0.0, np.pi, 401)
    dt = t[1] - t[0]
    nonres = duhamel_kernel(np.array([m]), np.sin(a * t), dt)[0]
    exact_nonres = (m * np.sin(a * t) - a * np.sin(m * t)) / (m * (m * m - a * a))
    res = duhamel_kernel(np.array([m]), np.sin(m * t), dt)[0]
    exact_res = (np.sin(m * t) - m * t * np.cos(m * t)) / (2 * m * m)
    e1 = np.abs(nonres - exact_nonres).max() / np.abs(exact_nonres).max()
    e2 = np.abs(res - exact_res).max() / np.abs(exact_res).max()
    end = abs(res[-1] - np.pi / 2) / (np.pi / 2)
    ok = max(e1, e2, end) <= 1e-6 and abs(nonres[-1]) <= 1e-6
    record_acceptance(2, ok, f"non-resonant {e1:.1e}, resonant {e2:.1e}, u(pi) rel {end:.1e} (tol 1e-6, n_time 401)")
    assert ok


def test_criterion_03_huygens(narrow):
    scen, fld, _ = narrow
    rep = verify_huygens(fld, scen.source, 1.0, tol=1e-3)
    ok = rep.pass_ and rep.residual_ratio <= 1e-3
    record_acceptance(3, ok, f"residual_ratio {rep.residual_ratio:.2e} after t = {rep.cutoff_time:g} (tol 1e-3)")
    assert ok


def _identity_error(ds, scen):
    src = scen.source
    f = src.spatial[0]
    g, tg = sample_profile(src.temporal[0], (0.0, 1.0), 4001)
    box = scen.grid.box
    modes = ball_modes(box, 4.0)
    xi = modes * box.dxi
    r = np.linalg.norm(xi, axis=1)
    bi = boundary_integrals(ds, xi, r)
    exact = f.exact_transform(r) * ghat(g, r, tg)
    scale = abs(complex(np.ravel(f.exact_transform(0.0))[0]) * ghat(g, 0.0, tg))
    return float(np.abs(bi - exact).max() / scale), modes.shape[0]


def _coarsened(fld, scen, n_theta, step):
    ds = extract_boundary(fld, 1.0, n_theta, 2 * n_theta, scen.source.T0)
    return ds.replace(times=ds.times[::step], dirichlet=ds.dirichlet[:, ::step], neumann=ds.neumann[:, ::step])


def test_criterion_04_identity(narrow):
    scen, fld, ds = narrow
    corpus, count = _identity_error(ds, scen)
    # the corpus resolution sits at the error floor, so convergence is measured from the
    # coarsest level that already meets the tolerance: 4 x 8 sphere nodes, dt = 0.04
    base, _ = _identity_error(_coarsened(fld, scen, 4, 8), scen)
    halved, _ = _identity_error(_coarsened(fld, scen, 8, 4), scen)
    ratio = base / halved
    ok = corpus <= 1e-2 and base <= 1e-2 and ratio >= 3
    record_acceptance(4, ok, f"max rel error {corpus:.2e} over {count} modes at 24 x 48, dt 0.005 (tol 1e-2); "
                             f"4 x 8, dt 0.04: {base:.2e} -> 8 x 16, dt 0.02: {halved:.2e}, "
                             f"gain {ratio:.0f}x (need >= 3)")
    assert ok


def test_criterion_05_ip1_noise_free(wide_ds):
    scen, ds = wide_ds
    t0 = time.perf_counter()
    src = scen.source
    b = 4.0
    g, tg = sample_profile(src.temporal[0], (0.0, src.T0), 4001)
    box = reconstruction_box(scen.radius_R, b)
    smp = extract_fhat(ds, g, tg, b, box=box)
    k, _ = select_cutoff(b, 0.0, scen.radius_R)
    X, Y, Z = box.nodes()
    err = relative_l2(invert(smp, k), src.spatial[0](X, Y, Z))
    elapsed = time.perf_counter() - t0
    ok = err <= 5e-2 and elapsed <= 300
    record_acceptance(5, ok, f"relative L2 error {err:.2e} at b = 4, k = {k:g} (tol 5e-2); "
                             f"{elapsed:.1f} s after simulation")
    assert ok


@pytest.fixture(scope="module")
def ip1_sweep_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("ip1_sweep")
    cfg = harness.SweepConfig.from_dict({"problem": "ip1", "preset": "ip1_sweep", "b_list": [1.5, 2, 3, 4],
                                         "epsilon_list": [0, 1e-1, 1e-2, 1e-3], "seeds": [0, 1, 2],
                                         "output_dir": str(out)})
    t0 = time.perf_counter()
    records = harness.run_sweep(cfg)
    return cfg, records, time.perf_counter() - t0


def test_criterion_06_increasing_stability(ip1_sweep_run):
    _, records, elapsed = ip1_sweep_run
    mono = harness.monotonicity(records)
    slope = harness.noise_slope(records)
    listed = {e: mono["monotone"][e] for e in (1e-1, 1e-2, 1e-3)}
    ok = all(listed.values()) and 0.5 <= slope["slope"] <= 1.2
    meds = {e: [round(v, 4) for v in row.values()] for e, row in mono["medians"].items()}
    record_acceptance(6, ok, f"monotone in b at eps 1e-1/1e-2/1e-3: {list(listed.values())}; "
                             f"slope {slope['slope']:.3f} from {len(slope['cells'])} cells (need [0.5, 1.2]); "
                             f"medians {meds}; sweep {elapsed:.0f} s")
    assert ok


def test_criterion_07_bound_fit(ip1_sweep_run):
    _, records, _ = ip1_sweep_run
    fit = harness.fit_constant(records)
    squared = harness.fit_constant(records, power=2.0)
    ok = fit.rms <= 1.0
    record_acceptance(7, ok, f"log-space RMS {fit.rms:.3f} with C_fit {fit.C_fit:.3g} (tol 1.0); "
                             f"squared-error variant RMS {squared.rms:.3f}")
    assert ok


def test_criterion_08_multi_lambda(narrow, tmp_path):
    scen, _, ds = narrow
    src = scen.source
    b = 4.0
    g, tg = sample_profile(src.temporal[0], (0.0, src.T0), 4001)
    box = reconstruction_box(1.0, b, n=16)
    ip1 = extract_fhat(ds, g, tg, b, box=box)
    cones = extract_Fhat_cones(LambdaSweep([1.0], [ds], 1.0), box, band=b)
    lookup = {tuple(m): i for i, m in enumerate(ip1.modes)}
    pos = np.array([cones.values[q, 1] for q in range(cones.modes.shape[0])])
    ref = np.array([ip1.value[lookup[tuple(m)]] for m in cones.modes])
    r = np.linalg.norm(cones.xi, axis=1)
    # cone values carry g_hat; the IP1 values are divided by it
    ref = ref * ghat(g, r, tg)
    ref[~ip1.valid[[lookup[tuple(m)] for m in cones.modes]]] = np.nan
    degeneracy = float(np.nanmax(np.abs(pos - ref)) / np.abs(pos).max())

    cfg = harness.SweepConfig.from_dict({"problem": "ip2", "preset": "ip2_sweep", "Lambda_list": [1.5, 2, 3],
                                         "epsilon_list": [1e-2], "seeds": [0, 1, 2],
                                         "output_dir": str(tmp_path)})
    records = harness.run_sweep(cfg)
    mono = harness.monotonicity(records)
    ok = degeneracy <= 1e-10 and mono["monotone"][1e-2]
    meds = [round(v, 4) for v in mono["medians"][1e-2].values()]
    record_acceptance(8, ok, f"single-lambda cone vs IP1 {degeneracy:.1e} (tol 1e-10); "
                             f"medians at eps 1e-2 for Lambda 1.5/2/3: {meds}")
    assert ok


def test_criterion_09_planar(planar_ds):
    scen, ds = planar_ds
    src = scen.source
    R0, b = src.support_radius, 3.0
    z = np.linspace(-R0, R0, 2001)
    h, th = sample_profile(src.temporal[0], (0.0, src.T0), 4001)
    grid = planar_grid(R0, src.T0, b)
    smp = extract_fhat_planar(ds, src.vertical(z), z, b, R0, grid)

    def oracle(x1, x2, w):
        return src.spatial[0].exact_transform(np.hypot(x1, x2)) * ghat(h, w, th)

    v = smp.valid
    ref = oracle(smp.xi1, smp.xi2, smp.omega)
    extraction = float(np.abs(smp.value[v] - ref[v]).max() / np.abs(ref[v]).max())
    filled = continuation_fill(smp, b, 8)
    e = filled.extrapolated
    gref = oracle(filled.xi1[e], filled.xi2[e], filled.omega[e])
    gap = float(np.linalg.norm(filled.value[e] - gref) / np.linalg.norm(gref))
    ok = extraction <= 3e-2 and gap <= 1e-1
    record_acceptance(9, ok, f"extraction max rel {extraction:.1e} over {int(v.sum())} entries (tol 3e-2); "
                             f"degree-8 gap rel L2 {gap:.1e} over {int(e.sum())} entries (tol 1e-1)")
    assert ok


def _closed_form_samples(profile, L, k_max):
    box = Box(L, 2 * int(math.ceil(k_max / (math.pi / L))) + 4)
    modes = ball_modes(box, k_max)
    xi = modes * box.dxi
    q = np.sum(modes ** 2, axis=1)
    shells, inv = np.unique(q, return_inverse=True)
    value = profile.exact_transform(np.sqrt(shells) * box.dxi)[inv].astype(complex)
    ones = np.ones(len(value), bool)
    return FourierSamples(xi, np.linalg.norm(xi, axis=1), value, ones, np.ones(len(value)), k_max, box, modes)


def test_criterion_10_formulas():
    checks = {
        "mu_lower(2, 1)": (mu_lower(2.0, 1.0), 1 / (math.pi * math.sqrt(15))),
        "lemma1(k=1)": (lemma1_bound(1.0, 1.0, 1.0), (4 * math.pi / 3) ** 2),
        "lemma1(k=i)": (lemma1_bound(1j, 1.0, 1.0), (4 * math.pi / 3) ** 2 * math.e ** 2),
        "select_cutoff(b=2, eps=1e-3)": (select_cutoff(2.0, 1e-3, 1.0)[0], 2.0),
        "select_cutoff(b=1, ln eps=-1e4)": (select_cutoff(1.0, None, 1.0, log_eps=-1e4)[0],
                                            10 / (5 * math.pi) ** (1 / 3)),
        "theorem_bound ip1": (theorem_bound("ip1", BoundInputs(2.0, 1e-3, 2.0)).total,
                              2 ** 5 * 1e-6 + 4 / (2 ** (4 / 3) * math.sqrt(-math.log(1e-3)))),
        "continuation_bound": (continuation_bound(4.0, 0.01, 1.0, 0.5), 0.2),
    }
    worst = max(abs(a - b) / abs(b) for a, b in checks.values())
    branch_ok = select_cutoff(2.0, 1e-3, 1.0)[1] == "band" and select_cutoff(1.0, None, 1.0, log_eps=-1e4)[1] == "log"

    narrow = narrow_ip1().source.spatial[0]
    wide = ip1_sweep().source.spatial[0]
    sigma = narrow.sigma
    gauss = _closed_form_samples(narrow, 3.0, 40.0)
    gauss.value = sigma ** 3 * np.exp(-0.5 * sigma ** 2 * np.sum(gauss.xi ** 2, axis=1)).astype(complex)
    total = spherical_energy(gauss, 40.0)
    energy_err = abs(total - math.pi ** 1.5 * sigma ** 3) / (math.pi ** 1.5 * sigma ** 3)

    worst_ratio = 0.0
    for prof, L in ((narrow, 3.0), (wide, 5.5)):
        smp = _closed_form_samples(prof, L, 40.0)
        norm = math.sqrt(prof.sq_norm())
        for k in np.linspace(0.25, 40.0, 60):
            worst_ratio = max(worst_ratio, spherical_energy(smp, k) / lemma1_bound(k, prof.support_radius, norm))
    ok = worst <= 1e-6 and branch_ok and energy_err <= 1e-3 and worst_ratio <= 1.05
    record_acceptance(10, ok, f"max rel deviation of {len(checks)} examples {worst:.1e} (tol 1e-6); "
                              f"Gaussian energy rel {energy_err:.1e} (tol 1e-3); "
                              f"max energy / lemma bound {worst_ratio:.2e} (need <= 1.05)")
    assert ok


def test_criterion_11_determinism(ip1_sweep_run, tmp_path):
    cfg, first, _ = ip1_sweep_run
    text1 = (cfg.output_dir / "sweep.csv").read_bytes()
    svg1 = [p.read_bytes() for p in emit_plots(first, tmp_path / "a", C_fit=1.0)]
    harness.clear_caches()
    cfg2 = harness.SweepConfig.from_dict({**cfg.raw, "output_dir": str(tmp_path / "again")})
    second = harness.run_sweep(cfg2, cache=harness.ForwardCache())
    text2 = (cfg2.output_dir / "sweep.csv").read_bytes()
    svg2 = [p.read_bytes() for p in emit_plots(second, tmp_path / "b", C_fit=1.0)]
    ok = text1 == text2 and svg1 == svg2
    record_acceptance(11, ok, f"CSV identical: {text1 == text2} ({len(text1)} bytes, {len(first)} rows); "
                              f"SVG identical: {svg1 == svg2}")
    assert ok
