"""Command-line entry points.

Subcommands:
    identities     soliton identity and integral-table checks
    spectrum       dense eigen-report of the linearized operator (JSON)
    evolve         potential-perturbed evolution with invariant monitoring
    trajectories   reference/corrected parameter ODEs + comparison (CSV)
    theorem-sweep  h-sweep with remainder/residual order fits (JSON + CSV)
    virial         local-smoothing ratio sweep (JSON)

Global flags: --config PATH, --out DIR, --threads K.  Exit code 0 iff
every tolerance-tagged check in the requested run passes.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np

from . import __version__
from .errors import BolabError
from .evolution import EvolutionState, evolve_pbo, invariants, write_checkpoint
from .experiments import ExperimentConfig, load_config, run_theorem_sweep
from .grid import Field, Grid, hilbert, inner, l2_norm, sobolev_norm
from .modulation import write_track_csv, track_parameters
from .operators import OperatorSpec, commutator_probe
from .potential import PotentialSpec
from .soliton import (SolitonParams, closed_form_table, profile,
                      profile_derivative, scaled_profile, soliton_field,
                      soliton_residual)
from .spectral import discretize, spectrum_below_continuum
from .trajectories import (convert_frame, gronwall_sweep, integrate_exact,
                           integrate_reference, write_trajectory_csv)
from .virial import LinearizedRunSpec, virial_sweep


def _check(name: str, value: float, bound: float, results: list) -> None:
    ok = value <= bound
    results.append(ok)
    print(f"{'PASS' if ok else 'FAIL'}  {name}: {value:.3e} (tolerance {bound:.1e})")


def cmd_identities(args, cfg) -> int:
    grid = Grid(args.n, args.length)
    results: list = []
    q = soliton_field(grid, SolitonParams(0.0, 1.0))
    _check("profile equation residual", soliton_residual(SolitonParams(0.0, 1.0), grid),
           1e-3, results)
    hq = hilbert(q) + Field(grid, grid.nodes) * q
    _check("H(q) + y q", l2_norm(hq), 1e-3, results)
    y = grid.nodes
    alg = Field(grid, y * profile_derivative(y) - (0.5 * profile(y) ** 2 - 2 * profile(y)))
    _check("y q' - (q^2/2 - 2q)", l2_norm(alg), 1e-3, results)
    tbl = closed_form_table()
    yqp = Field(grid, scaled_profile(y))
    em = q + tbl.lambda_plus * yqp
    checks = [
        ("||q||^2", inner(q, q), tbl.normQ_sq),
        ("||(yq)'||^2", inner(yqp, yqp), tbl.norm_yQprime_sq),
        ("<(yq)', q>", inner(yqp, q), tbl.inner_yQprime_Q),
        ("||q + lam (yq)'||^2", inner(em, em), tbl.norm_eminus_combo_sq),
    ]
    for name, got, exact in checks:
        _check(f"{name} vs exact", abs(got - exact) / abs(exact), 1e-6, results)
    cos2 = inner(yqp, em) ** 2 / (inner(yqp, yqp) * inner(em, em))
    _check("cos^2(beta) vs exact", abs(cos2 - tbl.cos2_beta) / tbl.cos2_beta,
           1e-6, results)
    return 0 if all(results) else 1


def cmd_spectrum(args, cfg) -> int:
    grid = Grid(args.n, args.length)
    op = discretize(OperatorSpec("linearized"), grid).symmetrize()
    report = spectrum_below_continuum(op, threshold=1.0, margin=args.margin)
    payload = {
        "schema_version": 1,
        "operator": "linearized",
        "grid": {"n_points": grid.n_points, "domain_length": grid.domain_length},
        "continuum_edge": report.continuum_edge,
        "discrete_eigenvalues": report.discrete_eigenvalues,
        "edge_ambiguous": report.edge_ambiguous[:8],
        "warnings": report.warnings,
    }
    out = Path(args.out) if args.out else Path(".")
    out.mkdir(parents=True, exist_ok=True)
    path = out / "spectrum.json"
    path.write_text(json.dumps(payload, indent=2, sort_keys=True), encoding="utf-8")
    print(f"wrote {path}")
    tbl = closed_form_table()
    expected = [tbl.lambda_minus, 0.0, tbl.lambda_plus]
    got = report.discrete_eigenvalues
    ok = (len(got) == 3
          and all(abs(g - e) <= 5e-3 for g, e in zip(got, expected)))
    print(f"{'PASS' if ok else 'FAIL'}  isolated eigenvalues {got}")
    return 0 if ok else 1


def cmd_evolve(args, cfg) -> int:
    grid = Grid(cfg.n_points, cfg.domain_length)
    pot = (PotentialSpec.bump(args.h, cfg.bump_amplitude, cfg.bump_width)
           if args.h > 0 else PotentialSpec.zero())
    u0 = soliton_field(grid, SolitonParams(0.0, 1.0))
    state = EvolutionState(0.0, u0, pot if args.h > 0 else None)
    res = evolve_pbo(state, args.t_end, cfg.dt,
                     snapshot_stride=max(1, int(round(args.t_end / cfg.dt / 64))))
    out = Path(args.out) if args.out else Path(".")
    out.mkdir(parents=True, exist_ok=True)
    inv0 = invariants(res.states[0])
    invT = invariants(res.states[-1])
    mass_drift = abs(invT.mass - inv0.mass) / abs(inv0.mass)
    energy_drift = (abs(invT.energy_perturbed - inv0.energy_perturbed)
                    / max(abs(inv0.energy_perturbed), 1e-300))
    write_checkpoint(out / "final.bosl", res.states[-1])
    track = track_parameters(res.states, "symplectic", SolitonParams(0.0, 1.0))
    write_track_csv(out / "track.csv", track)
    print(f"wrote {out/'final.bosl'} and {out/'track.csv'}")
    results: list = []
    _check("relative mass drift", mass_drift, 1e-8, results)
    _check("relative energy drift", energy_drift, 1e-6, results)
    return 0 if all(results) else 1


def cmd_trajectories(args, cfg) -> int:
    out = Path(args.out) if args.out else Path(".")
    out.mkdir(parents=True, exist_ok=True)
    pot = PotentialSpec.bump(args.h, cfg.bump_amplitude, cfg.bump_width)
    ref = integrate_reference(pot, args.s_end)
    ex = integrate_exact(pot, args.s_end)
    write_trajectory_csv(out / "reference_slow.csv", ref)
    write_trajectory_csv(out / "exact_slow.csv", ex)
    write_trajectory_csv(out / "exact_fast.csv", convert_frame(ex, args.h))
    sweep = gronwall_sweep(
        lambda h: PotentialSpec.bump(h, cfg.bump_amplitude, cfg.bump_width),
        args.h_sweep, args.s_end)
    print(f"wrote trajectory CSVs to {out}")
    print(f"sup|A_dev| = {sweep.sup_dev_position:.3e}, "
          f"sup|C_dev| = {sweep.sup_dev_scale:.3e}, "
          f"fitted order = {sweep.fitted_order}")
    ok = sweep.fitted_order is not None and abs(sweep.fitted_order - 2.0) <= 0.2
    print(f"{'PASS' if ok else 'FAIL'}  deviation order 2.0 +- 0.2")
    return 0 if ok else 1


def cmd_theorem_sweep(args, cfg) -> int:
    summary = run_theorem_sweep(cfg)
    print(json.dumps({
        "fitted_remainder_order": summary.fitted_remainder_order,
        "fitted_residual_c_order": summary.fitted_residual_c_order,
        "failures": summary.failures,
    }, indent=2))
    ok = (not summary.failures
          and summary.fitted_remainder_order is not None
          and abs(summary.fitted_remainder_order - 1.5) <= 0.3
          and summary.fitted_residual_c_order is not None
          and summary.fitted_residual_c_order >= 2.7)
    print(f"{'PASS' if ok else 'FAIL'}  theorem-sweep scaling checks")
    return 0 if ok else 1


def cmd_virial(args, cfg) -> int:
    grid = Grid(cfg.n_points, cfg.domain_length)
    y = grid.nodes
    v0 = Field(grid, np.exp(-((y - 3.0) / 5.0) ** 2) * np.sin(0.8 * y))
    fq = Field(grid, profile(y))
    fqp = Field(grid, profile_derivative(y))
    for g in (fq, fqp):
        v0 = v0 - (inner(v0, g) / inner(g, g)) * g
    v0 = (0.5 / l2_norm(v0)) * v0
    forcing = Field(grid, np.exp(-((y + 5.0) / 6.0) ** 2))
    from .soliton import profile_second_derivative
    fqpp = Field(grid, profile_second_derivative(y))
    for g in (fqp, fqpp):
        forcing = forcing - (inner(forcing, g) / inner(g, g)) * g
    forcing = (0.1 / l2_norm(forcing)) * forcing
    run = LinearizedRunSpec(initial=v0, forcing=forcing, t_end=args.t_end,
                            dt=cfg.dt, snapshot_stride=cfg.snapshot_stride)
    reports = virial_sweep(run, args.gammas, args.y0s)
    out = Path(args.out) if args.out else Path(".")
    out.mkdir(parents=True, exist_ok=True)
    path = out / "virial.json"
    path.write_text(json.dumps([asdict(r) for r in reports], indent=2),
                    encoding="utf-8")
    print(f"wrote {path}")
    ratios = [r.ratio for r in reports]
    band = max(ratios) / min(ratios) if min(ratios) > 0 else math.inf
    ok = band <= 3.0
    print(f"{'PASS' if ok else 'FAIL'}  ratio band {band:.2f} (limit 3.0)")
    return 0 if ok else 1


def _float_list(text):
    return [float(v) for v in text.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bolab",
                                description="Soliton-dynamics numerical laboratory")
    p.add_argument("--version", action="version", version=f"bolab {__version__}")
    p.add_argument("--config", type=str, default=None, help="flat key=value config file")
    p.add_argument("--out", type=str, default=None, help="output directory")
    p.add_argument("--threads", type=int, default=None, help="concurrent sweep members")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("identities", help="soliton identity / integral-table checks")
    s.add_argument("--n", type=int, default=8192)
    s.add_argument("--length", type=float, default=1024.0)
    s.set_defaults(fn=cmd_identities)

    s = sub.add_parser("spectrum", help="dense eigen-report of the linearized operator")
    s.add_argument("--n", type=int, default=2048)
    s.add_argument("--length", type=float, default=512.0)
    s.add_argument("--margin", type=float, default=0.1)
    s.set_defaults(fn=cmd_spectrum)

    s = sub.add_parser("evolve", help="perturbed-flow run with invariant monitoring")
    s.add_argument("--h", type=float, default=0.05)
    s.add_argument("--t-end", type=float, default=50.0)
    s.set_defaults(fn=cmd_evolve)

    s = sub.add_parser("trajectories", help="parameter-ODE integration and comparison")
    s.add_argument("--h", type=float, default=0.1)
    s.add_argument("--s-end", type=float, default=2.0)
    s.add_argument("--h-sweep", type=_float_list, default=[0.2, 0.1, 0.05])
    s.set_defaults(fn=cmd_trajectories)

    s = sub.add_parser("theorem-sweep", help="main-theorem h-sweep")
    s.set_defaults(fn=cmd_theorem_sweep)

    s = sub.add_parser("virial", help="local-smoothing ratio sweep")
    s.add_argument("--t-end", type=float, default=20.0)
    s.add_argument("--gammas", type=_float_list, default=[0.05])
    s.add_argument("--y0s", type=_float_list, default=[-50.0, 0.0, 50.0])
    s.set_defaults(fn=cmd_virial)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    if args.out:
        cfg = replace(cfg, out_dir=args.out)
    if args.threads:
        cfg = replace(cfg, threads=args.threads)
    try:
        return args.fn(args, cfg)
    except BolabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
