"""Experiment orchestration: the main-theorem sweep, parameter-ODE
residual tables, scaling-exponent fits, and reproducible reporting.

A sweep member evolves the potential-perturbed flow from a soliton plus
a sized perturbation, extracts the symplectic parameter track, compares
it against the corrected parameter ODE, and reports envelope-normalized
remainder norms.  Orders in h are least-squares slopes in log-log
coordinates with their standard errors; raw CSVs accompany every
summary record.

Config files are flat ``key = value`` text (UTF-8, ``#`` comments,
comma-separated lists).
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import ConfigurationError, ExperimentError, UsageError
from .evolution import EvolutionState, evolve_pbo
from .grid import Field, Grid, cell_l2_profile, sobolev_norm
from .modulation import ParameterTrack, track_parameters, write_track_csv
from .potential import PotentialSpec
from .soliton import (SolitonParams, eigenfunction_field,
                      profile_second_derivative, soliton_field)
from .trajectories import (convert_frame, integrate_exact,
                           integrate_reference, write_trajectory_csv)

SCHEMA_VERSION = 1
PERTURBATION_KINDS = ("even_mode", "gaussian", "curvature")


@dataclass
class ExperimentConfig:
    n_points: int = 8192
    domain_length: float = 1024.0
    dt: float = 0.01
    snapshot_stride: int = 10
    mu0: float = 1.0                  # envelope rate used for normalization
    h_list: tuple = (0.1, 0.05, 0.025)
    bump_amplitude: float = 0.2
    bump_width: float = 1.0
    perturbation: str = "gaussian"
    delta_scale: float = 1.0          # delta = delta_scale * h^{3/2}
    regime: str = "symplectic"
    out_dir: str = "runs"
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        if not self.h_list:
            raise ConfigurationError("h_list must be nonempty")
        for h in self.h_list:
            if not (0 < h <= 1):
                raise ConfigurationError(f"h values must lie in (0, 1], got {h}")
        for name in ("dt", "domain_length", "bump_width", "mu0", "delta_scale"):
            if not (getattr(self, name) > 0):
                raise ConfigurationError(f"{name} must be positive")
        if self.perturbation not in PERTURBATION_KINDS:
            raise ConfigurationError(
                f"perturbation must be one of {PERTURBATION_KINDS}")


_CONFIG_TYPES = {
    "n_points": int, "domain_length": float, "dt": float,
    "snapshot_stride": int, "mu0": float, "bump_amplitude": float,
    "bump_width": float, "perturbation": str, "delta_scale": float,
    "regime": str, "out_dir": str, "seed": int, "threads": int,
}


def parse_config(text: str) -> ExperimentConfig:
    """Parse flat key = value config text into an ExperimentConfig."""
    kwargs = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"config line {lineno}: expected key = value")
        key, val = (part.strip() for part in line.split("=", 1))
        if key == "h_list":
            kwargs[key] = tuple(float(v) for v in val.split(",") if v.strip())
        elif key in _CONFIG_TYPES:
            kwargs[key] = _CONFIG_TYPES[key](val)
        else:
            raise ConfigurationError(f"config line {lineno}: unknown key {key!r}")
    return ExperimentConfig(**kwargs)


def load_config(path) -> ExperimentConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))


# ---------------------------------------------------------------------------
# scaling fits
# ---------------------------------------------------------------------------

def fit_scaling_exponent(points):
    """Least-squares slope of log(value) against log(h).

    Returns (order, stderr).  Needs >= 3 points with positive values.
    """
    pts = [(float(h), float(v)) for h, v in points]
    if len(pts) < 3:
        raise UsageError(f"need at least 3 points for a scaling fit, got {len(pts)}")
    if any(v <= 0 for _, v in pts) or any(h <= 0 for h, _ in pts):
        raise UsageError("scaling fit requires positive h and values")
    x = np.log([h for h, _ in pts])
    y = np.log([v for _, v in pts])
    n = len(pts)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    denom = np.sum((x - x.mean()) ** 2)
    dof = max(n - 2, 1)
    stderr = math.sqrt(float(resid @ resid) / dof / denom)
    return float(slope), float(stderr)


# ---------------------------------------------------------------------------
# parameter-ODE residuals
# ---------------------------------------------------------------------------

@dataclass
class ResidualTable:
    times: np.ndarray
    residual_a: np.ndarray
    residual_c: np.ndarray
    integral_a: float           # time integral of |residual_a|
    integral_c: float


def _central_derivative_4(values: np.ndarray, dt: float) -> np.ndarray:
    v = values
    return (-v[4:] + 8.0 * v[3:-1] - 8.0 * v[1:-3] + v[:-4]) / (12.0 * dt)


def ode_residuals(track: ParameterTrack, pot: PotentialSpec) -> ResidualTable:
    """Residuals of the corrected parameter ODEs along a measured track.

    Fourth-order central differences supply (da/dt, dc/dt); the residuals
    subtract the corrected right-hand sides

        a' = c - W(ha) + (h^2/2) W''(ha)/c^2
        c' = h c W'(ha) + (h^3/2) W'''(ha)/c.
    """
    if len(track) < 5:
        raise UsageError("need at least 5 track samples for 4th-order differences")
    if track.decompositions[0].regime != "symplectic":
        raise UsageError("parameter residuals are defined for symplectic tracks")
    t = track.times
    dts = np.diff(t)
    if np.max(np.abs(dts - dts[0])) > 1e-9 * max(dts[0], 1e-300):
        raise UsageError("track samples must be uniformly spaced in time")
    dt = float(dts[0])
    a, c = track.a, track.c
    adot = _central_derivative_4(a, dt)
    cdot = _central_derivative_4(c, dt)
    ai, ci = a[2:-2], c[2:-2]
    h = pot.h
    w, w1, w2, w3 = pot.shape_derivatives(h * ai)
    res_a = adot - ci + w - 0.5 * h * h * w2 / ci ** 2
    res_c = cdot - h * ci * w1 - 0.5 * h ** 3 * w3 / ci
    ti = t[2:-2]
    integral_a = float(np.trapezoid(np.abs(res_a), ti)) if ti.size > 1 else 0.0
    integral_c = float(np.trapezoid(np.abs(res_c), ti)) if ti.size > 1 else 0.0
    return ResidualTable(times=ti, residual_a=res_a, residual_c=res_c,
                         integral_a=integral_a, integral_c=integral_c)


# ---------------------------------------------------------------------------
# theorem sweep
# ---------------------------------------------------------------------------

def build_perturbation(grid: Grid, kind: str, delta: float) -> Field:
    """A smooth perturbation scaled to H^{1/2} norm exactly delta."""
    if kind == "even_mode":
        raw, _ = eigenfunction_field(grid, "+")
    elif kind == "gaussian":
        raw = Field(grid, np.exp(-(grid.nodes / 4.0) ** 2))
    elif kind == "curvature":
        raw = Field(grid, profile_second_derivative(grid.nodes))
    else:
        raise ConfigurationError(f"unknown perturbation kind {kind!r}")
    norm = sobolev_norm(raw, 0.5)
    return (delta / norm) * raw


@dataclass
class SweepMember:
    h: float
    t_end: float
    sup_envelope_ratio: float       # sup_t ||u - q_{a_hat, c_hat}||_{H^1/2} / e^{mu0 h t}
    sup_local_time_norm: float      # sup_n of the time-L2 unit-cell norm of the remainder
    residual_a_integral: float
    residual_c_integral: float
    scale_range: tuple
    wall_seconds: float
    csv_track: str
    csv_trajectory: str


@dataclass
class RunSummary:
    schema_version: int
    config: dict
    members: list
    failures: list
    fitted_remainder_order: float | None
    fitted_remainder_stderr: float | None
    fitted_residual_c_order: float | None
    fitted_residual_c_stderr: float | None
    wall_seconds: float

    def to_json(self) -> str:
        payload = {
            "schema_version": self.schema_version,
            "config": self.config,
            "members": [asdict(m) for m in self.members],
            "failures": self.failures,
            "fitted_remainder_order": self.fitted_remainder_order,
            "fitted_remainder_stderr": self.fitted_remainder_stderr,
            "fitted_residual_c_order": self.fitted_residual_c_order,
            "fitted_residual_c_stderr": self.fitted_residual_c_stderr,
            "wall_seconds": self.wall_seconds,
        }
        return json.dumps(payload, indent=2, sort_keys=True)


def _horizon(cfg: ExperimentConfig, pot: PotentialSpec, h: float) -> float:
    """T0 = min(ln(1/h)/(4 mu0 h), S0/h), rounded down to a snapshot multiple."""
    t0 = math.log(1.0 / h) / (4.0 * cfg.mu0 * h)
    ref = integrate_reference(pot, s_end=max(4.0, 2.0 * h * t0), ds=1e-3)
    if ref.stop_time is not None:
        t0 = min(t0, ref.stop_time / h)
    dt_snap = cfg.dt * cfg.snapshot_stride
    return max(dt_snap, math.floor(t0 / dt_snap) * dt_snap)


def _run_member(cfg: ExperimentConfig, h: float, out_dir: Path) -> SweepMember:
    start = time.perf_counter()
    grid = Grid(cfg.n_points, cfg.domain_length)
    pot = PotentialSpec.bump(h, cfg.bump_amplitude, cfg.bump_width)
    t_end = _horizon(cfg, pot, h)
    delta = cfg.delta_scale * h ** 1.5
    q0 = soliton_field(grid, SolitonParams(0.0, 1.0))
    u0 = q0 + build_perturbation(grid, cfg.perturbation, delta)
    res = evolve_pbo(EvolutionState(0.0, u0, pot), t_end, cfg.dt,
                     snapshot_stride=cfg.snapshot_stride)
    track = track_parameters(res.states, cfg.regime, SolitonParams(0.0, 1.0))
    if track.c.min() < 0.5 or track.c.max() > 2.0:
        raise ExperimentError(
            f"scale parameter left the window [1/2, 2]: "
            f"range ({track.c.min():.3g}, {track.c.max():.3g})")

    # corrected parameter trajectory, resampled at the snapshot times
    ex_slow = integrate_exact(pot, s_end=h * t_end * (1.0 + 1e-12), ds=1e-3)
    ex = convert_frame(ex_slow, h)
    a_hat = CubicSpline(ex.times, ex.positions)(res.times)
    c_hat = CubicSpline(ex.times, ex.scales)(res.times)

    mu0h = cfg.mu0 * h
    sup_ratio = 0.0
    cell_mass = None
    for k, state in enumerate(res.states):
        qhat = soliton_field(grid, SolitonParams(float(a_hat[k]), float(c_hat[k])))
        dev = sobolev_norm(state.field - qhat, 0.5)
        sup_ratio = max(sup_ratio, dev / math.exp(mu0h * state.time))
        _, cells = cell_l2_profile(track.decompositions[k].remainder)
        weight = 1.0 if 0 < k < len(res.states) - 1 else 0.5
        mass = weight * cells ** 2
        cell_mass = mass if cell_mass is None else cell_mass + mass
    dt_snap = float(res.times[1] - res.times[0])
    sup_local = float(np.sqrt(np.max(cell_mass * dt_snap)))

    resid = ode_residuals(track, pot)
    tag = f"h{h:g}".replace(".", "p")
    csv_track = str(out_dir / f"track_{tag}.csv")
    csv_traj = str(out_dir / f"trajectory_{tag}.csv")
    write_track_csv(csv_track, track)
    write_trajectory_csv(csv_traj, ex)
    return SweepMember(
        h=h, t_end=t_end, sup_envelope_ratio=sup_ratio,
        sup_local_time_norm=sup_local,
        residual_a_integral=resid.integral_a,
        residual_c_integral=resid.integral_c,
        scale_range=(float(track.c.min()), float(track.c.max())),
        wall_seconds=time.perf_counter() - start,
        csv_track=csv_track, csv_trajectory=csv_traj)


def run_theorem_sweep(cfg: ExperimentConfig) -> RunSummary:
    """Sweep the h list, fit the remainder and residual orders, write reports.

    Individual member failures are recorded and the sweep continues; an
    empty successful set raises ExperimentError.
    """
    start = time.perf_counter()
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    members = []
    failures = []

    def job(h):
        return _run_member(cfg, h, out_dir)

    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            futures = {h: pool.submit(job, h) for h in cfg.h_list}
            for h in cfg.h_list:
                try:
                    members.append(futures[h].result())
                except Exception as exc:       # member failures are data
                    failures.append({"h": h, "error": f"{type(exc).__name__}: {exc}"})
    else:
        for h in cfg.h_list:
            try:
                members.append(job(h))
            except Exception as exc:
                failures.append({"h": h, "error": f"{type(exc).__name__}: {exc}"})
    if not members:
        raise ExperimentError(f"all sweep members failed: {failures}")

    def safe_fit(values):
        try:
            return fit_scaling_exponent([(m.h, v) for m, v in zip(members, values)])
        except UsageError:
            return None, None

    rem_order, rem_err = safe_fit([m.sup_envelope_ratio for m in members])
    res_order, res_err = safe_fit([m.residual_c_integral for m in members])
    summary = RunSummary(
        schema_version=SCHEMA_VERSION,
        config={**asdict(cfg), "h_list": list(cfg.h_list)},
        members=members,
        failures=failures,
        fitted_remainder_order=rem_order,
        fitted_remainder_stderr=rem_err,
        fitted_residual_c_order=res_order,
        fitted_residual_c_stderr=res_err,
        wall_seconds=time.perf_counter() - start,
    )
    (out_dir / "summary.json").write_text(summary.to_json(), encoding="utf-8")
    return summary
