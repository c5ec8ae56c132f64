"""Local-smoothing diagnostics for the linearized flow.

The central quantity is the time-integrated, spatially localized half-
derivative norm

    integral over [0, T] of || <D>^{1/2} ( sqrt(g') v(t) ) ||_L2^2,

compared against the global-in-space supremum norm plus a forcing
remainder; the claim probed by the sweep is that their ratio is bounded
uniformly in the window length and the localizer center.  The weighted
mass with the arctan step profile provides the companion monotonicity
diagnostic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, UsageError
from .grid import (Field, LocalizerSpec, dgamma_inverse, derivative, inner,
                   l2_norm, localizer, sobolev_norm)
from .operators import OperatorSpec, apply_operator
from .soliton import profile, profile_derivative


@dataclass
class VirialReport:
    gamma: float
    y0: float
    T: float
    lhs: float              # localized H^1/2 mass, integrated in time
    rhs_norm: float         # sup-in-time squared L2 norm
    g_remainder: float
    ratio: float


@dataclass
class MonotonicitySpec:
    """Weight parameters for the slowly-turning mass functional."""

    A: float = 10.0
    lam: float = 0.5
    y0: float = 10.0

    def __post_init__(self):
        if not (self.A > 0):
            raise ConfigurationError("A must be positive")
        if not (0 < self.lam < 1):
            raise ConfigurationError("lambda must lie in (0, 1)")
        if not (self.y0 > 1):
            raise ConfigurationError("y0 must exceed 1")


def _time_trapezoid(values, dt: float) -> float:
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        raise UsageError("need at least two snapshots for a time integral")
    return float(dt * (np.sum(v) - 0.5 * (v[0] + v[-1])))


def local_smoothing_lhs(snapshots, dt: float, spec: LocalizerSpec) -> float:
    """Time-trapezoid of the localized half-derivative mass of the snapshots."""
    if dt <= 0:
        raise ConfigurationError("dt must be positive")
    if len(snapshots) < 2:
        raise UsageError("need at least two snapshots")
    grid = snapshots[0].grid
    _, gp = localizer(spec, grid)
    sq = np.sqrt(gp.values)
    vals = [sobolev_norm(Field(grid, sq * f.values), 0.5) ** 2 for f in snapshots]
    return _time_trapezoid(vals, dt)


def g_remainder(v_snapshots, f_snapshots, dt: float, spec: LocalizerSpec,
                gamma: float) -> float:
    """Forcing remainder of the local-smoothing estimate.

    Two time-integrated couplings: the localizer at the probe center
    against v * d_y f, and the localizer at the origin against the
    regularized dual pairings of v and d_y f.
    """
    if len(v_snapshots) != len(f_snapshots):
        raise UsageError("v and f snapshot lists must match in length")
    if len(v_snapshots) < 2:
        raise UsageError("need at least two snapshots")
    grid = v_snapshots[0].grid
    g_y0, _ = localizer(spec, grid)
    g_origin, _ = localizer(LocalizerSpec(spec.gamma, 0.0), grid)
    dual = OperatorSpec("dual", gamma=gamma)
    term = []
    for v, f in zip(v_snapshots, f_snapshots):
        fy = derivative(f)
        first = inner(g_y0 * v, fy)
        second = inner(g_origin * apply_operator(dual, v), apply_operator(dual, fy))
        term.append(first + second)
    return _time_trapezoid(term, dt)


@dataclass
class LinearizedRunSpec:
    """Setup of a forced linearized evolution used by the sweep."""

    initial: Field
    forcing: Field | None
    t_end: float
    dt: float
    snapshot_stride: int = 5


def _check_initial_orthogonality(v0: Field) -> None:
    y = v0.grid.nodes
    q = Field(v0.grid, profile(y))
    qp = Field(v0.grid, profile_derivative(y))
    scale = max(l2_norm(v0), 1e-300)
    for name, g in (("q", q), ("q'", qp)):
        if abs(inner(v0, g)) > 1e-8 * scale * l2_norm(g):
            raise UsageError(
                f"initial data violates the <v, {name}> = 0 orthogonality")


def virial_sweep(run: LinearizedRunSpec, gammas, y0s) -> list:
    """VirialReports for every (gamma, y0, window) combination.

    The evolution is computed once; each report integrates the localized
    norm over the half window and the full window.  The headline claim
    is that for fixed gamma the ratios are uniform across centers and
    window lengths.
    """
    if not gammas:
        return []
    _check_initial_orthogonality(run.initial)
    from .evolution import EvolutionState, evolve_linearized
    res = evolve_linearized(EvolutionState(0.0, run.initial), run.t_end, run.dt,
                            forcing=run.forcing,
                            snapshot_stride=run.snapshot_stride)
    fields = [s.field for s in res.states]
    dt_snap = float(res.times[1] - res.times[0])
    grid = run.initial.grid
    zero = Field.zeros(grid)
    f_field = run.forcing if run.forcing is not None else zero
    reports = []
    for gamma in gammas:
        for y0 in y0s:
            spec = LocalizerSpec(gamma, y0)
            for frac in (0.5, 1.0):
                n_keep = max(2, int(round(frac * (len(fields) - 1))) + 1)
                window = fields[:n_keep]
                t_win = (n_keep - 1) * dt_snap
                lhs = local_smoothing_lhs(window, dt_snap, spec)
                rhs = max(l2_norm(f) for f in window) ** 2
                grem = g_remainder(window, [f_field] * n_keep, dt_snap, spec, gamma)
                denom = rhs + abs(grem)
                reports.append(VirialReport(
                    gamma=float(gamma), y0=float(y0), T=t_win, lhs=lhs,
                    rhs_norm=rhs, g_remainder=grem,
                    ratio=lhs / denom if denom > 0 else math.inf))
    return reports


def monotonicity_mass(v: Field, spec: MonotonicitySpec, shift: float = 0.0) -> float:
    """Weighted mass with the arctan step: integral of v^2 (phi(y-y0-shift) - phi(-y0-shift)).

    phi(y) = pi/2 + arctan(y/A); the weight vanishes far left and
    approaches pi - phi(-y0-shift) far right.
    """
    y = v.grid.nodes
    phi_shifted = 0.5 * math.pi + np.arctan((y - spec.y0 - shift) / spec.A)
    phi_ref = 0.5 * math.pi + math.atan((-spec.y0 - shift) / spec.A)
    w = phi_shifted - phi_ref
    return float(v.grid.spacing * np.sum(v.values ** 2 * w))


def monotonicity_violation(snapshots, times, spec: MonotonicitySpec) -> float:
    """Largest violation of the transported-weight comparison, relative to t=0.

    For the final time t_end, checks mass(t_end, shift=0) against
    mass(t, shift=lam*(t_end - t)) for every earlier snapshot; positive
    return values measure by how much the end mass exceeds the
    transported masses (the monotonicity claim makes this small).
    """
    if len(snapshots) != len(times) or len(snapshots) < 2:
        raise UsageError("snapshot/time lists must match and hold >= 2 entries")
    t_end = times[-1]
    end_mass = monotonicity_mass(snapshots[-1], spec, 0.0)
    worst = 0.0
    for f, t in zip(snapshots[:-1], times[:-1]):
        transported = monotonicity_mass(f, spec, spec.lam * (t_end - t))
        worst = max(worst, end_mass - transported)
    return worst
