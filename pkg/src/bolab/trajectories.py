"""Reference and second-order-corrected parameter trajectories.

Both systems integrate with classic fixed-step RK4 in the slow time
s = h*t.  The reference flow is

    A' = C - W(A),          C' = C W'(A),

and the corrected ("exact") flow adds the curvature terms

    A' = C - W(A) + (h^2/2) W''(A)/C^2,
    C' = C W'(A) + (h^2/2) W'''(A)/C.

Integration of the reference flow stops at the first slow time where C
reaches 1/2 or 2 (located by bisection); "never" is encoded as an
explicit None, not a large float.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import ConfigurationError, UsageError
from .potential import PotentialSpec

FRAMES = ("slow_s", "fast_t")
KINDS = ("reference", "exact", "measured")
SCALE_STOP_LOW = 0.5
SCALE_STOP_HIGH = 2.0


@dataclass
class TrajectoryState:
    frame: str
    kind: str
    times: np.ndarray
    positions: np.ndarray       # A (slow frame) or a (fast frame)
    scales: np.ndarray          # C or c
    stop_time: float | None = None   # event time in the state's frame; None = never
    h: float | None = None

    def __post_init__(self):
        if self.frame not in FRAMES:
            raise ConfigurationError(f"unknown frame {self.frame!r}")
        if self.kind not in KINDS:
            raise ConfigurationError(f"unknown kind {self.kind!r}")
        t = np.asarray(self.times, dtype=float)
        if t.size >= 2 and np.any(np.diff(t) <= 0):
            raise ConfigurationError("times must be strictly increasing")
        if np.any(np.asarray(self.scales) <= 0):
            raise ConfigurationError("scale parameter must stay positive")


def _rk4_step(rhs, y, ds):
    k1 = rhs(y)
    k2 = rhs(y + 0.5 * ds * k1)
    k3 = rhs(y + 0.5 * ds * k2)
    k4 = rhs(y + ds * k3)
    return y + ds / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _reference_rhs(pot: PotentialSpec):
    def rhs(y):
        a, c = y
        w, w1, _, _ = pot.shape_derivatives(a)
        return np.array([c - w, c * w1])
    return rhs


def _exact_rhs(pot: PotentialSpec):
    h2 = pot.h ** 2
    def rhs(y):
        a, c = y
        w, w1, w2, w3 = pot.shape_derivatives(a)
        return np.array([c - w + 0.5 * h2 * w2 / c ** 2,
                         c * w1 + 0.5 * h2 * w3 / c])
    return rhs


def _scale_event(c_prev, c_next):
    for bound in (SCALE_STOP_LOW, SCALE_STOP_HIGH):
        if (c_prev - bound) * (c_next - bound) < 0 or c_next == bound:
            return bound
    return None


def _integrate(rhs, s_end: float, ds: float, detect_stop: bool):
    steps = int(math.ceil(s_end / ds - 1e-12))
    y = np.array([0.0, 1.0])
    times = [0.0]
    ys = [y.copy()]
    stop = None
    for k in range(steps):
        step_len = min(ds, s_end - k * ds)
        y_next = _rk4_step(rhs, y, step_len)
        bound = _scale_event(y[1], y_next[1]) if detect_stop else None
        if bound is not None:
            lo, hi = 0.0, step_len
            for _ in range(80):           # bisection to 1e-10 on the event time
                mid = 0.5 * (lo + hi)
                y_mid = _rk4_step(rhs, y, mid)
                if (y[1] - bound) * (y_mid[1] - bound) < 0:
                    hi = mid
                else:
                    lo = mid
                if hi - lo < 1e-10:
                    break
            s_event = k * ds + 0.5 * (lo + hi)
            y = _rk4_step(rhs, y, 0.5 * (lo + hi))
            times.append(s_event)
            ys.append(y.copy())
            stop = s_event
            break
        y = y_next
        times.append(min((k + 1) * ds, s_end))
        ys.append(y.copy())
    arr = np.array(ys)
    return np.array(times), arr[:, 0], arr[:, 1], stop


def integrate_reference(pot: PotentialSpec, s_end: float, ds: float = 1e-3) -> TrajectoryState:
    """Reference flow from (A, C)(0) = (0, 1); stops early if C hits 1/2 or 2."""
    if not (ds > 0):
        raise ConfigurationError(f"ds must be positive, got {ds}")
    times, pos, sc, stop = _integrate(_reference_rhs(pot), s_end, ds, detect_stop=True)
    return TrajectoryState("slow_s", "reference", times, pos, sc,
                           stop_time=stop, h=pot.h)


def integrate_exact(pot: PotentialSpec, s_end: float, ds: float = 1e-3) -> TrajectoryState:
    """Second-order-corrected flow from (A, C)(0) = (0, 1)."""
    if not (ds > 0):
        raise ConfigurationError(f"ds must be positive, got {ds}")
    times, pos, sc, stop = _integrate(_exact_rhs(pot), s_end, ds, detect_stop=False)
    return TrajectoryState("slow_s", "exact", times, pos, sc, stop_time=None, h=pot.h)


def convert_frame(tr: TrajectoryState, h: float, to: str = "fast_t") -> TrajectoryState:
    """Convert between slow time s and fast time t = s/h.

    Slow -> fast: t = s/h, a = A/h, c = C.  Converting a state to the
    frame it is already in is a usage error.
    """
    if to not in FRAMES:
        raise UsageError(f"unknown target frame {to!r}")
    if tr.frame == to:
        raise UsageError(f"trajectory is already in frame {to!r}")
    if not (h > 0):
        raise ConfigurationError(f"h must be positive, got {h}")
    if to == "fast_t":
        times = tr.times / h
        pos = tr.positions / h
        stop = tr.stop_time / h if tr.stop_time is not None else None
    else:
        times = tr.times * h
        pos = tr.positions * h
        stop = tr.stop_time * h if tr.stop_time is not None else None
    return TrajectoryState(to, tr.kind, times, pos, tr.scales.copy(),
                           stop_time=stop, h=h)


@dataclass
class GronwallReport:
    sup_dev_position: float
    sup_dev_scale: float
    fitted_order: float | None = None       # filled by the sweep variant
    per_h: list = field(default_factory=list)


def gronwall_compare(ref: TrajectoryState, ex: TrajectoryState, h: float) -> GronwallReport:
    """Deviation suprema between two same-frame trajectories on their overlap.

    Both inputs are resampled by cubic interpolation onto a common mesh.
    A single comparison cannot produce an h-order; the fitted_order slot
    stays None (see gronwall_sweep).
    """
    if ref.frame != ex.frame:
        raise UsageError("trajectories live in different frames")
    t_lo = max(ref.times[0], ex.times[0])
    t_hi = min(ref.times[-1], ex.times[-1])
    if not (t_hi > t_lo):
        raise UsageError("trajectories have no overlapping time window")
    mesh = np.linspace(t_lo, t_hi, 1001)
    devs = []
    for get in ("positions", "scales"):
        fr = CubicSpline(ref.times, getattr(ref, get))(mesh)
        fe = CubicSpline(ex.times, getattr(ex, get))(mesh)
        devs.append(float(np.max(np.abs(fr - fe))))
    return GronwallReport(sup_dev_position=devs[0], sup_dev_scale=devs[1])


def gronwall_sweep(pot_factory, h_values, s_end: float, ds: float = 1e-3) -> GronwallReport:
    """Compare reference vs corrected flow across h and fit the deviation order.

    pot_factory(h) must return the potential at slow scale h.  The fitted
    order is the log-log slope of sup|C_exact - C_reference| against h.
    """
    if len(h_values) < 2:
        raise UsageError("sweep needs at least two h values")
    per_h = []
    for h in h_values:
        pot = pot_factory(h)
        ref = integrate_reference(pot, s_end, ds)
        ex = integrate_exact(pot, s_end, ds)
        rep = gronwall_compare(ref, ex, h)
        per_h.append((float(h), rep.sup_dev_position, rep.sup_dev_scale))
    hs = np.array([p[0] for p in per_h])
    dev_c = np.array([p[2] for p in per_h])
    if np.any(dev_c <= 0):
        order = None                      # identical trajectories: no order defined
        sup_a = max(p[1] for p in per_h)
        sup_c = max(p[2] for p in per_h)
    else:
        order = float(np.polyfit(np.log(hs), np.log(dev_c), 1)[0])
        sup_a = max(p[1] for p in per_h)
        sup_c = max(p[2] for p in per_h)
    return GronwallReport(sup_dev_position=sup_a, sup_dev_scale=sup_c,
                          fitted_order=order, per_h=per_h)


def jacobian_bound(pot: PotentialSpec, positions, scales) -> float:
    """Largest Frobenius norm of the flow Jacobian along a trajectory.

    The reference field f(A, C) = (C - W(A), C W'(A)) has Jacobian
    [[-W'(A), 1], [C W''(A), W'(A)]]; its boundedness on the scale window
    is what makes the exponential comparison argument run.
    """
    a = np.asarray(positions, dtype=float)
    c = np.asarray(scales, dtype=float)
    _, w1, w2, _ = pot.shape_derivatives(a)
    fro = np.sqrt(w1 ** 2 + 1.0 + (c * w2) ** 2 + w1 ** 2)
    return float(np.max(fro))


def write_trajectory_csv(path, tr: TrajectoryState) -> None:
    """Trajectory CSV with frame-dependent headers: s,A,C or t,a,c plus kind, frame."""
    head = ["s", "A", "C"] if tr.frame == "slow_s" else ["t", "a", "c"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(head + ["kind", "frame"])
        for t, a, c in zip(tr.times, tr.positions, tr.scales):
            w.writerow([repr(float(t)), repr(float(a)), repr(float(c)),
                        tr.kind, tr.frame])
