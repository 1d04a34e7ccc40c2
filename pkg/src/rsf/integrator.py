"""Adaptive integration of the flows with terminal-event detection.

States are integrated in log coordinates ``u_a = ln g_a`` with the
Dormand-Prince 5(4) pair, so every emitted metric is strictly positive.
Backward runs integrate the negated field in ``tau = -t``.

A run stops at the first of:

* ``S >= blowup_S`` going forward (:attr:`TerminalKind.FORWARD_BLOWUP`),
* ``S <= backward_S_floor`` going backward, or a step collapse below
  ``min_step`` while ``S`` decreases (:attr:`TerminalKind.BACKWARD_SINGULARITY`),
* the volume-normalized state lying within ``einstein_tol`` of the round or
  Jensen metric with ``|Ric^0|^2 < einstein_tol`` (``CONVERGED_*``),
* ``|t| >= t_horizon`` (:attr:`TerminalKind.HORIZON_REACHED`, which
  :func:`detect_terminal` may refine into a backward collapse).

Threshold crossings are located by bisection on the dense output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InconsistentTrajectoryError, IntegrationError
from .flow import jensen_slice_value, log_field
from .geometry import ModelParams, as_metric, stable_ricci
from .trajectory import (DenseOutput, Direction, FlowKind, TerminalBehavior,
                         TerminalKind, Trajectory)

__all__ = ["IntegratorConfig", "integrate", "detect_terminal", "monitor_series",
           "SeriesReport", "einstein_match", "collapse_ratio"]


@dataclass(frozen=True)
class IntegratorConfig:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_steps: int = 200_000
    t_horizon: float = 1000.0
    blowup_S: float = 1e8
    backward_S_floor: float = -1e6
    einstein_tol: float = 1e-9  # 0 disables convergence detection
    min_step: float = 1e-14
    dense_output: bool = True
    event_time_tol: float = 1e-12
    collapse_s_min: float = 100.0
    collapse_window: float = 0.2
    snap_tol: float = 1e-2

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("rel_tol and abs_tol must be positive")
        if not self.blowup_S > 0 > self.backward_S_floor:
            raise ValueError("need blowup_S > 0 > backward_S_floor")
        if not self.min_step > 0:
            raise ValueError("min_step must be positive")
        if not self.t_horizon > 0:
            raise ValueError("t_horizon must be positive")
        if self.einstein_tol < 0:
            raise ValueError("einstein_tol must be >= 0")
        if int(self.max_steps) < 1:
            raise ValueError("max_steps must be >= 1")

    def replace(self, **changes) -> "IntegratorConfig":
        from dataclasses import replace
        return replace(self, **changes)


# Dormand-Prince 5(4) tableau
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A2 = (1 / 5,)
_A3 = (3 / 40, 9 / 40)
_A4 = (44 / 45, -56 / 15, 32 / 9)
_A5 = (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729)
_A6 = (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656)
_B = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84)
_E = (71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40)
# continuous extension (Hairer, Norsett & Wanner)
_D = (-12715105075 / 11282082432, 0.0, 87487479700 / 32700410799,
      -10690763975 / 1880347072, 701980252875 / 199316789632,
      -1453857185 / 822651844, 69997945 / 29380423)


def _fixed_point_logs(p: ModelParams):
    c = jensen_slice_value(p)
    lc = math.log(c)
    return {TerminalKind.CONVERGED_ROUND: (0.0, 0.0, 0.0, 0.0),
            TerminalKind.CONVERGED_JENSEN: (lc, lc, lc, -3 * lc / (4 * p.n))}


def einstein_match(g, p: ModelParams, tol: float):
    """Return the ``CONVERGED_*`` kind if ``g`` is within ``tol`` of an Einstein metric.

    ``g`` is first rescaled to volume one.  Both ``|Ric^0|^2 < tol`` and a
    max relative distance ``< tol`` to the fixed point are required.
    """
    if tol <= 0:
        return None
    u = [math.log(v) for v in g]
    shift = (u[0] + u[1] + u[2] + 4 * p.n * u[3]) / p.dim
    u = [v - shift for v in u]
    x, y, z, s = (math.exp(v) for v in u)
    r_i, r_j, r_k, r_h, S = stable_ricci(x, y, z, s, p.n)
    mean = S / p.dim
    ric0 = math.fsum(((r_i - mean)**2, (r_j - mean)**2, (r_k - mean)**2,
                      4 * p.n * (r_h - mean)**2))
    if not ric0 < tol:
        return None
    for kind, fp in _fixed_point_logs(p).items():
        if max(abs(math.expm1(a - b)) for a, b in zip(u, fp)) < tol:
            return kind
    return None


def _initial_step(f, u0, k1, sc, horizon):
    d0 = max(abs(a) / b for a, b in zip(u0, sc))
    d1 = max(abs(a) / b for a, b in zip(k1, sc))
    h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    h0 = min(h0, horizon)
    try:
        k2, _ = f(u0 + h0 * k1)
    except (ArithmeticError, ValueError):
        return h0
    d2 = max(abs(a - b) / c for a, b, c in zip(k2, k1, sc)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1, horizon)


def integrate(flow, m0, direction, p: ModelParams, cfg: IntegratorConfig | None = None) -> Trajectory:
    """Integrate ``flow`` from ``m0`` forward or backward in time.

    Raises
    ------
    IntegrationError
        If the step size underflows without an event, or ``max_steps`` is
        exhausted.  The truncated trajectory is attached to the exception.
    """
    flow = FlowKind.parse(flow)
    direction = Direction.parse(direction)
    cfg = cfg or IntegratorConfig()
    m0 = as_metric(m0)
    sigma = direction.sign
    normalized = flow is FlowKind.NORMALIZED
    n = p.n

    def f(u):
        du, S = log_field(u, normalized, n)
        return sigma * np.array(du), S

    u = np.log(m0.as_array())
    k1, S_cur = f(u)
    taus, states, S_hist = [0.0], [m0.as_array()], [S_cur]
    tau0s, hs, coeffs = [], [], []

    def build(kind, detail=""):
        dense = None
        if cfg.dense_output and hs:
            dense = DenseOutput(sigma, np.array(tau0s), np.array(hs), np.array(coeffs))
        times = sigma * np.array(taus) + 0.0  # no negative zero at t = 0
        term = TerminalBehavior(kind, float(times[-1]), detail=detail)
        return Trajectory(flow, direction, p, times, np.array(states), term, dense)

    start_kind = einstein_match(m0.as_tuple(), p, cfg.einstein_tol)
    if start_kind is not None:
        traj = build(start_kind, "initial state is an Einstein metric")
        return traj.with_terminal(detect_terminal(traj, p, cfg))

    rtol, atol = cfg.rel_tol, cfg.abs_tol
    horizon = cfg.t_horizon
    tau = 0.0
    sc0 = np.full(4, atol + rtol)
    h = _initial_step(f, u, k1, sc0, horizon)
    steps = 0
    rejected_last = False
    event = None

    while event is None:
        if steps >= cfg.max_steps:
            raise IntegrationError(f"max_steps={cfg.max_steps} exceeded at t={sigma * tau!r}",
                                   build(TerminalKind.HORIZON_REACHED, "truncated: max_steps"))
        remaining = horizon - tau
        clipped = h >= remaining
        if clipped:
            h = remaining
        elif h < cfg.min_step:
            if direction is Direction.BACKWARD and len(S_hist) > 1 and S_hist[-1] < S_hist[-2]:
                event = (TerminalKind.BACKWARD_SINGULARITY, "step size collapsed while S decreasing")
                break
            raise IntegrationError(f"step underflow without event at t={sigma * tau!r}",
                                   build(TerminalKind.HORIZON_REACHED, "truncated: step underflow"))
        steps += 1

        try:
            k2, _ = f(u + h * (_A2[0] * k1))
            k3, _ = f(u + h * (_A3[0] * k1 + _A3[1] * k2))
            k4, _ = f(u + h * (_A4[0] * k1 + _A4[1] * k2 + _A4[2] * k3))
            k5, _ = f(u + h * (_A5[0] * k1 + _A5[1] * k2 + _A5[2] * k3 + _A5[3] * k4))
            k6, _ = f(u + h * (_A6[0] * k1 + _A6[1] * k2 + _A6[2] * k3 + _A6[3] * k4 + _A6[4] * k5))
            u_new = u + h * (_B[0] * k1 + _B[2] * k3 + _B[3] * k4 + _B[4] * k5 + _B[5] * k6)
            k7, S_new = f(u_new)
            err = h * (_E[0] * k1 + _E[2] * k3 + _E[3] * k4 + _E[4] * k5 + _E[5] * k6 + _E[6] * k7)
            err_norm = float(np.max(np.abs(err))) / (atol + rtol)
        except (ArithmeticError, ValueError):
            # a trial stage left the representable range: shrink the step
            err_norm = S_new = math.inf
        if not math.isfinite(err_norm) or not math.isfinite(S_new):
            h *= 0.2
            rejected_last = True
            continue
        if err_norm > 1.0:
            h *= max(0.2, 0.9 * err_norm ** -0.2)
            rejected_last = True
            continue

        ydiff = u_new - u
        bspl = h * k1 - ydiff
        rc5 = h * (_D[0] * k1 + _D[2] * k3 + _D[3] * k4 + _D[4] * k5 + _D[5] * k6 + _D[6] * k7)
        cstep = np.stack([u, ydiff, bspl, ydiff - h * k7 - bspl, rc5])

        crossing = None
        if direction is Direction.FORWARD and S_new >= cfg.blowup_S:
            crossing = (cfg.blowup_S, TerminalKind.FORWARD_BLOWUP, 1.0)
        elif direction is Direction.BACKWARD and S_new <= cfg.backward_S_floor:
            crossing = (cfg.backward_S_floor, TerminalKind.BACKWARD_SINGULARITY, -1.0)

        tau0s.append(tau)
        hs.append(h)
        coeffs.append(cstep)
        if crossing is not None:
            level, kind, orient = crossing
            theta = _locate(cstep, h, level, orient, n, cfg.event_time_tol)
            u_ev = _dense_eval(cstep, theta)
            taus.append(tau + theta * h)
            g_ev = np.exp(u_ev)
            states.append(g_ev)
            S_hist.append(stable_ricci(*g_ev.tolist(), n)[4])
            event = (kind, f"S crossed {level!r}")
            break

        tau = horizon if clipped else tau + h
        u, k1, S_cur = u_new, k7, S_new
        taus.append(tau)
        states.append(np.exp(u))
        S_hist.append(S_cur)

        kind = einstein_match(states[-1].tolist(), p, cfg.einstein_tol)
        if kind is not None:
            event = (kind, "")
            break
        if clipped:
            event = (TerminalKind.HORIZON_REACHED, "")
            break

        fac = min(5.0, max(0.2, 0.9 * err_norm ** -0.2)) if err_norm > 0 else 5.0
        if rejected_last:
            fac = min(fac, 1.0)
        rejected_last = False
        h *= fac

    traj = build(*event)
    return traj.with_terminal(detect_terminal(traj, p, cfg))


def _dense_eval(c, theta):
    th1 = 1.0 - theta
    return c[0] + theta * (c[1] + th1 * (c[2] + theta * (c[3] + th1 * c[4])))


def _locate(cstep, h, level, orient, n, time_tol):
    """Smallest theta in (0, 1] (to ``time_tol`` in time) with ``orient*(S - level) >= 0``."""
    def past(theta):
        g = np.exp(_dense_eval(cstep, theta)).tolist()
        return orient * (stable_ricci(*g, n)[4] - level) >= 0

    lo, hi = 0.0, 1.0
    while (hi - lo) * h > time_tol:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if past(mid):
            hi = mid
        else:
            lo = mid
    return hi


def _normalized_parts(states: np.ndarray, p: ModelParams):
    logv = np.log(states[:, 0]) + np.log(states[:, 1]) + np.log(states[:, 2]) \
        + 4 * p.n * np.log(states[:, 3])
    lam = np.exp(-logv / p.dim)
    return lam


def collapse_ratio(traj: Trajectory, p: ModelParams, cfg: IntegratorConfig):
    """Late-time mean of the canonical ``y/s`` in the backward collapse regime.

    Returns ``None`` unless the trajectory has ``S > 0`` throughout and at
    least five samples with volume-normalized ``s > collapse_s_min`` over
    which the volume-normalized ``S`` does not increase.
    """
    S = traj.diagnostics["S"]
    if len(traj) < 5 or not np.all(S > 0):
        return None
    lam = _normalized_parts(traj.states, p)
    s_norm = traj.states[:, 3] * lam
    idx = np.flatnonzero(s_norm > cfg.collapse_s_min)
    if len(idx) < 5:
        return None
    tail = idx[-max(5, int(math.ceil(cfg.collapse_window * len(idx)))):]
    S_norm = S[tail] / lam[tail]
    if np.any(np.diff(S_norm) > 1e-10 * np.abs(S_norm[:-1])):
        return None
    ys = np.sort(traj.states[tail, :3], axis=1)[:, 1] / traj.states[tail, 3]
    return float(np.mean(ys))


def detect_terminal(traj: Trajectory, p: ModelParams, cfg: IntegratorConfig | None = None) -> TerminalBehavior:
    """Re-derive the terminal behavior of ``traj`` from its diagnostics.

    Backward runs that reach the horizon in the collapse regime are
    reported as :attr:`TerminalKind.BACKWARD_COLLAPSE` with the ratio
    snapped to ``1`` or ``1/(1+n)``; otherwise the raw ratio is recorded in
    ``detail``.
    """
    cfg = cfg or IntegratorConfig()
    recorded = traj.terminal
    S_last = float(traj.diagnostics["S"][-1])
    t_end = float(traj.times[-1])
    backward = traj.direction is Direction.BACKWARD
    detail = recorded.detail

    if not backward and S_last >= cfg.blowup_S * (1 - 1e-9):
        derived = TerminalBehavior(TerminalKind.FORWARD_BLOWUP, t_end, detail=detail)
    elif backward and (S_last <= cfg.backward_S_floor * (1 - 1e-9)
                       or (recorded.kind is TerminalKind.BACKWARD_SINGULARITY
                           and len(traj) > 1 and S_last < traj.diagnostics["S"][-2])):
        derived = TerminalBehavior(TerminalKind.BACKWARD_SINGULARITY, t_end, detail=detail)
    elif (kind := einstein_match(traj.states[-1].tolist(), p, cfg.einstein_tol)) is not None:
        derived = TerminalBehavior(kind, t_end, detail=detail)
    elif abs(t_end) >= cfg.t_horizon * (1 - 1e-12):
        derived = TerminalBehavior(TerminalKind.HORIZON_REACHED, t_end, detail=detail)
        if backward:
            ratio = collapse_ratio(traj, p, cfg)
            if ratio is not None:
                for cand in (1.0, 1.0 / (1 + p.n)):
                    if abs(ratio - cand) <= cfg.snap_tol:
                        derived = TerminalBehavior(TerminalKind.BACKWARD_COLLAPSE, t_end, cand,
                                                   f"late-time mean y/s={ratio!r}")
                        break
                else:
                    derived = TerminalBehavior(TerminalKind.HORIZON_REACHED, t_end,
                                               detail=f"inconclusive: late-time mean y/s={ratio!r}")
            else:
                derived = TerminalBehavior(TerminalKind.HORIZON_REACHED, t_end,
                                           detail="inconclusive: no collapse regime")
    else:
        raise InconsistentTrajectoryError(
            f"recorded {recorded.kind.value} but final diagnostics match no terminal event")

    refinable = recorded.kind is TerminalKind.HORIZON_REACHED and derived.kind is TerminalKind.BACKWARD_COLLAPSE
    if derived.kind is not recorded.kind and not refinable:
        raise InconsistentTrajectoryError(
            f"recorded {recorded.kind.value} but diagnostics indicate {derived.kind.value}")
    return derived


@dataclass(frozen=True)
class SeriesReport:
    quantity: str
    values: np.ndarray
    nondecreasing: bool
    nonincreasing: bool

    @property
    def verdict(self) -> str:
        if self.nondecreasing and self.nonincreasing:
            return "constant"
        if self.nondecreasing:
            return "nondecreasing"
        if self.nonincreasing:
            return "nonincreasing"
        return "nonmonotone"


_QUANTITIES = {
    "x/z": lambda d, st: d["x_over_z"],
    "y/z": lambda d, st: d["y_over_z"],
    "y/s": lambda d, st: d["y_over_s"],
    "S": lambda d, st: d["S"],
    "x*S": lambda d, st: st[:, 0] * d["S"],
}
_ALIASES = {"xS": "x*S", "x·S": "x*S", "x_over_z": "x/z", "y_over_z": "y/z", "y_over_s": "y/s"}


def monitor_series(traj: Trajectory, quantity: str, slack: float = 1e-10) -> SeriesReport:
    """Sample a diagnostic along ``traj`` and judge its monotonicity.

    A step may move against the verdict by at most ``slack * max(1, |value|)``.
    """
    key = _ALIASES.get(quantity, quantity)
    if key not in _QUANTITIES:
        raise KeyError(f"unknown quantity {quantity!r}; choose from {sorted(_QUANTITIES)}")
    vals = np.asarray(_QUANTITIES[key](traj.diagnostics, traj.states), dtype=float)
    if len(vals) < 2:
        return SeriesReport(key, vals, True, True)
    d = np.diff(vals)
    tol = slack * np.maximum(1.0, np.abs(vals[:-1]))
    return SeriesReport(key, vals, bool(np.all(d >= -tol)), bool(np.all(d <= tol)))
