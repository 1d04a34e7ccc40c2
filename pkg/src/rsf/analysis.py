"""Classification of ancient solutions, separatrix tracing and blow-up profiles.

Ancient metrics are recognized analytically: up to permuting the fibers a
metric is ancient exactly when ``x <= y = z <= s``.  The numerical routines
here only witness that statement by backward integration.

Metrics of the ancient form are parametrized by ``(y, s)`` with
``x = 1 / (y^2 s^{4n})`` and ``z = y``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import (ClassificationTimeout, IntegrationError, PreconditionError,
                     ProfileWindowError, SameSideError)
from .flow import jensen_slice_value
from .geometry import (CanonicalForm, MetricParams, ModelParams, _check_positive,
                       as_metric, canonicalize, slice_metric, stable_ricci)
from .integrator import IntegratorConfig, integrate
from .trajectory import Direction, FlowKind, TerminalBehavior, TerminalKind, Trajectory

__all__ = [
    "AncientReason", "AncientVerdict", "AncientReport", "classify_ancient",
    "verify_ancient_numerically", "ancient_form_metric", "scalar_ancient_form",
    "rj_minus_rh", "ys_limit_candidates", "jensen_distance", "SeparatrixResult",
    "trace_separatrix", "BlowupProfile", "blowup_profile",
]


class AncientReason(enum.Enum):
    Y_EQUALS_Z_AND_Z_LEQ_S = "YEqualsZAndZLeqS"
    Y_NOT_EQUAL_Z = "YNotEqualZ"
    Z_GREATER_THAN_S = "ZGreaterThanS"


@dataclass(frozen=True)
class AncientVerdict:
    ancient: bool
    reason: AncientReason
    canonical: CanonicalForm
    tol_used: float


def classify_ancient(m, p: ModelParams, tol: float = 1e-12) -> AncientVerdict:
    """Decide whether the normalized flow from ``m`` is ancient.

    After sorting the fibers, ``m`` is ancient iff ``|y - z| <= tol * z`` and
    ``z <= s (1 + tol)``.  No integration is performed.
    """
    if not tol >= 0:
        raise ValueError("tol must be >= 0")
    cf = canonicalize(as_metric(m))
    g = cf.metric
    if abs(g.y - g.z) > tol * g.z:
        reason = AncientReason.Y_NOT_EQUAL_Z
    elif g.z > g.s * (1 + tol):
        reason = AncientReason.Z_GREATER_THAN_S
    else:
        reason = AncientReason.Y_EQUALS_Z_AND_Z_LEQ_S
    return AncientVerdict(reason is AncientReason.Y_EQUALS_Z_AND_Z_LEQ_S, reason, cf, tol)


@dataclass(frozen=True, eq=False)
class AncientReport:
    """Outcome of a backward run compared with :func:`classify_ancient`.

    ``numerical_ancient`` and ``verdict_match`` are ``None`` when the run is
    inconclusive; ``detail`` then says why.
    """

    numerical_ancient: Optional[bool]
    verdict_match: Optional[bool]
    backward_terminal: Optional[TerminalBehavior]
    S_positive_throughout: Optional[bool]
    S_min: Optional[float]
    classifier: AncientVerdict
    detail: str = ""
    trajectory: Optional[Trajectory] = None

    @property
    def conclusive(self) -> bool:
        return self.numerical_ancient is not None


_ANCIENT_KINDS = (TerminalKind.BACKWARD_COLLAPSE, TerminalKind.CONVERGED_JENSEN,
                  TerminalKind.CONVERGED_ROUND)


def verify_ancient_numerically(m, p: ModelParams, cfg: IntegratorConfig | None = None,
                               tol: float = 1e-12) -> AncientReport:
    """Integrate the normalized flow backward from ``m`` and judge ancientness.

    A run is numerically ancient if ``S > 0`` at every sample and it ends in a
    backward collapse or at an Einstein metric; it is non-ancient if it ends in
    a backward singularity.  Everything else is inconclusive.
    """
    verdict = classify_ancient(m, p, tol)
    try:
        traj = integrate(FlowKind.NORMALIZED, m, Direction.BACKWARD, p, cfg)
    except IntegrationError as exc:
        return AncientReport(None, None, None, None, None, verdict,
                             detail=f"inconclusive: {exc}", trajectory=exc.trajectory)
    S = traj.diagnostics["S"]
    positive = bool(np.all(S > 0))
    kind = traj.terminal.kind
    if kind is TerminalKind.BACKWARD_SINGULARITY:
        numerical = False
        detail = ""
    elif kind in _ANCIENT_KINDS and positive:
        numerical = True
        detail = ""
    else:
        numerical = None
        detail = f"inconclusive: {traj.terminal.summary()}"
    match = None if numerical is None else (numerical == verdict.ancient)
    return AncientReport(numerical, match, traj.terminal, positive, float(S.min()), verdict,
                         detail, traj)


def ancient_form_metric(y: float, s: float, p: ModelParams) -> MetricParams:
    """The metric ``(1/(y^2 s^{4n}), y, y, s)``."""
    _check_positive(y, s)
    return MetricParams(1.0 / (y * y * s ** (4 * p.n)), y, y, s)


def scalar_ancient_form(y, s, p: ModelParams):
    """Scalar curvature of :func:`ancient_form_metric`, in closed form."""
    n = p.n
    w = 1.0 / (s ** (4 * n) * y**2)
    return (16 * n * n / s - 8 * n * y / s**2 - w * (4 * n / s**2 + 2 / y**2)
            + 32 * n / s + 8 / y)


def rj_minus_rh(y: float, s: float, p: ModelParams) -> float:
    """``r_j - r_h`` on the ancient form, in factored form.

    The factor ``y - s`` makes the sign visible: positive for ``y > s``.
    """
    _check_positive(y, s)
    n = p.n
    s4n = s ** (4 * n)
    return 2 * (y - s) * (s + y + 2 * s4n * y**3 * ((1 + n) * y - s)) / (y**4 * s ** (2 + 4 * n))


def ys_limit_candidates(p: ModelParams) -> tuple[float, float]:
    """Roots of ``C = (4 + 4n C^2) / (8 + 4n - 4C)``: ``1`` and ``1/(1+n)``.

    Clearing denominators gives ``(1 + n) C^2 - (2 + n) C + 1 = 0``, which
    factors as ``(C - 1)((1 + n) C - 1)``.
    """
    return (1.0, 1.0 / (1 + p.n))


def jensen_distance(m, p: ModelParams) -> float:
    """Max relative deviation of volume-normalized ``m`` from the Jensen metric."""
    g = np.log(np.asarray(as_metric(m).as_tuple()))
    return float(_jensen_distance_logs(g[None, :], p)[0])


def _jensen_distance_logs(u: np.ndarray, p: ModelParams) -> np.ndarray:
    n = p.n
    shift = (u[:, 0] + u[:, 1] + u[:, 2] + 4 * n * u[:, 3]) / p.dim
    lc = math.log(jensen_slice_value(p))
    ref = np.array([lc, lc, lc, -3 * lc / (4 * n)])
    return np.max(np.abs(np.expm1(u - shift[:, None] - ref)), axis=1)


@dataclass(frozen=True)
class SeparatrixResult:
    """Bisection bracket on the stable manifold of the Jensen metric.

    ``side_witnesses`` are the forward terminal behaviors at the lower and
    upper ends of the final bracket.  ``jensen_distance`` is the closest
    volume-normalized approach to Jensen along the forward flow from
    ``point``, attained at ``witness_time``.
    """

    u_star: float
    point: tuple[float, float, float]
    bracket_width: float
    side_witnesses: tuple[TerminalBehavior, TerminalBehavior]
    jensen_distance: float
    witness_time: float
    witness_ok: bool
    iterations: int


_SIDES = (TerminalKind.CONVERGED_ROUND, TerminalKind.FORWARD_BLOWUP)


def trace_separatrix(a, b, p: ModelParams, cfg: IntegratorConfig | None = None,
                     bracket_tol: float = 1e-10, witness_tol: float = 1e-3,
                     max_iter: int = 200) -> SeparatrixResult:
    """Bisect the segment from slice point ``a`` to ``b`` for the separatrix.

    Each probe point ``(1-u) a + u b`` is classified by the forward normalized
    flow as round-converging or blowing up.  A probe that lands on the stable
    manifold itself (converges to Jensen) ends the search.

    Raises
    ------
    SameSideError
        If ``a`` and ``b`` are not on opposite sides.
    ClassificationTimeout
        If a probe reaches the time horizon without an event.
    """
    cfg = cfg or IntegratorConfig()
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != (3,) or b.shape != (3,):
        raise ValueError("a and b must be slice points (x, y, z)")
    _check_positive(*a, *b)

    def point(u):
        return (1.0 - u) * a + u * b

    def classify(u):
        q = point(u)
        traj = integrate(FlowKind.NORMALIZED, slice_metric(*q, p), Direction.FORWARD, p, cfg)
        if traj.terminal.kind is TerminalKind.HORIZON_REACHED:
            raise ClassificationTimeout(f"probe u={u!r} reached the horizon", u=u)
        return traj.terminal

    ta, tb = classify(0.0), classify(1.0)
    if {ta.kind, tb.kind} != set(_SIDES):
        raise SameSideError(f"endpoints classify as {ta.kind.value} and {tb.kind.value}")
    lo, hi, t_lo, t_hi = 0.0, 1.0, ta, tb
    it = 0
    on_manifold = False
    while hi - lo > bracket_tol and it < max_iter:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        it += 1
        tm = classify(mid)
        if tm.kind is TerminalKind.CONVERGED_JENSEN:
            lo = hi = mid
            on_manifold = True
            break
        if tm.kind is t_lo.kind:
            lo, t_lo = mid, tm
        else:
            hi, t_hi = mid, tm
    u_star = 0.5 * (lo + hi)
    q = point(u_star)
    dist, t_w = _closest_jensen_approach(q, p, cfg)
    width = 0.0 if on_manifold else hi - lo
    return SeparatrixResult(float(u_star), tuple(q.tolist()), float(width), (t_lo, t_hi),
                            dist, t_w, dist <= witness_tol, it)


def _closest_jensen_approach(q, p, cfg, per_step: int = 16):
    traj = integrate(FlowKind.NORMALIZED, slice_metric(*q, p), Direction.FORWARD, p, cfg)
    logs = np.log(traj.states)
    d = _jensen_distance_logs(logs, p)
    k = int(np.argmin(d))
    best, t_best = float(d[k]), float(traj.times[k])
    if traj.dense is not None and len(traj.dense):
        # refine on the steps adjacent to the best sample
        for j in (k - 1, k):
            if 0 <= j < len(traj.dense):
                tt = traj.dense.step_times(j, per_step)
                dd = _jensen_distance_logs(traj.dense.log_state(tt), p)
                i = int(np.argmin(dd))
                if dd[i] < best:
                    best, t_best = float(dd[i]), float(tt[i])
    return best, t_best


@dataclass(frozen=True)
class BlowupProfile:
    """Parameter-level limits at a forward singularity.

    ``rescaled_ricci`` holds ``6 r_a / S``, the Ricci eigenvalues of the
    rescaled metric ``(S/6) g``.  Normalizing so that the fiber part is a unit
    round 3-sphere makes the expected limit ``(2, 2, 2, 0)``.
    """

    xS_limit: float
    rescaled_ricci: tuple[float, float, float, float]
    ratio_limits: tuple[float, float]
    window_times: np.ndarray
    window_xS: np.ndarray
    window_samples: int


def blowup_profile(traj: Trajectory, p: ModelParams, window: float = 0.01,
                   min_samples: int = 50) -> BlowupProfile:
    """Limits of ``x S``, rescaled Ricci and fiber ratios at a forward blow-up.

    The window consists of samples with ``S >= window * S_end``.  When the
    trajectory has fewer than ``min_samples`` there, it is resampled from
    the dense output.
    """
    if traj.terminal.kind is not TerminalKind.FORWARD_BLOWUP:
        raise PreconditionError(f"trajectory ends in {traj.terminal.kind.value}, not ForwardBlowup")
    S = traj.diagnostics["S"]
    S_end = float(S[-1])
    in_win = np.flatnonzero(S >= window * S_end)
    times, states = traj.times[in_win], traj.states[in_win]
    if len(in_win) < min_samples and traj.dense is not None and len(in_win) >= 1:
        t0 = float(traj.times[max(in_win[0] - 1, 0)])
        t1 = float(traj.times[-1])
        # geometric clustering toward the singular time
        gaps = (t1 - t0) * np.geomspace(1.0, 1e-6, 4 * min_samples)
        tt = np.concatenate([t1 - gaps, [t1]])
        gg = traj.dense.state(tt[:-1])
        gg = np.vstack([gg, traj.states[-1]])
        SS = np.array([stable_ricci(*row, p.n)[4] for row in gg.tolist()])
        keep = SS >= window * S_end
        times, states = tt[keep], gg[keep]
    if len(times) < min_samples:
        raise ProfileWindowError(f"only {len(times)} samples with S >= {window!r} * S_end")
    win_S = np.array([stable_ricci(*row, p.n)[4] for row in states.tolist()])
    x, y, z, s = states[-1].tolist()
    r_i, r_j, r_k, r_h, S_fin = stable_ricci(x, y, z, s, p.n)
    return BlowupProfile(
        xS_limit=x * S_fin,
        rescaled_ricci=tuple(6.0 * r / S_fin for r in (r_i, r_j, r_k, r_h)),
        ratio_limits=(x / z, y / z),
        window_times=times,
        window_xS=states[:, 0] * win_S,
        window_samples=len(times),
    )
