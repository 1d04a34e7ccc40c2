"""Vector fields of the Ricci flow and its volume-normalized version.

Unnormalized flow: ``g_a' = -2 g_a r_a``.  Normalized flow:
``g_a' = -2 g_a (r_a - S/N)`` with ``N = 4n + 3``; it preserves
``x y z s^{4n}`` and is twice the L2 gradient of the scalar curvature on
the volume-one slice, where it reduces to an ODE in ``(x, y, z)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_simpson

from .errors import DomainError, QuadratureError, StepUnderflowError
from .geometry import (ModelParams, TangentVector, as_metric, scalar_components,
                       stable_ricci, _check_positive)
from .trajectory import (Direction, FlowKind, ReparamMap, TerminalBehavior,
                         TerminalKind, Trajectory)

__all__ = [
    "FlowKind", "FixedPointName", "FixedPointInfo", "Linearization",
    "unnormalized_field", "normalized_field", "slice_field", "log_field",
    "jensen_slice_value", "fixed_points", "linearization",
    "reparametrize_to_normalized",
]


def log_field(u, normalized: bool, n: int):
    """Right-hand side in log coordinates ``u_a = ln g_a``.

    Returns ``(du, S)`` where ``du`` is a tuple of four floats and ``S`` the
    scalar curvature at ``exp(u)``.
    """
    x, y, z, s = (math.exp(v) for v in u)
    r_i, r_j, r_k, r_h, S = stable_ricci(x, y, z, s, n)
    if normalized:
        c = S / (4 * n + 3)
        return (-2.0 * (r_i - c), -2.0 * (r_j - c), -2.0 * (r_k - c), -2.0 * (r_h - c)), S
    return (-2.0 * r_i, -2.0 * r_j, -2.0 * r_k, -2.0 * r_h), S


def unnormalized_field(m, p: ModelParams) -> TangentVector:
    m = as_metric(m)
    r_i, r_j, r_k, r_h, _ = stable_ricci(m.x, m.y, m.z, m.s, p.n)
    return TangentVector(-2 * m.x * r_i, -2 * m.y * r_j, -2 * m.z * r_k, -2 * m.s * r_h)


def normalized_field(m, p: ModelParams) -> TangentVector:
    m = as_metric(m)
    r_i, r_j, r_k, r_h, S = stable_ricci(m.x, m.y, m.z, m.s, p.n)
    c = S / p.dim
    return TangentVector(-2 * m.x * (r_i - c), -2 * m.y * (r_j - c),
                         -2 * m.z * (r_k - c), -2 * m.s * (r_h - c))


def slice_field(x: float, y: float, z: float, p: ModelParams) -> np.ndarray:
    """The normalized flow restricted to volume one, in ``(x, y, z)``."""
    _check_positive(x, y, z)
    x, y, z = float(x), float(y), float(z)
    s = (x * y * z) ** (-1.0 / (4 * p.n))
    v = normalized_field((x, y, z, s), p)
    return np.array([v.h_x, v.h_y, v.h_z])


class FixedPointName(enum.Enum):
    ROUND = "Round"
    JENSEN = "Jensen"


@dataclass(frozen=True)
class FixedPointInfo:
    """An Einstein fixed point on the slice with its predicted linearization.

    At a point with ``x = y = z`` the Jacobian is circulant with diagonal
    ``a`` and off-diagonal ``b``, so its spectrum is ``a + 2b`` on
    ``(1, 1, 1)`` and ``a - b`` (double) on the orthogonal plane.
    """

    name: FixedPointName
    slice_point: tuple[float, float, float]
    a: float
    b: float

    @property
    def eigenvalues(self) -> list[tuple[float, int, tuple[float, float, float]]]:
        r3, r6 = 1 / math.sqrt(3), 1 / math.sqrt(6)
        return [(self.a + 2 * self.b, 1, (r3, r3, r3)),
                (self.a - self.b, 2, (2 * r6, -r6, -r6))]

    def metric(self, p: ModelParams):
        from .geometry import slice_metric
        return slice_metric(*self.slice_point, p)


def jensen_slice_value(p: ModelParams) -> float:
    """Common fiber value ``(2n+3)^(-4n/(4n+3))`` of the volume-one Jensen metric."""
    n = p.n
    return (2 * n + 3) ** (-4 * n / (4 * n + 3))


def fixed_points(p: ModelParams) -> list[FixedPointInfo]:
    n = p.n
    c = jensen_slice_value(p)
    k = (2 * n + 3) ** (-(4 * n + 6) / (4 * n + 3))
    jensen = FixedPointInfo(FixedPointName.JENSEN, (c, c, c),
                            -8 * (2 * n * n + 7 * n + 5) * k,
                            16 * (n + 1) * (n + 2) * k)
    rnd = FixedPointInfo(FixedPointName.ROUND, (1.0, 1.0, 1.0), -8.0 * (1 + n), 0.0)
    return [rnd, jensen]


@dataclass(frozen=True)
class Linearization:
    """Finite-difference Jacobian of :func:`slice_field` and its spectrum.

    Eigenpairs are sorted by decreasing real part; ``eigenvectors[:, k]``
    belongs to ``eigenvalues[k]``.
    """

    point: tuple[float, float, float]
    jacobian: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def linearization(point, p: ModelParams, fd_step: float | None = None) -> Linearization:
    pt = np.array(point, dtype=float)
    if pt.shape != (3,):
        raise DomainError("linearization expects a slice point (x, y, z)")
    _check_positive(*pt)
    if fd_step is None:
        fd_step = np.finfo(float).eps ** (1 / 3) * float(np.max(np.abs(pt)))
    J = np.empty((3, 3))
    for j in range(3):
        up, dn = pt.copy(), pt.copy()
        up[j] += fd_step
        dn[j] -= fd_step
        if up[j] == pt[j] or dn[j] == pt[j]:
            raise StepUnderflowError(f"fd_step={fd_step!r} does not move coordinate {j}")
        if dn[j] <= 0:
            raise DomainError(f"fd_step={fd_step!r} leaves the positive octant")
        J[:, j] = (slice_field(*up, p) - slice_field(*dn, p)) / (up[j] - dn[j])
    w, V = np.linalg.eig(J)
    order = np.argsort(-w.real, kind="stable")
    w, V = w[order], V[:, order]
    if np.all(np.abs(w.imag) == 0):
        w, V = w.real, V.real
    return Linearization(tuple(pt.tolist()), J, w, V)


def reparametrize_to_normalized(traj: Trajectory, p: ModelParams, tol: float = 1e-10,
                                samples_per_step: int = 4, max_level: int = 14) -> Trajectory:
    """Map an unnormalized run onto the normalized flow by a time change.

    With ``r(t) = exp(2/N * int_0^t S)`` and ``f' = r``, ``f(0) = 0``, the
    metrics ``r(t) g(t)`` at times ``f(t)`` solve the normalized flow.  Both
    integrals are taken on the dense output of ``traj``: per step a composite
    rule is refined by doubling until successive levels agree to ``tol``.
    """
    if traj.flow is not FlowKind.UNNORMALIZED or traj.direction is not Direction.FORWARD:
        raise ValueError("expects a forward trajectory of the unnormalized flow")
    N = p.dim
    dense = traj.dense
    if len(traj) == 1:
        times = np.array([0.0])
        out_states = traj.states.copy()
        rmap = ReparamMap(traj.times.copy(), np.array([1.0]), np.array([0.0]))
    else:
        if dense is None or len(dense) != len(traj) - 1:
            raise QuadratureError("trajectory lacks the dense output needed for quadrature")
        r_acc, f_acc = 1.0, 0.0
        ts, rs, fs, gs = [traj.times[0]], [1.0], [0.0], [traj.states[0]]
        for k in range(len(dense)):
            I_nodes, F_nodes, t_nodes, g_nodes = _step_integrals(dense, k, r_acc, N, p.n,
                                                                 tol, samples_per_step, max_level)
            r_nodes = r_acc * np.exp(2.0 / N * I_nodes)
            for j in range(1, len(t_nodes)):
                ts.append(t_nodes[j])
                rs.append(r_nodes[j])
                fs.append(f_acc + F_nodes[j])
                gs.append(g_nodes[j])
            r_acc = r_nodes[-1]
            f_acc = f_acc + F_nodes[-1]
        rs, fs = np.array(rs), np.array(fs)
        rmap = ReparamMap(np.array(ts), rs, fs)
        out_states = np.array(gs) * rs[:, None]
        times = fs
    src = traj.terminal.kind
    kind = src if src in (TerminalKind.CONVERGED_ROUND, TerminalKind.CONVERGED_JENSEN) \
        else TerminalKind.HORIZON_REACHED
    term = TerminalBehavior(kind, float(times[-1]),
                            detail=f"reparametrized from {src.value} at t={traj.terminal.t_end!r}")
    return Trajectory(FlowKind.NORMALIZED, Direction.FORWARD, p, times, out_states, term,
                      reparam=rmap)


def _step_integrals(dense, k, r0, N, n, tol, per_step, max_level):
    prev = None
    for level in range(2, max_level + 1):
        sub = 2 ** level
        tt = dense.step_times(k, per_step * sub)
        g = dense.state(tt)
        S = scalar_components(g[:, 0], g[:, 1], g[:, 2], g[:, 3], n)
        I = cumulative_simpson(S, x=tt, initial=0.0)
        F = cumulative_simpson(r0 * np.exp(2.0 / N * I), x=tt, initial=0.0)
        cur = (I[::sub], F[::sub])
        if prev is not None:
            dI = np.max(np.abs(cur[0] - prev[0])) * 2.0 / N
            dF = np.max(np.abs(cur[1] - prev[1])) / max(1.0, float(np.max(np.abs(cur[1]))))
            if dI <= tol and dF <= tol:
                return cur[0], cur[1], tt[::sub], g[::sub]
        prev = cur
    raise QuadratureError(f"quadrature on step {k} did not reach tol={tol!r} "
                          f"after {max_level} refinements")
