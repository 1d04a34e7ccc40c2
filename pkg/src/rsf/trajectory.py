"""Trajectory records shared by the flow, integrator, analysis and I/O layers."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .geometry import MetricParams, ModelParams, stable_ricci

__all__ = [
    "FlowKind", "Direction", "TerminalKind", "TerminalBehavior",
    "DenseOutput", "ReparamMap", "Trajectory", "DIAGNOSTIC_NAMES", "diagnostics_of",
]


class FlowKind(enum.Enum):
    UNNORMALIZED = "Unnormalized"
    NORMALIZED = "Normalized"

    @classmethod
    def parse(cls, v) -> "FlowKind":
        if isinstance(v, cls):
            return v
        key = str(v).strip().lower()
        for member in cls:
            if member.value.lower() == key or member.name.lower() == key:
                return member
        raise ValueError(f"unknown flow kind {v!r}")


class Direction(enum.Enum):
    FORWARD = "forward"
    BACKWARD = "backward"

    @property
    def sign(self) -> float:
        return 1.0 if self is Direction.FORWARD else -1.0

    @classmethod
    def parse(cls, v) -> "Direction":
        if isinstance(v, cls):
            return v
        try:
            return cls(str(v).strip().lower())
        except ValueError:
            raise ValueError(f"unknown direction {v!r}") from None


class TerminalKind(enum.Enum):
    CONVERGED_ROUND = "ConvergedRound"
    CONVERGED_JENSEN = "ConvergedJensen"
    FORWARD_BLOWUP = "ForwardBlowup"
    BACKWARD_COLLAPSE = "BackwardCollapse"
    BACKWARD_SINGULARITY = "BackwardSingularity"
    HORIZON_REACHED = "HorizonReached"


@dataclass(frozen=True)
class TerminalBehavior:
    """How a trajectory ended.

    ``ratio_limit`` is only set for :attr:`TerminalKind.BACKWARD_COLLAPSE`
    and is then one of ``1`` or ``1/(1+n)``.
    """

    kind: TerminalKind
    t_end: float
    ratio_limit: Optional[float] = None
    detail: str = ""

    def summary(self) -> str:
        out = f"{self.kind.value} t_end={self.t_end!r}"
        if self.ratio_limit is not None:
            out += f" ratio_limit={self.ratio_limit!r}"
        if self.detail:
            out += f" ({self.detail})"
        return out


@dataclass(frozen=True)
class DenseOutput:
    """Piecewise quartic interpolant of the log-state over accepted steps.

    Step ``k`` covers integration time ``tau0[k] .. tau0[k] + h[k]``; physical
    time is ``sign * tau``.  ``coeffs[k]`` holds the five continuous-extension
    vectors of the Dormand-Prince pair.
    """

    sign: float
    tau0: np.ndarray
    h: np.ndarray
    coeffs: np.ndarray

    def __len__(self):
        return len(self.h)

    def log_state(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        tau = self.sign * t
        k = np.clip(np.searchsorted(self.tau0, tau, side="right") - 1, 0, len(self.h) - 1)
        theta = ((tau - self.tau0[k]) / self.h[k])[..., None]
        c = self.coeffs[k]
        th1 = 1.0 - theta
        return c[..., 0, :] + theta * (c[..., 1, :] + th1 * (c[..., 2, :] + theta * (
            c[..., 3, :] + th1 * c[..., 4, :])))

    def state(self, t) -> np.ndarray:
        return np.exp(self.log_state(t))

    def step_times(self, k: int, count: int) -> np.ndarray:
        """``count + 1`` equally spaced physical times across step ``k``."""
        tau = self.tau0[k] + self.h[k] * np.linspace(0.0, 1.0, count + 1)
        return self.sign * tau


@dataclass(frozen=True)
class ReparamMap:
    """Samples of the time change between the two flows.

    ``r_values[k]`` rescales the unnormalized metric at ``times[k]``;
    ``f_values[k]`` is the matching normalized time.
    """

    times: np.ndarray
    r_values: np.ndarray
    f_values: np.ndarray


DIAGNOSTIC_NAMES = ("S", "r_i", "r_j", "r_k", "r_h", "ric0_sq", "vol",
                    "x_over_z", "y_over_z", "y_over_s")


def diagnostics_of(states: np.ndarray, p: ModelParams) -> dict[str, np.ndarray]:
    """Per-sample diagnostics of an ``(m, 4)`` array of metric states."""
    n, N = p.n, p.dim
    out = {name: np.empty(len(states)) for name in DIAGNOSTIC_NAMES}
    for k, (x, y, z, s) in enumerate(states.tolist()):
        r_i, r_j, r_k, r_h, S = stable_ricci(x, y, z, s, n)
        mean = S / N
        out["S"][k] = S
        out["r_i"][k] = r_i
        out["r_j"][k] = r_j
        out["r_k"][k] = r_k
        out["r_h"][k] = r_h
        out["ric0_sq"][k] = math.fsum(((r_i - mean)**2, (r_j - mean)**2, (r_k - mean)**2,
                                      4 * n * (r_h - mean)**2))
        out["vol"][k] = x * y * z * s ** (4 * n)
        out["x_over_z"][k] = x / z
        out["y_over_z"][k] = y / z
        out["y_over_s"][k] = y / s
    for a in out.values():
        a.flags.writeable = False
    return out


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Time-stamped metric states of one flow run.

    ``times`` are signed physical times, strictly increasing for forward runs
    and strictly decreasing for backward runs.  ``states`` has one row
    ``(x, y, z, s)`` per time.
    """

    flow: FlowKind
    direction: Direction
    p: ModelParams
    times: np.ndarray
    states: np.ndarray
    terminal: TerminalBehavior
    dense: Optional[DenseOutput] = None
    reparam: Optional[ReparamMap] = None
    diagnostics: dict = field(init=False, repr=False)

    def __post_init__(self):
        times = np.array(self.times, dtype=float)
        states = np.array(self.states, dtype=float).reshape(-1, 4)
        if len(times) != len(states):
            raise ValueError("times and states differ in length")
        times.flags.writeable = False
        states.flags.writeable = False
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "diagnostics", diagnostics_of(states, self.p))

    def __len__(self):
        return len(self.times)

    @property
    def n(self) -> int:
        return self.p.n

    def metric(self, k: int) -> MetricParams:
        return MetricParams(*self.states[k])

    @property
    def final(self) -> MetricParams:
        return self.metric(-1)

    def state_at(self, t) -> np.ndarray:
        if self.dense is None or len(self.dense) == 0:
            raise ValueError("trajectory carries no dense output")
        return self.dense.state(t)

    def with_terminal(self, terminal: TerminalBehavior) -> "Trajectory":
        return Trajectory(self.flow, self.direction, self.p, self.times, self.states,
                          terminal, self.dense, self.reparam)
