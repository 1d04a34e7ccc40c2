"""Serialization of trajectories and phase-portrait sweeps.

Floats are written with ``repr``, the shortest decimal string that parses
back to the same binary64 value, so files round-trip bit for bit and can be
compared byte-wise in regression tests.
"""

from __future__ import annotations

import csv
import io
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Iterable, Optional, Sequence, TextIO, Union

import numpy as np

from .errors import DomainError, RSFError
from .geometry import MetricParams, ModelParams, scalar_curvature, slice_metric
from .integrator import IntegratorConfig, integrate
from .trajectory import Direction, FlowKind, TerminalBehavior, TerminalKind, Trajectory

__all__ = [
    "CSV_COLUMNS", "format_float", "export_trajectory", "trajectory_rows",
    "read_csv_table", "write_csv_table", "trajectory_to_json", "trajectory_from_json",
    "parse_metric", "parse_point", "Axis", "GridSpec", "RunConfig", "load_config",
    "PORTRAIT_COLUMNS", "portrait_columns", "portrait_rows", "write_portrait", "sweep_workers",
]

CSV_COLUMNS = ("t", "x", "y", "z", "s", "S", "r_i", "r_j", "r_k", "r_h", "ric0_sq", "vol",
               "x_over_z", "y_over_z", "y_over_s")

PathOrStream = Union[str, os.PathLike, TextIO]


def format_float(v) -> str:
    return repr(float(v))


def _cell(v) -> str:
    if isinstance(v, (float, np.floating)):
        return format_float(v)
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return "" if v is None else str(v)


def _open_out(out: PathOrStream):
    if hasattr(out, "write"):
        return out, False
    return open(out, "w", newline="", encoding="utf-8"), True


def write_csv_table(columns: Sequence[str], rows: Iterable[Sequence], out: PathOrStream) -> None:
    fh, close = _open_out(out)
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_cell(v) for v in row])
    finally:
        if close:
            fh.close()


def _parse_cell(text: str):
    if text == "":
        return None
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def read_csv_table(src: PathOrStream) -> tuple[list[str], list[list]]:
    """Read a CSV written by this module; numeric cells come back as numbers."""
    if hasattr(src, "read"):
        text = src.read()
    else:
        text = Path(src).read_text(encoding="utf-8")
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    return header, [[_parse_cell(c) for c in row] for row in reader]


def trajectory_rows(traj: Trajectory) -> list[list[float]]:
    d = traj.diagnostics
    cols = [traj.times, traj.states[:, 0], traj.states[:, 1], traj.states[:, 2],
            traj.states[:, 3]] + [d[name] for name in CSV_COLUMNS[5:]]
    return [list(r) for r in zip(*(c.tolist() for c in cols))]


def _terminal_dict(term: TerminalBehavior) -> dict:
    return {"kind": term.kind.value, "t_end": term.t_end,
            "ratio_limit": term.ratio_limit, "detail": term.detail}


def trajectory_to_json(traj: Trajectory) -> dict:
    rows = trajectory_rows(traj)
    return {
        "flow": traj.flow.value,
        "direction": traj.direction.value,
        "n": traj.p.n,
        "columns": list(CSV_COLUMNS),
        "samples": [dict(zip(CSV_COLUMNS, r)) for r in rows],
        "terminal": _terminal_dict(traj.terminal),
    }


def trajectory_from_json(obj: Union[dict, str, os.PathLike]) -> Trajectory:
    """Rebuild a :class:`Trajectory` (without dense output) from its JSON form."""
    if not isinstance(obj, dict):
        obj = json.loads(Path(obj).read_text(encoding="utf-8"))
    samples = obj["samples"]
    times = [r["t"] for r in samples]
    states = [[r["x"], r["y"], r["z"], r["s"]] for r in samples]
    t = obj["terminal"]
    term = TerminalBehavior(TerminalKind(t["kind"]), t["t_end"], t.get("ratio_limit"),
                            t.get("detail", ""))
    return Trajectory(FlowKind.parse(obj["flow"]), Direction.parse(obj["direction"]),
                      ModelParams(obj["n"]), times, states, term)


def export_trajectory(traj: Trajectory, fmt: str, out: PathOrStream) -> None:
    """Write ``traj`` as ``csv`` (one header line, one row per sample) or ``json``."""
    fmt = fmt.lower()
    if fmt == "csv":
        write_csv_table(CSV_COLUMNS, trajectory_rows(traj), out)
    elif fmt == "json":
        fh, close = _open_out(out)
        try:
            json.dump(trajectory_to_json(traj), fh, indent=1, allow_nan=True)
            fh.write("\n")
        finally:
            if close:
                fh.close()
    else:
        raise ValueError(f"unknown format {fmt!r}; expected csv or json")


# ---------------------------------------------------------------------------
# command-line values

def _floats(text: str, count: Optional[int]) -> list[float]:
    parts = [t.strip() for t in text.split(",")]
    out = []
    for tok in parts:
        try:
            out.append(float(tok))
        except ValueError:
            raise ValueError(f"cannot parse {tok!r} as a number") from None
    if count is not None and len(out) != count:
        raise ValueError(f"expected {count} comma-separated values, got {len(out)} in {text!r}")
    return out


def parse_metric(text: str, p: ModelParams) -> MetricParams:
    """Parse ``"x,y,z,s"`` or ``"slice:x,y,z"`` (volume-one, ``s`` filled in)."""
    text = text.strip()
    if text.lower().startswith("slice:"):
        x, y, z = _floats(text[6:], 3)
        return slice_metric(x, y, z, p)
    return MetricParams(*_floats(text, 4))


def parse_point(text: str) -> tuple[float, float, float]:
    """Parse a slice point ``"x,y,z"`` (an optional ``slice:`` prefix is accepted)."""
    text = text.strip()
    if text.lower().startswith("slice:"):
        text = text[6:]
    x, y, z = _floats(text, 3)
    return (x, y, z)


# ---------------------------------------------------------------------------
# grids and run configuration

@dataclass(frozen=True)
class Axis:
    name: str
    min: float
    max: float
    count: int
    spacing: str = "linear"

    def __post_init__(self):
        if int(self.count) != self.count or self.count < 2:
            raise ValueError(f"axis {self.name}: count must be an integer >= 2")
        if not self.min < self.max:
            raise ValueError(f"axis {self.name}: need min < max")
        if self.spacing not in ("linear", "log"):
            raise ValueError(f"axis {self.name}: spacing must be linear or log")
        if self.spacing == "log" and not self.min > 0:
            raise ValueError(f"axis {self.name}: log spacing requires min > 0")

    def values(self) -> np.ndarray:
        if self.spacing == "log":
            return np.geomspace(self.min, self.max, self.count)
        return np.linspace(self.min, self.max, self.count)

    @classmethod
    def parse(cls, text: str) -> "Axis":
        """``name=min:max:count[:log|:linear]``."""
        try:
            name, rng = text.split("=", 1)
            parts = rng.split(":")
            spacing = parts[3] if len(parts) > 3 else "linear"
            return cls(name.strip(), float(parts[0]), float(parts[1]), int(parts[2]), spacing)
        except (ValueError, IndexError):
            raise ValueError(f"cannot parse axis {text!r}; expected name=min:max:count[:log]") from None


_MODES = {"ancient": (("s", "y_over_s"),), "slice": (("x", "y"), ("x", "y", "z"))}


@dataclass(frozen=True)
class GridSpec:
    """A sweep over ancient-form ``(s, y/s)`` or volume-one slice coordinates.

    In ``ancient`` mode a point ``(s, r)`` is the metric
    ``(1/(y^2 s^{4n}), y, y, s)`` with ``y = r s``.  In ``slice`` mode the
    axes are ``x, y`` (then ``z = y``) or ``x, y, z``.
    """

    mode: str
    axes: tuple[Axis, ...]

    def __post_init__(self):
        object.__setattr__(self, "axes", tuple(self.axes))
        if self.mode not in _MODES:
            raise ValueError(f"unknown grid mode {self.mode!r}")
        names = tuple(a.name for a in self.axes)
        if names not in _MODES[self.mode]:
            raise ValueError(f"{self.mode} grid needs axes {' or '.join(map(str, _MODES[self.mode]))}, "
                             f"got {names}")

    def points(self) -> list[tuple[float, ...]]:
        """Grid coordinates in row-major order (first axis outermost)."""
        grids = np.meshgrid(*(a.values() for a in self.axes), indexing="ij")
        return [tuple(float(g[idx]) for g in grids) for idx in np.ndindex(grids[0].shape)]

    def metric(self, coords: Sequence[float], p: ModelParams) -> MetricParams:
        if self.mode == "ancient":
            s, ratio = coords
            y = ratio * s
            return MetricParams(1.0 / (y * y * s ** (4 * p.n)), y, y, s)
        x, y = coords[0], coords[1]
        z = coords[2] if len(coords) > 2 else y
        return slice_metric(x, y, z, p)

    def to_dict(self) -> dict:
        return {"mode": self.mode, "axes": [asdict(a) for a in self.axes]}

    @classmethod
    def from_dict(cls, d: dict) -> "GridSpec":
        return cls(d["mode"], tuple(Axis(**a) for a in d["axes"]))


_CFG_FIELDS = {f.name for f in fields(IntegratorConfig)}


@dataclass(frozen=True)
class RunConfig:
    p: ModelParams = field(default_factory=ModelParams)
    cfg: IntegratorConfig = field(default_factory=IntegratorConfig)
    out: Optional[str] = None
    fmt: str = "csv"
    seed: int = 0

    def __post_init__(self):
        if self.fmt not in ("csv", "json"):
            raise ValueError(f"format must be csv or json, got {self.fmt!r}")
        if self.out is not None:
            parent = Path(self.out).resolve().parent
            if not parent.is_dir() or not os.access(parent, os.W_OK):
                raise ValueError(f"output directory {str(parent)!r} is not writable")

    @classmethod
    def from_mapping(cls, d: dict) -> "RunConfig":
        """Build from flat keys: ``n``, ``out``, ``format``, ``seed`` and any
        :class:`IntegratorConfig` field (dashes or underscores)."""
        d = {k.replace("-", "_"): v for k, v in d.items() if v is not None}
        unknown = set(d) - _CFG_FIELDS - {"n", "out", "format", "seed"}
        if unknown:
            raise ValueError(f"unknown configuration keys: {sorted(unknown)}")
        cfg = IntegratorConfig(**{k: v for k, v in d.items() if k in _CFG_FIELDS})
        return cls(ModelParams(d.get("n", 1)), cfg, d.get("out"), d.get("format", "csv"),
                   int(d.get("seed", 0)))


def load_config(path: Union[str, os.PathLike]) -> dict:
    """Read a JSON configuration file into a flat mapping."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(data, dict):
        raise ValueError("configuration file must hold a JSON object")
    return data


# ---------------------------------------------------------------------------
# phase portraits

PORTRAIT_COLUMNS = ("x", "y", "z", "s", "S", "forward", "forward_t_end", "backward",
                    "backward_t_end", "ys_limit", "error")


def _run_point(args):
    """Forward and backward terminal behavior of one grid point."""
    m, p, cfg = args
    out = []
    errors = []
    for direction in (Direction.FORWARD, Direction.BACKWARD):
        try:
            traj = integrate(FlowKind.NORMALIZED, m, direction, p, cfg)
            out.append(traj.terminal)
        except RSFError as exc:
            out.append(None)
            errors.append(f"{direction.value}: {exc}")
    return out, "; ".join(errors)


def sweep_workers(env: Optional[str] = None) -> int:
    """Worker count from ``RSF_THREADS`` (unset or 0 means one per CPU)."""
    raw = os.environ.get("RSF_THREADS", "") if env is None else env
    try:
        k = int(raw) if raw.strip() else 0
    except ValueError:
        raise ValueError(f"RSF_THREADS must be an integer, got {raw!r}") from None
    if k < 0:
        raise ValueError("RSF_THREADS must be >= 0")
    return k if k > 0 else (os.cpu_count() or 1)


def portrait_rows(grid: GridSpec, p: ModelParams, cfg: IntegratorConfig | None = None,
                  workers: Optional[int] = None) -> list[list]:
    """Classify every grid point; rows follow the grid's row-major order.

    Points are evaluated in parallel processes when ``workers > 1``; results
    are collected in grid order, so the output does not depend on scheduling.
    Integrator failures are recorded in the ``error`` column.
    """
    cfg = cfg or IntegratorConfig()
    coords = grid.points()
    jobs, prefix = [], []
    for c in coords:
        try:
            m = grid.metric(c, p)
        except (DomainError, OverflowError, ZeroDivisionError) as exc:
            jobs.append(None)
            prefix.append((c, None, str(exc)))
            continue
        jobs.append((m, p, cfg))
        prefix.append((c, m, ""))
    workers = sweep_workers() if workers is None else max(1, int(workers))
    live = [j for j in jobs if j is not None]
    if workers > 1 and len(live) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(live))) as ex:
            results = iter(list(ex.map(_run_point, live)))
    else:
        results = iter([_run_point(j) for j in live])

    rows = []
    for job, (c, m, err) in zip(jobs, prefix):
        if job is None:
            rows.append(list(c) + [None] * 5 + [None, None, None, None, None, err])
            continue
        (fw, bw), run_err = next(results)
        ys = bw.ratio_limit if bw is not None and bw.kind is TerminalKind.BACKWARD_COLLAPSE else None
        rows.append(list(c) + [m.x, m.y, m.z, m.s, scalar_curvature(m, p),
                               fw.kind.value if fw else None, fw.t_end if fw else None,
                               bw.kind.value if bw else None, bw.t_end if bw else None,
                               ys, run_err])
    return rows


def portrait_columns(grid: GridSpec) -> tuple[str, ...]:
    """Axis coordinates (prefixed ``axis_``) followed by :data:`PORTRAIT_COLUMNS`."""
    return tuple(f"axis_{a.name}" for a in grid.axes) + PORTRAIT_COLUMNS


def write_portrait(grid: GridSpec, rows: list[list], fmt: str, out: PathOrStream) -> None:
    cols = portrait_columns(grid)
    fmt = fmt.lower()
    if fmt == "csv":
        write_csv_table(cols, rows, out)
    elif fmt == "json":
        fh, close = _open_out(out)
        try:
            json.dump({"grid": grid.to_dict(), "columns": list(cols),
                       "rows": [dict(zip(cols, r)) for r in rows]}, fh, indent=1)
            fh.write("\n")
        finally:
            if close:
                fh.close()
    else:
        raise ValueError(f"unknown format {fmt!r}; expected csv or json")
