"""Seeded property suites behind ``rsf verify``.

Each suite samples inputs from a seeded generator, evaluates one invariant
and returns the number of passing cases.  Output contains no timings, so a
seeded run is reproducible byte for byte.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .analysis import (ancient_form_metric, rj_minus_rh,
                       scalar_ancient_form, verify_ancient_numerically,
                       ys_limit_candidates)
from .errors import IntegrationError
from .flow import (fixed_points, linearization, normalized_field, slice_field,
                   unnormalized_field)
from .geometry import (ALL_PERMUTATIONS, MetricParams, ModelParams, TangentVector,
                       l2_pairing, ricci_components, ricci_eigenvalues, scalar_components,
                       scalar_curvature, scalar_curvature_slice, scalar_differential,
                       slice_metric, stable_ricci,
                       traceless_ricci_norm_sq)
from .integrator import IntegratorConfig, integrate, monitor_series
from .io import (Axis, GridSpec, export_trajectory, portrait_rows, read_csv_table,
                 trajectory_from_json, trajectory_rows,
                 write_csv_table, write_portrait, CSV_COLUMNS)
from .trajectory import Direction, FlowKind

__all__ = ["SuiteResult", "SUITES", "run_suites", "ancient_sample", "Z_EQUATION_NOTE"]

Z_EQUATION_NOTE = ("note: the z-component of the normalized flow is taken as "
                   "z' = -2 z (r_k - S/(4n+3)); the printed source form with r_j "
                   "breaks volume preservation and the gradient identity.")


@dataclass(frozen=True)
class SuiteResult:
    name: str
    passed: int
    total: int
    note: str = ""

    @property
    def ok(self) -> bool:
        return self.passed == self.total

    def line(self) -> str:
        tag = "PASS" if self.ok else "FAIL"
        out = f"{tag} {self.name} ({self.passed}/{self.total})"
        return out + (f" {self.note}" if self.note else "")


def _rand_metrics(rng, k, lo=0.1, hi=10.0):
    return np.exp(rng.uniform(math.log(lo), math.log(hi), size=(k, 4)))


def _rel_close(a, b, tol, scale=None):
    scale = max(abs(a), abs(b), 1e-300) if scale is None else scale
    return abs(a - b) <= tol * scale


# ---------------------------------------------------------------------------
# geometry-core

def suite_trace_identity(p, rng):
    ok = 0
    for m in _rand_metrics(rng, 1000).tolist():
        S = scalar_curvature(m, p)
        ok += _rel_close(S, ricci_eigenvalues(m, p).trace(p), 1e-12)
    return ok, 1000


def suite_scaling(p, rng):
    ok = total = 0
    for m in _rand_metrics(rng, 200).tolist():
        base = np.array(ricci_components(*m, p.n))
        S0 = scalar_components(*m, p.n)
        for lam in (0.1, 2.0, 10.0):
            total += 1
            r = np.array(ricci_components(*(lam * v for v in m), p.n))
            S = scalar_components(*(lam * v for v in m), p.n)
            scale = np.max(np.abs(base / lam))
            ok += bool(np.all(np.abs(r - base / lam) <= 1e-12 * scale)
                       and _rel_close(S, S0 / lam, 1e-12, scale * p.dim))
    return ok, total


def suite_permutation(p, rng):
    ok = total = 0
    for x, y, z, s in _rand_metrics(rng, 200).tolist():
        f = (x, y, z)
        base = stable_ricci(x, y, z, s, p.n)
        for perm in ALL_PERMUTATIONS:
            total += 1
            r = stable_ricci(f[perm[0]], f[perm[1]], f[perm[2]], s, p.n)
            ok += (tuple(r[:3]) == tuple(base[perm[k]] for k in range(3))
                   and r[3] == base[3] and r[4] == base[4])
    return ok, total


def suite_slice_consistency(p, rng):
    ok = 0
    for x, y, z in np.exp(rng.uniform(-1.5, 1.5, size=(1000, 3))).tolist():
        s = (x * y * z) ** (-1.0 / (4 * p.n))
        ok += _rel_close(scalar_curvature_slice(x, y, z, p), scalar_curvature((x, y, z, s), p), 1e-12)
    return ok, 1000


def _volume_preserving(rng, m, p):
    h = rng.normal(size=4) * m
    # remove the component along m (the only non-volume-preserving direction)
    w = np.array([1.0, 1.0, 1.0, 4.0 * p.n])
    h = h - m * (np.sum(w * h / m) / np.sum(w))
    return h


def suite_gradient(p, rng):
    ok = 0
    for m in _rand_metrics(rng, 200, 0.3, 3.0):
        h = _volume_preserving(rng, m, p)
        eps = 1e-6
        fd = (scalar_components(*(m + eps * h), p.n) - scalar_components(*(m - eps * h), p.n)) / (2 * eps)
        r_i, r_j, r_k, r_h, S = stable_ricci(*m.tolist(), p.n)
        c = S / p.dim
        V = TangentVector(*(-g * (r - c) for g, r in zip(m, (r_i, r_j, r_k, r_h))))
        pair = l2_pairing(MetricParams(*m), TangentVector(*h), V, p)
        ok += _rel_close(fd, pair, 1e-5, max(abs(pair), 1e-3 * np.linalg.norm(h / m)))
    return ok, 200


def suite_einstein_detector(p, rng):
    k = 100_000
    t = np.exp(rng.uniform(-2, 2, k))
    s = t * np.exp(rng.uniform(math.log(0.01), math.log(100.0), k))
    # exact Einstein rays, scaled
    t[:2] = (3.0, 0.5)
    s[:2] = (3.0, 0.5 * (2 * p.n + 3))
    logvol = 3 * np.log(t) + 4 * p.n * np.log(s)
    lam = np.exp(-logvol / p.dim)
    x, sn = t * lam, s * lam
    r = ricci_components(x, x, x, sn, p.n)
    S = r[0] + r[1] + r[2] + 4 * p.n * r[3]
    mean = S / p.dim
    ric0 = 3 * (r[0] - mean) ** 2 + 4 * p.n * (r[3] - mean) ** 2
    ratio = s / t
    einstein = (np.abs(ratio - 1) < 1e-12) | (np.abs(ratio - (2 * p.n + 3)) < 1e-12 * (2 * p.n + 3))
    ok = int(np.sum((ric0 <= 1e-20) == einstein))
    return ok, k


# ---------------------------------------------------------------------------
# flow-dynamics

def suite_tangency(p, rng):
    ok = 0
    w = (1.0, 1.0, 1.0, 4.0 * p.n)
    for m in _rand_metrics(rng, 1000).tolist():
        v = normalized_field(m, p).as_array()
        terms = [wa * va / ga for wa, va, ga in zip(w, v, m)]
        ok += abs(math.fsum(terms)) <= 1e-12 * max(1.0, max(abs(t) for t in terms))
    return ok, 1000


def suite_fixed_points(p, rng):
    ok = total = 0
    for n in sorted({1, 2, 3, 4, p.n}):
        q = ModelParams(n)
        for fp in fixed_points(q):
            total += 1
            ok += float(np.linalg.norm(slice_field(*fp.slice_point, q))) <= 1e-12
    return ok, total


def suite_linearization(p, rng):
    ok = total = 0
    for fp in fixed_points(p):
        lin = linearization(fp.slice_point, p)
        pred = sorted([fp.a + 2 * fp.b, fp.a - fp.b, fp.a - fp.b], reverse=True)
        for got, want in zip(np.real(lin.eigenvalues), pred):
            total += 1
            ok += _rel_close(float(got), want, 1e-6)
    return ok, total


def _on_set(rng, name, k):
    g = _rand_metrics(rng, k)
    if name == "x=y":
        g[:, 1] = g[:, 0]
    elif name == "y=z":
        g[:, 2] = g[:, 1]
    elif name == "x=z":
        g[:, 2] = g[:, 0]
    elif name == "x=y=z":
        g[:, 1] = g[:, 2] = g[:, 0]
    elif name == "y=z=s":
        g[:, 2] = g[:, 3] = g[:, 1]
    return g


_SET_PAIRS = {"x=y": [(0, 1)], "y=z": [(1, 2)], "x=z": [(0, 2)],
              "x=y=z": [(0, 1), (1, 2)], "y=z=s": [(1, 2), (1, 3)]}


def suite_invariant_sets(p, rng):
    ok = total = 0
    for name, pairs in _SET_PAIRS.items():
        for m in _on_set(rng, name, 100).tolist():
            for field in (normalized_field, unnormalized_field):
                v = field(m, p).as_array() / np.array(m)
                scale = max(1.0, float(np.max(np.abs(v))))
                total += 1
                ok += all(abs(v[i] - v[j]) <= 1e-12 * scale for i, j in pairs)
    return ok, total


def suite_gradient_field(p, rng):
    """Normalized field against twice the gradient built from dS."""
    ok = 0
    w = np.array([1.0, 1.0, 1.0, 4.0 * p.n])
    for m in _rand_metrics(rng, 500, 0.2, 5.0):
        dS = np.array(scalar_differential(m.tolist(), p))
        G = m**2 / w * dS
        mu = np.sum(w * G / m) / np.sum(w)
        G = G - mu * m
        v = normalized_field(m.tolist(), p).as_array()
        scale = float(np.max(np.abs(v))) + 1e-12 * float(np.max(np.abs(2 * G)))
        ok += bool(np.all(np.abs(v - 2 * G) <= 1e-10 * max(scale, 1e-300)))
    return ok, 500


def suite_dS_dt(p, rng):
    """dS/dt along the normalized field equals 2 |Ric^0|^2."""
    ok = 0
    for m in _rand_metrics(rng, 500, 0.2, 5.0).tolist():
        dS = scalar_differential(m, p)
        v = normalized_field(m, p).as_array()
        rate = math.fsum(a * b for a, b in zip(dS, v))
        target = 2.0 * traceless_ricci_norm_sq(m, p)
        scale = math.fsum(abs(a * b) for a, b in zip(dS, v))
        ok += _rel_close(rate, target, 1e-10, max(scale, abs(target)))
    return ok, 500


# ---------------------------------------------------------------------------
# integrator

def _forward_starts(rng, k, p):
    pts = np.sort(np.exp(rng.uniform(math.log(0.15), math.log(1.5), size=(k, 3))), axis=1)
    return [slice_metric(*row, p) for row in pts.tolist()]


def suite_forward_invariants(p, rng):
    """Positivity, volume, S monotone and ratio monotone on forward runs."""
    ok = total = 0
    for m in _forward_starts(rng, 8, p):
        traj = integrate(FlowKind.NORMALIZED, m, Direction.FORWARD, p)
        vol = traj.diagnostics["vol"]
        checks = (
            bool(np.all(traj.states > 0)),
            bool(np.all(np.abs(vol / vol[0] - 1) <= 1e-8)),
            monitor_series(traj, "S").nondecreasing,
            monitor_series(traj, "x/z").nondecreasing,
            monitor_series(traj, "y/z").nondecreasing,
        )
        ok += sum(checks)
        total += len(checks)
    return ok, total


def suite_step_halving(p, rng):
    ok = total = 0
    for m in _forward_starts(rng, 4, p):
        m = slice_metric(*(0.5 * np.array(m.as_tuple()[:3]) + 0.5), p)
        finals = []
        for rt in (1e-8, 5e-9):
            cfg = IntegratorConfig(rel_tol=rt, abs_tol=rt * 1e-2, t_horizon=0.5, einstein_tol=0.0)
            finals.append(integrate(FlowKind.NORMALIZED, m, Direction.FORWARD, p, cfg).states[-1])
        total += 1
        ok += bool(np.max(np.abs(finals[0] / finals[1] - 1)) < 10 * 1e-8)
    return ok, total


def suite_isometry(p, rng):
    ok = total = 0
    for m in _forward_starts(rng, 3, p):
        base = integrate(FlowKind.NORMALIZED, m, Direction.FORWARD, p)
        for perm in ALL_PERMUTATIONS[1:]:
            tr = integrate(FlowKind.NORMALIZED, m.permuted(perm), Direction.FORWARD, p)
            total += 1
            ok += bool(np.array_equal(tr.times, base.times)
                       and np.array_equal(tr.states[:, :3], base.states[:, list(perm)])
                       and np.array_equal(tr.states[:, 3], base.states[:, 3]))
    return ok, total


# ---------------------------------------------------------------------------
# analysis

def ancient_sample(p: ModelParams, seed: int, k: int = 100) -> list[MetricParams]:
    """Seeded mix of ancient and non-ancient metrics.

    Half satisfy ``x <= y = z <= s`` (including Berger and Jensen-line
    cases); the rest have three distinct fibers or ``y = z > s``.  Fibers are
    shuffled so the classifier has to canonicalize.
    """
    rng = np.random.default_rng(seed)
    out = []
    for i in range(k):
        s = float(np.exp(rng.uniform(math.log(0.5), math.log(3.0))))
        kind = i % 4
        if kind == 0:  # ancient, generic
            y = s * float(rng.uniform(0.2, 1.0))
            x = y * float(rng.uniform(0.05, 1.0))
            f = [x, y, y]
            if i % 20 == 0:
                f = [x, s, s]  # Berger
            elif i % 20 == 8:
                f = [y, y, y]  # Jensen line
        elif kind == 1:  # ancient
            y = s * float(rng.uniform(0.5, 1.0))
            f = [y * float(rng.uniform(0.05, 0.9)), y, y]
        elif kind == 2:  # three distinct fibers
            f = (s * np.exp(rng.uniform(-1.5, 1.0, 3))).tolist()
        else:  # y = z > s
            y = s * float(rng.uniform(1.05, 3.0))
            f = [y * float(rng.uniform(0.05, 1.0)), y, y]
        perm = ALL_PERMUTATIONS[int(rng.integers(6))]
        out.append(MetricParams(f[perm[0]], f[perm[1]], f[perm[2]], s))
    return out


def suite_ancient_agreement(p, rng, seed=0):
    sample = ancient_sample(p, seed)
    agree = inconclusive = 0
    positive = total_ancient = 0
    for m in sample:
        rep = verify_ancient_numerically(m, p)
        if rep.verdict_match is None:
            inconclusive += 1
            continue
        agree += rep.verdict_match
        if rep.numerical_ancient:
            total_ancient += 1
            positive += bool(rep.S_positive_throughout)
    conclusive = len(sample) - inconclusive
    ok = agree == conclusive and inconclusive <= 5 and positive == total_ancient
    note = f"inconclusive={inconclusive} ancient_S_positive={positive}/{total_ancient}"
    return (1 if ok else 0), 1, note


def suite_backward_ys(p, rng):
    ok = total = 0
    for _ in range(4):
        s = float(rng.uniform(0.5, 2.0))
        y = s * float(rng.uniform(1.1, 2.0))
        x = y * float(rng.uniform(0.1, 1.0))
        traj = integrate(FlowKind.NORMALIZED, (x, y, y, s), Direction.BACKWARD, p)
        total += 1
        ok += monitor_series(traj, "y/s").nondecreasing
    return ok, total


def suite_invariant_integration(p, rng):
    ok = total = 0
    for _ in range(4):
        s = float(rng.uniform(0.5, 2.0))
        y = s * float(rng.uniform(0.3, 0.95))
        x = y * float(rng.uniform(0.1, 0.9))
        for m, (i, j) in (((x, y, y, s), (1, 2)), ((x, s, s, s), (1, 3))):
            for d in (Direction.FORWARD, Direction.BACKWARD):
                traj = integrate(FlowKind.NORMALIZED, m, d, p)
                st = traj.states
                total += 1
                ok += bool(np.all(np.abs(st[:, i] - st[:, j]) <= 1e-8 * st[:, j]))
    return ok, total


def suite_scalar_ancient(p, rng):
    ok = 0
    for y, s in np.exp(rng.uniform(-1.0, 1.0, size=(1000, 2))).tolist():
        ok += _rel_close(scalar_ancient_form(y, s, p), scalar_curvature(ancient_form_metric(y, s, p), p),
                         1e-12)
    return ok, 1000


def suite_rj_minus_rh(p, rng):
    ok = 0
    pairs = np.exp(rng.uniform(-1.0, 1.0, size=(1000, 2)))
    pairs[:50, 1] = pairs[:50, 0]
    for y, s in pairs.tolist():
        m = ancient_form_metric(y, s, p)
        r = ricci_eigenvalues(m, p)
        d = rj_minus_rh(y, s, p)
        # the second factor changes sign below y = s, so only y >= s is constrained
        sign_ok = d > 0 if y > s else (d == 0 if y == s else True)
        ok += _rel_close(d, r.r_j - r.r_h, 1e-10, abs(r.r_j) + abs(r.r_h)) and sign_ok
    return ok, 1000


def suite_ys_candidates(p, rng):
    ok = 0
    n = p.n
    roots = ys_limit_candidates(p)
    for C in roots:
        ok += abs(C - (4 + 4 * n * C * C) / (8 + 4 * n - 4 * C)) <= 1e-14
    return ok + (roots == (1.0, 1.0 / (1 + n))), 3


# ---------------------------------------------------------------------------
# cli-io

def suite_roundtrip(p, rng):
    ok = 0
    traj = integrate(FlowKind.NORMALIZED, (0.1, 1.0, 1.0, 3.0), Direction.BACKWARD, p)
    buf = io.StringIO()
    export_trajectory(traj, "csv", buf)
    text = buf.getvalue()
    header, rows = read_csv_table(io.StringIO(text))
    again = io.StringIO()
    write_csv_table(header, rows, again)
    ok += again.getvalue() == text
    ok += header == list(CSV_COLUMNS) and rows == trajectory_rows(traj)
    jbuf = io.StringIO()
    export_trajectory(traj, "json", jbuf)
    back = trajectory_from_json(__import__("json").loads(jbuf.getvalue()))
    ok += bool(np.array_equal(back.times, traj.times) and np.array_equal(back.states, traj.states)
               and back.terminal == traj.terminal)
    return ok, 3


def suite_sweep_determinism(p, rng):
    grid = GridSpec("ancient", (Axis("s", 0.8, 2.0, 2), Axis("y_over_s", 0.4, 1.5, 2)))
    outs = []
    for workers in (1, 2):
        buf = io.StringIO()
        write_portrait(grid, portrait_rows(grid, p, workers=workers), "csv", buf)
        outs.append(buf.getvalue())
    return int(outs[0] == outs[1]), 1


SUITES: list[tuple[str, Callable]] = [
    ("geometry.trace_identity", suite_trace_identity),
    ("geometry.scaling_covariance", suite_scaling),
    ("geometry.permutation_equivariance", suite_permutation),
    ("geometry.slice_consistency", suite_slice_consistency),
    ("geometry.gradient_property", suite_gradient),
    ("geometry.einstein_detector", suite_einstein_detector),
    ("flow.tangency", suite_tangency),
    ("flow.fixed_point_residual", suite_fixed_points),
    ("flow.linearization_eigenvalues", suite_linearization),
    ("flow.invariant_sets", suite_invariant_sets),
    ("flow.twice_gradient", suite_gradient_field),
    ("flow.dS_dt_identity", suite_dS_dt),
    ("integrator.forward_invariants", suite_forward_invariants),
    ("integrator.step_halving", suite_step_halving),
    ("integrator.isometry_equivariance", suite_isometry),
    ("analysis.classifier_agreement", suite_ancient_agreement),
    ("analysis.backward_ys_monotone", suite_backward_ys),
    ("analysis.invariant_sets_integrated", suite_invariant_integration),
    ("analysis.scalar_ancient_form", suite_scalar_ancient),
    ("analysis.rj_minus_rh", suite_rj_minus_rh),
    ("analysis.ys_limit_candidates", suite_ys_candidates),
    ("io.roundtrip", suite_roundtrip),
    ("io.sweep_determinism", suite_sweep_determinism),
]


def run_suites(p: ModelParams, seed: int = 0, only: list[str] | None = None) -> list[SuiteResult]:
    """Run the suites in order; each gets its own generator derived from ``seed``."""
    results = []
    for idx, (name, fn) in enumerate(SUITES):
        if only and not any(name.startswith(o) for o in only):
            continue
        rng = np.random.default_rng([seed, idx])
        try:
            if fn is suite_ancient_agreement:
                res = fn(p, rng, seed)
            else:
                res = fn(p, rng)
        except (IntegrationError, ArithmeticError, ValueError) as exc:
            results.append(SuiteResult(name, 0, 1, f"error: {type(exc).__name__}: {exc}"))
            continue
        passed, total = int(res[0]), int(res[1])
        note = res[2] if len(res) > 2 else ""
        results.append(SuiteResult(name, passed, total, note))
    return results
