"""Quantitative acceptance checks, one test (or a few) per criterion.

Each test records its measurements through the ``criterion`` fixture; the
summary hook in ``conftest.py`` prints one PASS/FAIL line per criterion.
"""

import math

import numpy as np
import pytest

from rsf import (IntegratorConfig, ModelParams, TerminalKind, integrate, jensen_slice_value,
                 linearization, reparametrize_to_normalized,
                 ricci_eigenvalues, scalar_curvature, scalar_curvature_slice, slice_field,
                 slice_metric)
from rsf.analysis import (ancient_form_metric, blowup_profile, classify_ancient, jensen_distance,
                          rj_minus_rh, scalar_ancient_form, trace_separatrix,
                          verify_ancient_numerically, ys_limit_candidates)
from rsf.checks import ancient_sample
from rsf.cli import main
from rsf.geometry import l2_pairing, ricci_norm_sq, TangentVector
from rsf.integrator import monitor_series
from rsf.io import read_csv_table, write_csv_table, trajectory_from_json, export_trajectory

NS = (1, 2, 3)


def _rel(a, b):
    return abs(a - b) / abs(b)


# 1 -----------------------------------------------------------------------

def test_criterion_01_fixed_points(criterion):
    worst = 0.0
    for n in (1, 2, 3, 4):
        p = ModelParams(n)
        c = (2 * n + 3) ** (-4 * n / (4 * n + 3))
        for pt in ((1.0, 1.0, 1.0), (c, c, c)):
            worst = max(worst, float(np.linalg.norm(slice_field(*pt, p))))
    assert criterion(1, "|slice_field| at Round and Jensen, n=1..4", worst <= 1e-12,
                     f"max norm {worst:.3g} (tol 1e-12)")


# 2 -----------------------------------------------------------------------

def _jensen_ab(n):
    k = (2 * n + 3) ** (-(4 * n + 6) / (4 * n + 3))
    return -8 * (2 * n * n + 7 * n + 5) * k, 16 * (n + 1) * (n + 2) * k


def test_criterion_02_linearization(criterion):
    worst = 0.0
    for n in (1, 2, 3, 4):
        p = ModelParams(n)
        a, b = _jensen_ab(n)
        c = jensen_slice_value(p)
        got = np.sort(linearization((c, c, c), p).eigenvalues.real)
        want = np.sort([a + 2 * b, a - b, a - b])
        worst = max(worst, float(np.max(np.abs(got - want) / np.abs(want))))
        got = linearization((1.0, 1.0, 1.0), p).eigenvalues.real
        worst = max(worst, float(np.max(np.abs(got + 8 * (1 + n)) / (8 * (1 + n)))))
    k = 5 ** (-10 / 7)
    got = np.sort(linearization((5 ** (-4 / 7),) * 3, ModelParams(1)).eigenvalues.real)
    explicit = float(np.max(np.abs(got - np.array([-208 * k, -208 * k, 80 * k])) / (208 * k)))
    ok = criterion(2, "Jacobian spectra at Jensen and Round, n=1..4", worst <= 1e-6,
                   f"max relative error {worst:.3g} (tol 1e-6)")
    ok &= criterion(2, "n=1 spectrum {80, -208, -208} * 5^(-10/7)", explicit <= 1e-6,
                    f"relative error {explicit:.3g}")
    assert ok


# 3 -----------------------------------------------------------------------

def test_criterion_03_formula_consistency(criterion):
    rng = np.random.default_rng(3)
    worst = {"trace": 0.0, "slice": 0.0, "ancient": 0.0}
    for n in NS:
        p = ModelParams(n)
        for g in np.exp(rng.uniform(math.log(0.1), math.log(10), (1000, 4))):
            S = scalar_curvature(g, p)
            worst["trace"] = max(worst["trace"], _rel(ricci_eigenvalues(g, p).trace(p), S))
        for x, y, z in np.exp(rng.uniform(math.log(0.1), math.log(10), (1000, 3))):
            S = scalar_curvature(slice_metric(x, y, z, p), p)
            worst["slice"] = max(worst["slice"], _rel(scalar_curvature_slice(x, y, z, p), S))
        for y, s in np.exp(rng.uniform(math.log(0.1), math.log(10), (1000, 2))):
            S = scalar_curvature(ancient_form_metric(y, s, p), p)
            worst["ancient"] = max(worst["ancient"], _rel(scalar_ancient_form(y, s, p), S))
    ok = True
    for name, label in (("trace", "S = trace of Ricci"), ("slice", "slice formula"),
                        ("ancient", "ancient-form formula")):
        ok &= criterion(3, f"{label}, 1000 samples x n=1..3", worst[name] <= 1e-12,
                        f"max relative error {worst[name]:.3g} (tol 1e-12)")
    assert ok


# 4 -----------------------------------------------------------------------

_GRADIENT_STARTS = [(0.4, 0.9, 1.3, 1.0), (0.25, 2.0, 2.0, 1.0), (0.5, 0.8, 1.2, 1.0)]


def _rate_along_trajectories(p, factor):
    """Worst relative gap between finite-difference dS/dt and factor*|Ric0|^2."""
    worst = 0.0
    for m0 in _GRADIENT_STARTS:
        tr = integrate("normalized", m0, "forward", p, IntegratorConfig(t_horizon=0.05))
        for t in np.linspace(0.005, 0.045, 9):
            h = 1e-5
            S_plus = scalar_curvature(tr.state_at(t + h), p)
            S_minus = scalar_curvature(tr.state_at(t - h), p)
            fd = (S_plus - S_minus) / (2 * h)
            g = tr.state_at(t)
            want = factor * (ricci_norm_sq(g, p) - scalar_curvature(g, p) ** 2 / p.dim)
            worst = max(worst, _rel(fd, want))
    return worst


@pytest.mark.xfail(strict=True, reason="the rate along the normalized field is 2|Ric0|^2; "
                   "the stated factor 4 is off by two")
def test_criterion_04_gradient_rate(criterion):
    p = ModelParams(1)
    stated = _rate_along_trajectories(p, 4.0)
    actual = _rate_along_trajectories(p, 2.0)
    criterion(4, "dS/dt = 4(|Ric|^2 - S^2/N) along trajectories", stated <= 1e-5,
              f"max relative gap {stated:.3g} (tol 1e-5); with factor 2 the gap is {actual:.3g}")
    assert stated <= 1e-5


def test_criterion_04_pairing(criterion):
    rng = np.random.default_rng(4)
    worst = 0.0
    for n in NS:
        p = ModelParams(n)
        w = np.array([1.0, 1.0, 1.0, 4.0 * n])
        for _ in range(50):
            g = np.exp(rng.uniform(math.log(0.3), math.log(3), 4))
            h = g * rng.uniform(-1, 1, 4)
            h -= g * np.sum(w * h / g) / np.sum(w)  # volume preserving
            eps = 1e-6
            fd = (scalar_curvature(g + eps * h, p) - scalar_curvature(g - eps * h, p)) / (2 * eps)
            r = ricci_eigenvalues(g, p).as_array()
            ric0 = TangentVector.from_array(-g * (r - scalar_curvature(g, p) / p.dim))
            pair = l2_pairing(g, TangentVector.from_array(h), ric0, p)
            worst = max(worst, _rel(fd, pair))
    assert criterion(4, "finite-difference dS(h) = <h, -Ric0> for volume-preserving h",
                     worst <= 1e-5, f"max relative error {worst:.3g} (tol 1e-5)")


# 5 -----------------------------------------------------------------------

def test_criterion_05_reparametrization(criterion):
    p = ModelParams(1)
    rng = np.random.default_rng(5)
    # near-round starts shrink like a sphere, so f grows like log S: run past
    # the default blow-up threshold until the normalized time exceeds 1
    cfg = IntegratorConfig(einstein_tol=0, blowup_S=1e11)
    worst = 0.0
    for _ in range(5):
        m0 = tuple(np.exp(rng.uniform(-0.3, 0.3, 4)).tolist())
        un = integrate("unnormalized", m0, "forward", p, cfg)
        rp = reparametrize_to_normalized(un, p)
        assert rp.times[-1] > 1.0
        direct = integrate("normalized", m0, "forward", p, cfg.replace(t_horizon=1.0))
        keep = rp.times <= 1.0
        ref = direct.state_at(rp.times[keep])
        worst = max(worst, float(np.max(np.abs(rp.states[keep] - ref) / ref)))
    assert criterion(5, "reparametrized unnormalized run vs direct normalized run, f in [0,1]",
                     worst <= 1e-6, f"sup relative deviation {worst:.3g} (tol 1e-6)")


# 6 -----------------------------------------------------------------------

def test_criterion_06_blowup_profile(criterion):
    p = ModelParams(1)
    tr = integrate("normalized", slice_metric(0.3, 0.3, 0.3, p), "forward", p)
    assert tr.terminal.kind is TerminalKind.FORWARD_BLOWUP
    prof = blowup_profile(tr, p)
    dev = float(np.max(np.abs(np.array(prof.rescaled_ricci) - [2, 2, 2, 0])))
    ok = criterion(6, "x*S at termination in [5.7, 6.3]", 5.7 <= prof.xS_limit <= 6.3,
                   f"x*S = {prof.xS_limit:.12g}")
    # (2,2,2,0) is the spectrum of (S/6) g, whose fibers tend to a unit 3-sphere;
    # S g itself has eigenvalues r_a / S -> (1/3, 1/3, 1/3, 0)
    literal = tuple(round(v / 6, 6) for v in prof.rescaled_ricci)
    ok &= criterion(6, "rescaled Ricci eigenvalues 6 r_a / S near (2,2,2,0)", dev <= 0.05,
                    f"max deviation {dev:.3g} (tol 0.05); r_a / S = {literal}")
    tr = integrate("normalized", slice_metric(0.2, 0.25, 0.3, p), "forward", p)
    for q in ("x/z", "y/z"):
        rep = monitor_series(tr, q, slack=1e-10)
        ok &= criterion(6, f"{q} nondecreasing and >= 0.99 at termination",
                        rep.nondecreasing and rep.values[-1] >= 0.99,
                        f"verdict {rep.verdict}, final {rep.values[-1]:.12g}")
    assert ok


# 7 -----------------------------------------------------------------------

def test_criterion_07_separatrix(criterion):
    ok = True
    for n, lo, hi in ((1, 0.3, 1.1), (2, 0.15, 1.0)):
        p = ModelParams(n)
        c = (2 * n + 3) ** (-4 * n / (4 * n + 3))
        res = trace_separatrix((lo,) * 3, (hi,) * 3, p)
        err = max(abs(v - c) for v in res.point)
        ok &= criterion(7, f"on-axis bisection, n={n}", err <= 1e-8,
                        f"|point - c| = {err:.3g} with c = {c!r} (tol 1e-8)")
    p = ModelParams(1)
    res = trace_separatrix((0.25, 0.3, 0.35), (1.0, 1.05, 1.1), p)
    ok &= criterion(7, "off-axis bisection passes near Jensen", res.jensen_distance <= 1e-3,
                    f"closest volume-normalized distance {res.jensen_distance:.3g} (tol 1e-3)")
    assert ok


# 8 -----------------------------------------------------------------------

def test_criterion_08_ancient_classification(criterion):
    ancient_kinds = (TerminalKind.BACKWARD_COLLAPSE, TerminalKind.CONVERGED_JENSEN)
    ok = True
    for n in NS:
        p = ModelParams(n)
        disagree = inconclusive = 0
        for m in ancient_sample(p, 0):
            verdict = classify_ancient(m, p)
            rep = verify_ancient_numerically(m, p)
            if not rep.conclusive:
                inconclusive += 1
                continue
            kind = rep.backward_terminal.kind
            if verdict.ancient:
                good = rep.S_positive_throughout and kind in ancient_kinds
            else:
                good = kind is TerminalKind.BACKWARD_SINGULARITY and rep.S_min < 0
            disagree += not good
        ok &= criterion(8, f"100-point seeded sample, n={n}", disagree == 0 and inconclusive <= 5,
                        f"{disagree} disagreements, {inconclusive} inconclusive")
    assert ok


# 9 -----------------------------------------------------------------------

def test_criterion_09_backward_limits(criterion):
    p = ModelParams(1)
    tr = integrate("normalized", (0.1, 1, 1, 3), "backward", p)
    big = tr.states[:, 3] > 1e3
    gap = float(np.max(np.abs(tr.diagnostics["y_over_s"][big] - 0.5))) if big.any() else math.inf
    ok = criterion(9, "y/s -> 1/2 from (0.1,1,1,3) once s > 1e3", gap <= 1e-3,
                   f"{int(big.sum())} samples, max |y/s - 1/2| = {gap:.3g} (tol 1e-3)")
    berger = jensen = 0.0
    for n in NS:
        p = ModelParams(n)
        for x, s in ((0.1, 1.0), (0.5, 2.0), (1.0, 1.5)):
            tr = integrate("normalized", (x, s, s, s), "backward", p)
            berger = max(berger, float(np.max(np.abs(tr.diagnostics["y_over_s"] - 1))))
        for t in (0.05, 0.15, 0.6, 0.9):
            tr = integrate("normalized", slice_metric(t, t, t, p), "backward", p)
            d = jensen_distance(tr.final, p) if tr.terminal.kind is TerminalKind.CONVERGED_JENSEN \
                else math.inf
            jensen = max(jensen, d)
    ok &= criterion(9, "y = z = s starts keep y/s = 1", berger <= 1e-8,
                    f"max |y/s - 1| = {berger:.3g} (tol 1e-8)")
    ok &= criterion(9, "x = y = z <= s starts converge backward to Jensen", jensen <= 1e-6,
                    f"max final Jensen distance {jensen:.3g} (tol 1e-6)")
    exact = all(ys_limit_candidates(ModelParams(n)) == (1.0, 1.0 / (1 + n)) for n in NS)
    ok &= criterion(9, "ys_limit_candidates = (1, 1/(1+n))", exact, "exact")
    assert ok


# 10 ----------------------------------------------------------------------

def test_criterion_10_rj_minus_rh(criterion):
    p = ModelParams(1)
    r = ricci_eigenvalues(ancient_form_metric(2.0, 1.0, p), p)
    v = rj_minus_rh(2.0, 1.0, p)
    ok = criterion(10, "value at y=2, s=1, n=1",
                   v == 6.375 and r.r_j == 9.875 and r.r_h == 3.5 and abs(v - (r.r_j - r.r_h)) <= 1e-12,
                   f"{v!r} vs r_j - r_h = {r.r_j!r} - {r.r_h!r}")
    rng = np.random.default_rng(10)
    bad_sign = 0
    worst = 0.0
    for n in NS:
        p = ModelParams(n)
        for y, s in np.exp(rng.uniform(math.log(0.1), math.log(10), (1000, 2))):
            d = rj_minus_rh(y, s, p)
            rr = ricci_eigenvalues(ancient_form_metric(y, s, p), p)
            worst = max(worst, abs(d - (rr.r_j - rr.r_h)) / max(abs(rr.r_j), abs(rr.r_h)))
            if y > s and not d > 0:
                bad_sign += 1
            if rj_minus_rh(s, s, p) != 0:
                bad_sign += 1
    ok &= criterion(10, "sign for y > s and zero at y = s, 1000 samples x n=1..3", bad_sign == 0,
                    f"{bad_sign} violations")
    ok &= criterion(10, "factored form matches the eigenvalue difference", worst <= 1e-12,
                    f"max relative error {worst:.3g} (tol 1e-12)")
    assert ok


# 11 ----------------------------------------------------------------------

_INVARIANT_STARTS = {
    "y = z": [((0.3, 0.8, 0.8, 1.2), lambda g: abs(g[:, 1] - g[:, 2]) / g[:, 2]),
              ((0.5, 2.0, 2.0, 1.0), lambda g: abs(g[:, 1] - g[:, 2]) / g[:, 2])],
    "x = y = z": [((0.5, 0.5, 0.5, 1.5), lambda g: np.maximum(abs(g[:, 0] - g[:, 1]),
                                                              abs(g[:, 1] - g[:, 2])) / g[:, 1]),
                  ((2.0, 2.0, 2.0, 1.0), lambda g: np.maximum(abs(g[:, 0] - g[:, 1]),
                                                              abs(g[:, 1] - g[:, 2])) / g[:, 1])],
    "y = z = s": [((0.3, 1.0, 1.0, 1.0), lambda g: np.maximum(abs(g[:, 1] - g[:, 3]),
                                                              abs(g[:, 2] - g[:, 3])) / g[:, 3]),
                  ((2.0, 1.0, 1.0, 1.0), lambda g: np.maximum(abs(g[:, 1] - g[:, 3]),
                                                              abs(g[:, 2] - g[:, 3])) / g[:, 3])],
}


def test_criterion_11_invariant_sets(criterion):
    ok = True
    for name, cases in _INVARIANT_STARTS.items():
        worst = 0.0
        for n in NS:
            p = ModelParams(n)
            for m0, defect in cases:
                for direction in ("forward", "backward"):
                    tr = integrate("normalized", m0, direction, p)
                    worst = max(worst, float(np.max(defect(tr.states))))
        ok &= criterion(11, f"{name} preserved over full runs", worst <= 1e-8,
                        f"max relative defect {worst:.3g} (tol 1e-8)")
    assert ok


# 12 ----------------------------------------------------------------------

def _run_cli(argv, capsys):
    code = main(argv)
    out, _ = capsys.readouterr()
    return code, out


def test_criterion_12_cli_contract(criterion, capsys, tmp_path):
    ok = True
    codes = {}
    for n in NS:
        codes[n], _ = _run_cli(["verify", "--n", str(n)], capsys)
    ok &= criterion(12, "verify exits 0 for n=1..3", all(c == 0 for c in codes.values()),
                    f"exit codes {codes}")

    same = True
    for fmt in ("csv", "json"):
        path = tmp_path / f"flow.{fmt}"
        _run_cli(["flow", "0.1,1,1,3", "--direction", "backward", "--format", fmt,
                  "--out", str(path)], capsys)
        again = tmp_path / f"again.{fmt}"
        if fmt == "csv":
            header, rows = read_csv_table(path)
            write_csv_table(header, rows, again)
        else:
            export_trajectory(trajectory_from_json(path), "json", again)
        same &= again.read_bytes() == path.read_bytes()
    port = tmp_path / "portrait.csv"
    _run_cli(["portrait", "--axis", "s=0.5:2:3:log", "--axis", "y_over_s=0.5:2:3:log",
              "--threads", "2", "--out", str(port)], capsys)
    header, rows = read_csv_table(port)
    again = tmp_path / "portrait_again.csv"
    write_csv_table(header, rows, again)
    same &= again.read_bytes() == port.read_bytes()
    ok &= criterion(12, "flow (csv, json) and portrait outputs round-trip byte-identically",
                    same, "rewritten files compared byte for byte")

    _, first = _run_cli(["verify", "--seed", "7"], capsys)
    _, second = _run_cli(["verify", "--seed", "7"], capsys)
    port2 = tmp_path / "portrait2.csv"
    _run_cli(["portrait", "--axis", "s=0.5:2:3:log", "--axis", "y_over_s=0.5:2:3:log",
              "--threads", "1", "--out", str(port2)], capsys)
    repro = first == second and port2.read_bytes() == port.read_bytes()
    ok &= criterion(12, "seeded runs reproducible", repro,
                    "verify --seed 7 twice; portrait with 1 and 2 workers")
    assert ok
