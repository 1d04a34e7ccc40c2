import math

import numpy as np
import pytest
from hypothesis import settings, strategies as st

from rsf import ModelParams

settings.register_profile("default", max_examples=200, deadline=None)
settings.load_profile("default")


@pytest.fixture
def p1():
    return ModelParams(1)


def log_uniform(lo=1e-2, hi=1e2):
    return st.floats(math.log(lo), math.log(hi)).map(math.exp)


def metrics(lo=1e-2, hi=1e2):
    return st.tuples(log_uniform(lo, hi), log_uniform(lo, hi), log_uniform(lo, hi), log_uniform(lo, hi))


model_params = st.integers(1, 4).map(ModelParams)


def rel_err(a, b):
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return float(np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-300)))


# one PASS/FAIL line per acceptance criterion, shown after the test run
ACCEPTANCE: dict[int, list[tuple[str, bool, str]]] = {}


@pytest.fixture
def criterion():
    def record(number: int, part: str, ok: bool, detail: str = "") -> bool:
        ACCEPTANCE.setdefault(number, []).append((part, bool(ok), detail))
        return bool(ok)
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[number]
        status = "PASS" if all(ok for _, ok, _ in parts) else "FAIL"
        tr.write_line(f"criterion {number:2d}: {status}")
        for part, ok, detail in parts:
            tr.write_line(f"    [{'ok' if ok else 'x '}] {part}: {detail}")
