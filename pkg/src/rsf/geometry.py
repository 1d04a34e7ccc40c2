"""Curvature of Sp(n+1)-invariant metrics on the sphere S^{4n+3}.

A metric in the family is diagonal in a fixed basis: eigenvalues ``x, y, z``
on the three Hopf-fiber directions ``i, j, k`` and ``s`` on the ``4n``
dimensional horizontal block.  Everything here is a closed-form rational
expression in ``(x, y, z, s)`` evaluated in binary64.

Two evaluation routes exist for the Ricci eigenvalues:

* :func:`ricci_components` / :func:`scalar_components` are the textbook
  formulas, broadcast over numpy arrays.  They are the reference forms.
* :func:`stable_ricci` and :func:`scalar_stable` are scalar-only
  rearrangements behind the public operations and the flow code.  They
  factor the fiber numerators so that no large terms cancel when one fiber
  collapses, and they are exactly symmetric in floating point: tied inputs
  produce bit-identical outputs, which keeps the invariant subfamilies of
  the flow invariant in floating point as well.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import permutations
from typing import Sequence

import numpy as np

from .errors import DomainError

__all__ = [
    "ModelParams", "MetricParams", "RicciEigenvalues", "TangentVector",
    "CanonicalForm", "as_metric", "ricci_components", "scalar_components",
    "scalar_slice_components", "stable_ricci", "scalar_stable", "ricci_eigenvalues",
    "scalar_curvature", "scalar_curvature_slice", "ricci_norm_sq",
    "traceless_ricci_norm_sq", "relative_volume", "normalize_volume",
    "canonicalize", "sectional_fiber_base", "scalar_differential", "l2_pairing", "slice_metric",
    "multiplicities",
]


def _check_positive(*values):
    for v in values:
        if not (math.isfinite(v) and v > 0):
            raise DomainError(f"metric parameters must be finite and > 0, got {v!r}")


@dataclass(frozen=True)
class ModelParams:
    """The quaternionic dimension ``n`` of S^{4n+3}."""

    n: int = 1

    def __post_init__(self):
        if isinstance(self.n, bool) or int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))

    @property
    def dim(self) -> int:
        return 4 * self.n + 3


@dataclass(frozen=True)
class MetricParams:
    """A point ``(x, y, z, s)`` of the invariant family; all entries > 0."""

    x: float
    y: float
    z: float
    s: float

    def __post_init__(self):
        vals = tuple(float(v) for v in (self.x, self.y, self.z, self.s))
        _check_positive(*vals)
        for name, v in zip("xyzs", vals):
            object.__setattr__(self, name, v)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z, self.s])

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x, self.y, self.z, self.s)

    def scaled(self, lam: float) -> "MetricParams":
        return MetricParams(lam * self.x, lam * self.y, lam * self.z, lam * self.s)

    def permuted(self, perm: Sequence[int]) -> "MetricParams":
        """Return the metric whose fibers are ``(fibers[perm[0]], ...)``."""
        f = (self.x, self.y, self.z)
        return MetricParams(f[perm[0]], f[perm[1]], f[perm[2]], self.s)


def as_metric(m) -> MetricParams:
    if isinstance(m, MetricParams):
        return m
    vals = tuple(float(v) for v in m)
    if len(vals) != 4:
        raise DomainError(f"expected 4 metric parameters, got {len(vals)}")
    return MetricParams(*vals)


def slice_metric(x: float, y: float, z: float, p: ModelParams) -> MetricParams:
    """Volume-one metric with fibers ``(x, y, z)``: ``s = (xyz)^(-1/4n)``."""
    _check_positive(x, y, z)
    return MetricParams(x, y, z, (x * y * z) ** (-1.0 / (4 * p.n)))


def multiplicities(p: ModelParams) -> np.ndarray:
    return np.array([1.0, 1.0, 1.0, 4.0 * p.n])


@dataclass(frozen=True)
class RicciEigenvalues:
    """Eigenvalues of the Ricci endomorphism; ``r_h`` has multiplicity 4n."""

    r_i: float
    r_j: float
    r_k: float
    r_h: float

    def as_array(self) -> np.ndarray:
        return np.array([self.r_i, self.r_j, self.r_k, self.r_h])

    def trace(self, p: ModelParams) -> float:
        return math.fsum((self.r_i, self.r_j, self.r_k, 4 * p.n * self.r_h))


@dataclass(frozen=True)
class TangentVector:
    """A diagonal symmetric 2-tensor, i.e. a variation of ``(x, y, z, s)``."""

    h_x: float
    h_y: float
    h_z: float
    h_s: float

    def as_array(self) -> np.ndarray:
        return np.array([self.h_x, self.h_y, self.h_z, self.h_s])

    @classmethod
    def from_array(cls, a) -> "TangentVector":
        return cls(*(float(v) for v in a))

    def is_volume_preserving(self, m: MetricParams, p: ModelParams, tol: float = 1e-12) -> bool:
        terms = (self.h_x / m.x, self.h_y / m.y, self.h_z / m.z, 4 * p.n * self.h_s / m.s)
        return abs(math.fsum(terms)) <= tol * max(1.0, max(abs(t) for t in terms))


@dataclass(frozen=True)
class CanonicalForm:
    """A metric with ``x <= y <= z`` and the permutation that produced it.

    ``metric`` fibers are ``input_fibers[permutation[k]]`` for ``k = 0, 1, 2``.
    """

    metric: MetricParams
    permutation: tuple[int, int, int]

    def restore(self) -> MetricParams:
        """Apply the inverse permutation, recovering the original metric."""
        inv = [0, 0, 0]
        for k, src in enumerate(self.permutation):
            inv[src] = k
        return self.metric.permuted(inv)


# ---------------------------------------------------------------------------
# reference formulas (array friendly)

def ricci_components(x, y, z, s, n):
    """Ricci endomorphism eigenvalues ``(r_i, r_j, r_k, r_h)``.

    Broadcasts over numpy arrays.
    """
    xyz = x * y * z
    r_i = 2 * (x**2 - y**2 - z**2) / xyz + 4 / x + 4 * n * x / s**2
    r_j = 2 * (y**2 - x**2 - z**2) / xyz + 4 / y + 4 * n * y / s**2
    r_k = 2 * (z**2 - x**2 - y**2) / xyz + 4 / z + 4 * n * z / s**2
    r_h = -2 * (x + y + z) / s**2 + (4 * n + 8) / s
    return r_i, r_j, r_k, r_h


def scalar_components(x, y, z, s, n):
    """Scalar curvature of ``(x, y, z, s)``; broadcasts over arrays."""
    return (4 / x + 4 / y + 4 / z + 16 * n * (n + 2) / s
            - 4 * n * (x + y + z) / s**2
            - 2 * (x**2 + y**2 + z**2) / (x * y * z))


def scalar_slice_components(x, y, z, n):
    """Scalar curvature on the volume-one slice ``s = (xyz)^(-1/4n)``."""
    xyz = x * y * z
    return (4 / x + 4 / y + 4 / z
            - 2 * z / (x * y) - 2 * y / (x * z) - 2 * x / (y * z)
            + 16 * n * (n + 2) * xyz ** (1 / (4 * n))
            - 4 * n * (x + y + z) * xyz ** (1 / (2 * n)))


def stable_ricci(x: float, y: float, z: float, s: float, n: int):
    """Return ``(r_i, r_j, r_k, r_h, S)`` for plain floats.

    Mathematically identical to :func:`ricci_components`, rearranged as
    ``r_a = 2 (a + b - c)(a - b + c) / (abc) + 4n a / s^2``.  Each linear
    factor is a correctly rounded sum, and the fiber product is taken over
    sorted values, so permuting the fibers permutes the output bit for bit.
    On the set where two fibers equal ``s`` those fiber eigenvalues equal
    ``r_h`` identically, and they are returned as ``r_h``.
    """
    f0, f1, f2 = sorted((x, y, z))
    prod = f0 * f1 * f2
    s2 = s * s
    fsum = math.fsum

    def fiber(a, b, c):
        return 2.0 * fsum((a, b, -c)) * fsum((a, -b, c)) / prod + 4.0 * n * a / s2

    r_h = (4.0 * n + 8.0) / s - 2.0 * fsum((f0, f1, f2)) / s2
    r_i = fiber(x, y, z)
    r_j = fiber(y, z, x)
    r_k = fiber(z, x, y)
    if y == s and z == s:
        r_j = r_k = r_h
    if x == s and z == s:
        r_i = r_k = r_h
    if x == s and y == s:
        r_i = r_j = r_h
    S = fsum((r_i, r_j, r_k, 4.0 * n * r_h))
    return r_i, r_j, r_k, r_h, S


# ---------------------------------------------------------------------------
# operations on MetricParams

def scalar_stable(x: float, y: float, z: float, s: float, n: int) -> float:
    """Scalar curvature from its closed form, arranged to avoid cancellation.

    The fiber terms ``4/x + 4/y + 4/z - 2(x^2+y^2+z^2)/(xyz)`` are combined
    over the common denominator, whose numerator is written as
    ``2a(2b + 2c - a) - 2(b - c)^2`` with ``a`` the smallest fiber.
    """
    a, b, c = sorted((x, y, z))
    fib = (2.0 * a * math.fsum((2.0 * b, 2.0 * c, -a)) - 2.0 * (b - c) ** 2) / (a * b * c)
    return math.fsum((fib, 16.0 * n * (n + 2) / s, -4.0 * n * math.fsum((x, y, z)) / (s * s)))


def ricci_eigenvalues(m, p: ModelParams) -> RicciEigenvalues:
    m = as_metric(m)
    return RicciEigenvalues(*stable_ricci(m.x, m.y, m.z, m.s, p.n)[:4])


def scalar_curvature(m, p: ModelParams) -> float:
    m = as_metric(m)
    return scalar_stable(m.x, m.y, m.z, m.s, p.n)


def scalar_curvature_slice(x: float, y: float, z: float, p: ModelParams) -> float:
    _check_positive(x, y, z)
    return float(scalar_slice_components(float(x), float(y), float(z), p.n))


def ricci_norm_sq(m, p: ModelParams) -> float:
    """``|Ric|^2 = r_i^2 + r_j^2 + r_k^2 + 4n r_h^2``."""
    r = ricci_eigenvalues(m, p)
    return math.fsum((r.r_i**2, r.r_j**2, r.r_k**2, 4 * p.n * r.r_h**2))


def traceless_ricci_norm_sq(m, p: ModelParams) -> float:
    """``|Ric^0|^2 = |Ric|^2 - S^2/N``, summed from the centred eigenvalues.

    Summing squares of ``r_a - S/N`` keeps the result non-negative and
    exactly zero-safe at Einstein metrics.
    """
    r = ricci_eigenvalues(m, p)
    mean = r.trace(p) / p.dim
    return math.fsum(((r.r_i - mean)**2, (r.r_j - mean)**2, (r.r_k - mean)**2,
                      4 * p.n * (r.r_h - mean)**2))


def relative_volume(m, p: ModelParams) -> float:
    """``x y z s^{4n}``; the volume of the unit round sphere is dropped."""
    m = as_metric(m)
    return m.x * m.y * m.z * m.s ** (4 * p.n)


def normalize_volume(m, p: ModelParams) -> MetricParams:
    """Rescale ``m`` to relative volume one."""
    m = as_metric(m)
    # log form avoids overflow of s^{4n} for large n
    logvol = math.log(m.x) + math.log(m.y) + math.log(m.z) + 4 * p.n * math.log(m.s)
    return m.scaled(math.exp(-logvol / p.dim))


def canonicalize(m) -> CanonicalForm:
    """Stable sort of the fibers; ``s`` is untouched."""
    m = as_metric(m)
    f = (m.x, m.y, m.z)
    perm = tuple(sorted(range(3), key=lambda k: f[k]))
    return CanonicalForm(m.permuted(perm), perm)


def scalar_differential(m, p: ModelParams) -> tuple[float, float, float, float]:
    """Partial derivatives of the scalar curvature in ``(x, y, z, s)``.

    Differentiated from the closed form of ``S`` directly, without going
    through the Ricci eigenvalues, so it can cross-check them.
    """
    m = as_metric(m)
    x, y, z, s, n = m.x, m.y, m.z, m.s, p.n
    q = x * x + y * y + z * z
    s2 = s * s

    def fib(a, b, c):
        return -4 / a**2 - 4 * n / s2 - 4 / (b * c) + 2 * q / (a * a * b * c)

    ds = -16 * n * (n + 2) / s2 + 8 * n * (x + y + z) / (s2 * s)
    return (fib(x, y, z), fib(y, z, x), fib(z, x, y), ds)


def sectional_fiber_base(m, p: ModelParams) -> tuple[float, float, float]:
    """Sectional curvatures of the planes spanned by a fiber and a horizontal vector."""
    m = as_metric(m)
    s2 = m.s * m.s
    return (m.x / s2, m.y / s2, m.z / s2)


def l2_pairing(m, h1: TangentVector, h2: TangentVector, p: ModelParams) -> float:
    """Pointwise inner product of two diagonal 2-tensors, with multiplicities."""
    m = as_metric(m)
    return math.fsum((h1.h_x * h2.h_x / m.x**2, h1.h_y * h2.h_y / m.y**2,
                      h1.h_z * h2.h_z / m.z**2, 4 * p.n * h1.h_s * h2.h_s / m.s**2))


ALL_PERMUTATIONS = tuple(permutations(range(3)))
