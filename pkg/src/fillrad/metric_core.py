"""Finite metric spaces and their Kuratowski embedding into finite sup-norm space.

A sample ``p_0, ..., p_{n-1}`` of a metric space is represented by its distance
matrix.  Row ``i`` of that matrix is the function ``dist_{p_i}`` restricted to the
sample, so the rows themselves form the (finite) Kuratowski embedding and
``max_k |d[i,k] - d[j,k]| == d[i,j]`` holds exactly: the maximum is attained at
``k = j`` and every other term is bounded by the triangle inequality.

Functions on the sample ("ambient functions") are plain 1-D float arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _io
from .errors import (
    AsymmetricInput,
    LengthMismatch,
    NonFiniteEntry,
    NonpositiveDistance,
    NonpositiveScale,
    NonzeroDiagonal,
    NotSquare,
    TriangleViolation,
)

DEFAULT_SLACK = 1e-9


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class FiniteMetricSpace:
    """Validated symmetric distance matrix; construct through :func:`validate_metric`."""

    d: np.ndarray

    @property
    def n(self) -> int:
        return self.d.shape[0]

    @property
    def diameter(self) -> float:
        return float(self.d.max()) if self.n else 0.0

    def __eq__(self, other):
        if not isinstance(other, FiniteMetricSpace):
            return NotImplemented
        return self.d.shape == other.d.shape and bool(np.array_equal(self.d, other.d))

    def __hash__(self):
        return hash(self.d.tobytes())

    def __len__(self):
        return self.n


@dataclass(frozen=True, eq=False)
class KuratowskiFrame:
    """Kuratowski embedding of a finite metric space; ``vectors[i]`` is ``dist_{p_i}``."""

    space: FiniteMetricSpace
    vectors: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.space.n

    def row(self, i: int) -> np.ndarray:
        return self.vectors[i]


@dataclass(frozen=True)
class VicinitySet:
    """Sample points whose Kuratowski row lies within sup-distance ``R`` of ``f``."""

    f: np.ndarray = field(repr=False)
    R: float
    members: np.ndarray

    def __len__(self):
        return len(self.members)

    def __contains__(self, i):
        return bool(np.any(self.members == i))

    def diameter(self, frame: KuratowskiFrame) -> float:
        if len(self.members) == 0:
            return 0.0
        sub = frame.space.d[np.ix_(self.members, self.members)]
        return float(sub.max())


def worst_triangle_excess(d: np.ndarray) -> tuple[float, tuple[int, int, int]]:
    """Largest ``d[i,j] - (d[i,k] + d[k,j])`` over all triples, with its triple.

    Ties resolve to the lexicographically smallest ``(i, j)`` and then ``k``.
    """
    n = d.shape[0]
    if n < 3:
        return 0.0, (0, 0, 0)
    best = np.full((n, n), np.inf)
    arg = np.zeros((n, n), dtype=np.int64)
    for k in range(n):
        via = d[:, k][:, None] + d[k, :][None, :]
        better = via < best
        best = np.where(better, via, best)
        arg[better] = k
    excess = d - best
    flat = int(np.argmax(excess))
    i, j = divmod(flat, n)
    return float(excess[i, j]), (i, j, int(arg[i, j]))


def validate_metric(raw, slack: float = DEFAULT_SLACK) -> FiniteMetricSpace:
    """Check a square matrix for the metric axioms and wrap it.

    ``slack`` is an additive tolerance on the triangle inequality that absorbs
    last-bit error from transcendental samplers; symmetry and the diagonal are
    checked exactly.
    """
    d = np.asarray(raw, dtype=np.float64)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise NotSquare(f"expected a square matrix, got shape {d.shape}", shape=list(d.shape))
    if not np.all(np.isfinite(d)):
        raise NonFiniteEntry("matrix has non-finite entries")
    n = d.shape[0]
    if np.any(np.diag(d) != 0.0):
        i = int(np.flatnonzero(np.diag(d) != 0.0)[0])
        raise NonzeroDiagonal(f"d[{i}][{i}] = {d[i, i]!r}", index=i)
    if not np.array_equal(d, d.T):
        i, j = map(int, np.argwhere(d != d.T)[0])
        raise AsymmetricInput(f"d[{i}][{j}] != d[{j}][{i}]", i=i, j=j)
    off = ~np.eye(n, dtype=bool)
    if np.any(d[off] <= 0.0):
        i, j = map(int, np.argwhere((d <= 0.0) & off)[0])
        raise NonpositiveDistance(f"d[{i}][{j}] = {d[i, j]!r} but points must be distinct", i=i, j=j)
    excess, (i, j, k) = worst_triangle_excess(d)
    if excess > slack:
        raise TriangleViolation(i, j, k, excess)
    return FiniteMetricSpace(_readonly(d))


def kuratowski_embed(space: FiniteMetricSpace) -> KuratowskiFrame:
    return KuratowskiFrame(space, space.d)


def as_function(values, n: int | None = None) -> np.ndarray:
    f = np.asarray(values, dtype=np.float64)
    if f.ndim != 1:
        raise LengthMismatch(f"ambient function must be 1-D, got shape {f.shape}")
    if n is not None and f.shape[0] != n:
        raise LengthMismatch(f"expected length {n}, got {f.shape[0]}", expected=n, got=int(f.shape[0]))
    if not np.all(np.isfinite(f)):
        raise NonFiniteEntry("ambient function has non-finite entries")
    return f


def sup_distance(f, g) -> float:
    f = np.asarray(f, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    if f.shape != g.shape:
        raise LengthMismatch(f"shapes {f.shape} and {g.shape} differ")
    if f.size == 0:
        return 0.0
    return float(np.max(np.abs(f - g)))


def row_distances(frame: KuratowskiFrame, f) -> np.ndarray:
    """``‖f - dist_{p_i}‖∞`` for every sample point ``i``."""
    f = as_function(f, frame.n)
    return np.max(np.abs(frame.vectors - f[None, :]), axis=1)


def vicinity_set(frame: KuratowskiFrame, f, R: float) -> VicinitySet:
    if R < 0:
        raise ValueError("R must be nonnegative")
    f = as_function(f, frame.n)
    members = np.flatnonzero(row_distances(frame, f) <= R)
    return VicinitySet(f, float(R), members)


def scale_metric(space: FiniteMetricSpace, c: float) -> FiniteMetricSpace:
    if not c > 0:
        raise NonpositiveScale(f"scale must be positive, got {c!r}", c=c)
    return FiniteMetricSpace(_readonly(space.d * c))


def two_diff(a, b):
    """Error-free difference: ``a - b == s + err`` exactly (Knuth's TwoSum)."""
    a = np.asarray(a, dtype=np.float64)
    b = -np.asarray(b, dtype=np.float64)
    s = a + b
    bb = s - a
    err = (a - (s - bb)) + (b - bb)
    return s, err


def exact_abs_diff_le(a, b, t) -> np.ndarray:
    """Elementwise test of ``|a - b| <= t`` in exact real arithmetic on the given doubles."""
    s, err = two_diff(a, b)
    neg = (s < 0) | ((s == 0) & (err < 0))
    mag = np.where(neg, -s, s)
    tail = np.where(neg, -err, err)
    t = np.asarray(t, dtype=np.float64)
    return (mag < t) | ((mag == t) & (tail <= 0))


def read_metric_csv(path, slack: float = DEFAULT_SLACK) -> FiniteMetricSpace:
    text = Path(path).read_text()
    rows = [line for line in text.splitlines() if line.strip()]
    if not rows:
        return validate_metric(np.zeros((0, 0)), slack)
    data = [[float(x) for x in line.split(",")] for line in rows]
    if any(len(r) != len(data) for r in data):
        raise NotSquare(f"{path}: rows must all have {len(data)} entries")
    return validate_metric(np.array(data), slack)


def metric_to_csv(space: FiniteMetricSpace) -> str:
    return "".join(",".join(_io.fmt_float(x) for x in row) + "\n" for row in space.d)


def write_metric_csv(space: FiniteMetricSpace, path) -> None:
    _io.atomic_write_text(path, metric_to_csv(space))
