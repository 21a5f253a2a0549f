"""Vietoris-Rips filtrations, Z/2 persistence, and filling-radius estimates.

The filling radius of ``M`` is the scale at which the fundamental class dies in
the ``r``-neighborhood of the Kuratowski embedding.  On a finite sample the
nested neighborhoods are realized by the Vietoris-Rips filtration (a simplex
enters at the diameter of its vertex set) and the estimate is half the death
value of the dominant bar in the relevant degree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import _io, _kernel
from .errors import DeathAtThreshold, InvalidInput, NoDominantBar, SimplexBudgetExceeded
from .metric_core import FiniteMetricSpace

DEFAULT_SIMPLEX_BUDGET = 50_000_000
NAIVE_BUDGET = 50_000
CONVENTION = "half-death, diameter-VR"


@dataclass(frozen=True, eq=False)
class Filtration:
    """All simplices up to ``maxdim`` with diameter at most ``threshold``.

    The simplex list is produced on first access to :attr:`simplices`; the
    constructor only counts.  Order is ``(value, dimension, lexicographic
    vertices)``.
    """

    space: FiniteMetricSpace = field(repr=False)
    maxdim: int
    threshold: float
    counts: tuple[int, ...]

    def __len__(self):
        return sum(self.counts)

    @cached_property
    def _arrays(self):
        verts, values, dims = [], [], []
        width = self.maxdim + 1
        for k in range(self.maxdim + 1):
            v, x = _kernel.enumerate_simplices(self.space.d, self.threshold, k)
            pad = np.full((len(v), width), -1, dtype=np.int64)
            pad[:, : k + 1] = v
            verts.append(pad)
            values.append(x)
            dims.append(np.full(len(v), k, dtype=np.int64))
        verts = np.concatenate(verts) if verts else np.zeros((0, width), dtype=np.int64)
        values = np.concatenate(values) if values else np.zeros(0)
        dims = np.concatenate(dims) if dims else np.zeros(0, dtype=np.int64)
        keys = [verts[:, c] for c in range(width - 1, -1, -1)] + [dims, values]
        order = np.lexsort(keys)
        return verts[order], values[order], dims[order]

    @property
    def simplices(self) -> list[tuple[tuple[int, ...], float]]:
        verts, values, dims = self._arrays
        return [(tuple(int(x) for x in v[: k + 1]), float(val)) for v, val, k in zip(verts, values, dims)]

    def __iter__(self):
        return iter(self.simplices)


def _check_index_range(n: int, maxdim: int) -> None:
    if n and math.comb(n, min(n, maxdim + 2)) >= 2**62:
        raise InvalidInput(f"{n} points with maxdim {maxdim} overflow 64-bit simplex indices")


def build_vr_filtration(space: FiniteMetricSpace, maxdim: int, threshold: float,
                        budget: int = DEFAULT_SIMPLEX_BUDGET) -> Filtration:
    if maxdim < 1:
        raise InvalidInput(f"maxdim must be at least 1, got {maxdim}")
    if not threshold > 0:
        raise InvalidInput(f"threshold must be positive, got {threshold!r}")
    _check_index_range(space.n, maxdim)
    counts = _kernel.count_simplices(space.d, float(threshold), maxdim, budget)
    if sum(counts) > budget:
        raise SimplexBudgetExceeded(
            f"filtration exceeds the simplex budget of {budget} (counted {sum(counts)} by dimension "
            f"{len(counts) - 1}); lower the threshold or the sample size",
            budget=budget, counted=sum(counts), counts=counts, threshold=threshold, maxdim=maxdim,
        )
    return Filtration(space, maxdim, float(threshold), tuple(counts))


@dataclass(frozen=True)
class Barcode:
    """Finite pairs ``(dim, birth, death)`` and essential classes ``(dim, birth)``.

    Degrees ``0..maxdim-1`` are reported; zero-length pairs are dropped.  Both
    tuples are kept sorted so equal barcodes compare equal.
    """

    pairs: tuple[tuple[int, float, float], ...]
    essentials: tuple[tuple[int, float], ...]
    maxdim: int
    threshold: float

    @classmethod
    def build(cls, pairs, essentials, maxdim, threshold) -> "Barcode":
        pairs = tuple(sorted((int(k), float(b), float(d)) for k, b, d in pairs))
        essentials = tuple(sorted((int(k), float(b)) for k, b in essentials))
        return cls(pairs, essentials, int(maxdim), float(threshold))

    @property
    def maxdim_homology(self) -> int:
        return self.maxdim - 1

    def bars(self, k: int) -> list[tuple[float, float]]:
        return [(b, d) for dim, b, d in self.pairs if dim == k]

    def essential_births(self, k: int) -> list[float]:
        return [b for dim, b in self.essentials if dim == k]

    def to_json(self) -> dict:
        return {
            "maxdim": self.maxdim,
            "threshold": self.threshold,
            "pairs": [{"dim": k, "birth": b, "death": d} for k, b, d in self.pairs],
            "essentials": [{"dim": k, "birth": b} for k, b in self.essentials],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Barcode":
        return cls.build(
            [(p["dim"], p["birth"], p["death"]) for p in obj["pairs"]],
            [(e["dim"], e["birth"]) for e in obj["essentials"]],
            obj["maxdim"],
            _io.from_jsonable_float(obj["threshold"]),
        )


def reduce_detailed(filtration: Filtration) -> dict:
    """Raw kernel output, including the simplex index of every birth and death."""
    return _kernel.barcode(filtration.space.d, filtration.threshold, filtration.maxdim)


def reduce(filtration: Filtration) -> Barcode:
    """Persistence pairs over Z/2 by column reduction with clearing.

    The columns reduced are coboundaries, processed from the top of the
    filtration down, so that every simplex already paired one degree lower is
    skipped; the resulting pairing is the same as that of the boundary-matrix
    reduction (see :func:`reduce_naive`).
    """
    raw = reduce_detailed(filtration)
    return Barcode.build(
        zip(raw["pair_dim"], raw["pair_birth"], raw["pair_death"]),
        zip(raw["ess_dim"], raw["ess_birth"]),
        filtration.maxdim,
        filtration.threshold,
    )


def naive_pairing(filtration: Filtration, budget: int = NAIVE_BUDGET):
    """Textbook left-to-right boundary-matrix reduction over Z/2.

    Returns ``(simplices, pairs, unpaired)`` where ``pairs`` holds
    ``(birth_position, death_position)`` into ``simplices`` and ``unpaired``
    the positions of columns that stay zero and are never a pivot.
    """
    if len(filtration) > budget:
        raise SimplexBudgetExceeded(
            f"naive reduction limited to {budget} simplices, filtration has {len(filtration)}",
            budget=budget, counted=len(filtration),
        )
    simplices = filtration.simplices
    position = {s: i for i, (s, _) in enumerate(simplices)}
    low_owner: dict[int, int] = {}
    pairs = []
    zero = []
    for j, (s, _) in enumerate(simplices):
        if len(s) == 1:
            zero.append(j)
            continue
        col = {position[s[:i] + s[i + 1:]] for i in range(len(s))}
        while col:
            low = max(col)
            other = low_owner.get(low)
            if other is None:
                break
            col ^= other[1]
        if col:
            low = max(col)
            low_owner[low] = (j, col)
            pairs.append((low, j))
        else:
            zero.append(j)
    births = {b for b, _ in pairs}
    unpaired = [j for j in zero if j not in births]
    return simplices, pairs, unpaired


def reduce_naive(filtration: Filtration, budget: int = NAIVE_BUDGET) -> Barcode:
    simplices, pairs, unpaired = naive_pairing(filtration, budget)
    top = filtration.maxdim - 1
    finite = []
    for b, d in pairs:
        k = len(simplices[b][0]) - 1
        birth, death = simplices[b][1], simplices[d][1]
        if k <= top and death > birth:
            finite.append((k, birth, death))
    essentials = [(len(simplices[j][0]) - 1, simplices[j][1]) for j in unpaired
                  if len(simplices[j][0]) - 1 <= top]
    return Barcode.build(finite, essentials, filtration.maxdim, filtration.threshold)


@dataclass
class EstimatorConfig:
    r_max: float | None = None
    min_gap: float = 2.0
    simplex_budget: int = DEFAULT_SIMPLEX_BUDGET
    # multiplier applied to twice the best upper bound for the default threshold
    threshold_margin: float = 1.1


@dataclass(frozen=True)
class FillRadEstimate:
    k: int
    estimate: float
    bar: tuple[float, float]
    confidence: float
    threshold: float
    label: str = ""
    convention: str = CONVENTION

    def to_json(self) -> dict:
        return {
            "label": self.label,
            "k": self.k,
            "estimate": self.estimate,
            "bar": {"birth": self.bar[0], "death": self.bar[1]},
            "convention": self.convention,
            "confidence": self.confidence,
            "threshold": self.threshold,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "FillRadEstimate":
        if obj.get("convention") != CONVENTION:
            raise InvalidInput(f"estimate uses convention {obj.get('convention')!r}, expected {CONVENTION!r}")
        return cls(
            k=int(obj["k"]),
            estimate=float(obj["estimate"]),
            bar=(float(obj["bar"]["birth"]), float(obj["bar"]["death"])),
            confidence=_io.from_jsonable_float(obj["confidence"]),
            threshold=_io.from_jsonable_float(obj["threshold"]),
            label=obj.get("label", ""),
        )


def default_threshold(sample, config: EstimatorConfig) -> float:
    if config.r_max is not None:
        return float(config.r_max)
    from .bounds import _manifold, best_upper_bound

    ub = best_upper_bound(sample)
    if ub is None or not math.isfinite(ub):
        ub = _manifold(sample).space.diameter
    return config.threshold_margin * 2.0 * ub


def select_dominant(barcode: Barcode, k: int, min_gap: float) -> tuple[tuple[float, float], float]:
    """Longest degree-``k`` bar and its gap ratio to the runner-up.

    Essential classes take part with their bar capped at the threshold; if one
    of them is the longest, the death is not resolved and
    :class:`DeathAtThreshold` is raised.
    """
    cands = [(d - b, b, d, False) for b, d in barcode.bars(k)]
    cands += [(barcode.threshold - b, b, barcode.threshold, True) for b in barcode.essential_births(k)]
    if not cands:
        raise NoDominantBar(f"no bars in degree {k}", k=k, gap=0.0)
    cands.sort(key=lambda c: (-c[0], c[1], c[2]))
    length, birth, death, essential = cands[0]
    if essential:
        raise DeathAtThreshold(
            f"the longest degree-{k} class is still alive at threshold {barcode.threshold!r}; increase r_max",
            k=k, birth=birth, threshold=barcode.threshold,
        )
    gap = math.inf if len(cands) == 1 or cands[1][0] == 0 else length / cands[1][0]
    if gap < min_gap:
        raise NoDominantBar(
            f"degree-{k} bar of length {length!r} is not dominant (gap ratio {gap!r} < {min_gap!r})",
            k=k, gap=gap, min_gap=min_gap,
        )
    return (birth, death), gap


def estimate_fillrad(sample, k: int | None = None, config: EstimatorConfig | None = None) -> FillRadEstimate:
    """Half the death of the dominant degree-``k`` bar (``k`` defaults to the sample dimension)."""
    from .samplers import SubmersionSample

    config = config or EstimatorConfig()
    manifold = sample.total if isinstance(sample, SubmersionSample) else sample
    k = manifold.dim if k is None else k
    if k < 1:
        raise InvalidInput(f"degree must be at least 1, got {k}")
    if manifold.n < 2:
        raise NoDominantBar(f"a {manifold.n}-point space has no degree-{k} bars", k=k, gap=0.0)
    threshold = default_threshold(sample, config)
    filt = build_vr_filtration(manifold.space, k + 1, threshold, config.simplex_budget)
    bc = reduce(filt)
    (birth, death), gap = select_dominant(bc, k, config.min_gap)
    return FillRadEstimate(k, death / 2.0, (birth, death), gap, threshold, manifold.label)


def scaling_check(sample, c: float, k: int | None = None, config: EstimatorConfig | None = None,
                  rtol: float = 1e-9) -> dict:
    from .samplers import scale_sample

    base = estimate_fillrad(sample, k, config)
    scaled = estimate_fillrad(scale_sample(sample, c), k, config)
    expected = c * base.estimate
    rel = abs(scaled.estimate - expected) / abs(expected)
    return {
        "c": c,
        "k": base.k,
        "estimate": base.estimate,
        "scaled_estimate": scaled.estimate,
        "relative_error": rel,
        "rtol": rtol,
        "passed": rel <= rtol,
    }
