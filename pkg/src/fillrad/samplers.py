"""Sampled manifolds with exact (or graph-approximated) geodesic metrics.

Each sampler returns a :class:`ManifoldSample` (a validated finite metric space
plus the geometric metadata the bound checkers need) or a
:class:`SubmersionSample` (total space, base, projection and fibers).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, shortest_path
from scipy.spatial.transform import Rotation
from scipy.stats import special_ortho_group

from .errors import (
    BadGrid,
    DisconnectedGraph,
    EmptyOrbit,
    InvalidInput,
    QuotientNotMetric,
    TooFewPoints,
    TriangleViolation,
)
from .metric_core import DEFAULT_SLACK, FiniteMetricSpace, scale_metric, validate_metric

# super-Fibonacci constants (Alexa, 2022): sqrt(2) and the real root of x^4 = x + 4
_PHI4 = math.sqrt(2.0)
_PSI4 = 1.533751168755204288118041
_GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))

MANIFOLDS = ("circle", "sphere2", "sphere3", "torus", "rp2", "quotient", "graph")


@dataclass(frozen=True, eq=False)
class ManifoldSample:
    space: FiniteMetricSpace = field(repr=False)
    dim: int
    inj: float | None = None
    delta: float | None = None
    diam_true: float | None = None
    fillrad_true: float | None = None
    orientable: bool = True
    label: str = ""
    seed: int | None = None
    # slack of the sample's structural invariants (equidistance for submersions)
    epsilon: float = 0.0
    # Hausdorff distance from the sample to the manifold, when known
    mesh: float | None = None
    # filling radii of product factors, enables the product-formula bound
    factor_fillrads: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.inj is not None and not self.inj > 0:
            raise InvalidInput(f"injectivity radius must be positive, got {self.inj!r}")
        if self.delta is not None and not self.delta >= 0:
            raise InvalidInput(f"curvature bound must be nonnegative, got {self.delta!r}")
        if self.diam_true is not None and self.space.n and self.space.diameter > self.diam_true + DEFAULT_SLACK:
            raise InvalidInput(
                f"sample diameter {self.space.diameter!r} exceeds declared diameter {self.diam_true!r}"
            )

    @property
    def n(self) -> int:
        return self.space.n

    def metadata(self) -> dict:
        return {
            "label": self.label,
            "dim": self.dim,
            "inj": self.inj,
            "delta": self.delta,
            "diam_true": self.diam_true,
            "fillrad_true": self.fillrad_true,
            "orientable": self.orientable,
            "seed": self.seed,
            "epsilon": self.epsilon,
            "mesh": self.mesh,
            "factor_fillrads": list(self.factor_fillrads) if self.factor_fillrads else None,
        }

    @classmethod
    def from_metadata(cls, space: FiniteMetricSpace, meta: dict) -> "ManifoldSample":
        ff = meta.get("factor_fillrads")
        return cls(
            space,
            dim=int(meta.get("dim", 1)),
            inj=meta.get("inj"),
            delta=meta.get("delta"),
            diam_true=meta.get("diam_true"),
            fillrad_true=meta.get("fillrad_true"),
            orientable=bool(meta.get("orientable", True)),
            label=meta.get("label", ""),
            seed=meta.get("seed"),
            epsilon=float(meta.get("epsilon") or 0.0),
            mesh=meta.get("mesh"),
            factor_fillrads=tuple(ff) if ff else None,
        )


@dataclass(frozen=True, eq=False)
class SubmersionSample:
    total: ManifoldSample
    base: ManifoldSample
    proj: np.ndarray = field(repr=False)
    fibers: tuple[np.ndarray, ...] = field(repr=False)
    rho0: float
    # measured slack of the equidistance and contraction invariants
    epsilon: float

    def metadata(self) -> dict:
        meta = self.total.metadata()
        meta["epsilon"] = self.epsilon
        meta["fibers"] = [f.tolist() for f in self.fibers]
        meta["rho0"] = self.rho0
        meta["base"] = self.base.metadata()
        return meta


def fiber_diameters(total: FiniteMetricSpace, fibers: Sequence[np.ndarray]) -> np.ndarray:
    """Extrinsic diameter of each fiber (distances measured in the total space)."""
    return np.array([float(total.d[np.ix_(f, f)].max()) if len(f) else 0.0 for f in fibers])


def submersion_slack(total: FiniteMetricSpace, base: FiniteMetricSpace, proj: np.ndarray,
                     fibers: Sequence[np.ndarray]) -> tuple[float, float]:
    """Worst equidistance deviation and worst contraction excess, measured exhaustively."""
    nearest = np.empty((total.n, base.n))
    for b, f in enumerate(fibers):
        nearest[:, b] = total.d[:, f].min(axis=1)
    equi = float(np.abs(nearest - base.d[proj, :]).max())
    contraction = float(np.max(base.d[np.ix_(proj, proj)] - total.d))
    return equi, max(contraction, 0.0)


def make_submersion(total: ManifoldSample, base: ManifoldSample, proj) -> SubmersionSample:
    proj = np.asarray(proj, dtype=np.int64)
    if proj.shape != (total.n,):
        raise InvalidInput(f"projection must map all {total.n} total points")
    if base.n and (proj.min() < 0 or proj.max() >= base.n):
        raise InvalidInput("projection index out of range")
    fibers = tuple(np.flatnonzero(proj == b) for b in range(base.n))
    if any(len(f) == 0 for f in fibers):
        raise InvalidInput("projection is not surjective onto the base sample")
    rho0 = 0.5 * float(fiber_diameters(total.space, fibers).max())
    equi, contraction = submersion_slack(total.space, base.space, proj, fibers)
    eps = max(equi, contraction)
    return SubmersionSample(replace(total, epsilon=eps), base, proj, fibers, rho0, eps)


def _circle_metric(length: float, n: int) -> np.ndarray:
    idx = np.arange(n)
    steps = np.abs(idx[:, None] - idx[None, :])
    steps = np.minimum(steps, n - steps)
    return length * (steps / n)


def sample_circle(circumference: float, n: int) -> ManifoldSample:
    if not circumference > 0:
        raise InvalidInput("circumference must be positive")
    if n < 3:
        raise TooFewPoints(f"circle needs at least 3 points, got {n}", n=n)
    L = float(circumference)
    space = validate_metric(_circle_metric(L, n))
    return ManifoldSample(
        space, dim=1, inj=L / 2, delta=0.0, diam_true=L / 2, fillrad_true=L / 6,
        orientable=True, label=f"circle(L={L!r}, n={n})", mesh=L / (2 * n),
    )


def _geodesic_from_unit(X: np.ndarray) -> np.ndarray:
    # angle = 2 atan2(|x - y|, |x + y|); stable at both small and near-antipodal angles
    diff = np.linalg.norm(X[:, None, :] - X[None, :, :], axis=-1)
    summ = np.linalg.norm(X[:, None, :] + X[None, :, :], axis=-1)
    d = 2.0 * np.arctan2(diff, summ)
    d = np.minimum(d, d.T)
    np.fill_diagonal(d, 0.0)
    return d


def fibonacci_sphere(n: int) -> np.ndarray:
    i = np.arange(n) + 0.5
    z = 1.0 - 2.0 * i / n
    r = np.sqrt(1.0 - z * z)
    theta = _GOLDEN_ANGLE * np.arange(n)
    return np.column_stack([r * np.cos(theta), r * np.sin(theta), z])


def super_fibonacci(n: int) -> np.ndarray:
    s = np.arange(n) + 0.5
    r = np.sqrt(s / n)
    R = np.sqrt(1.0 - s / n)
    alpha = 2.0 * np.pi * s / _PHI4
    beta = 2.0 * np.pi * s / _PSI4
    return np.column_stack([r * np.sin(alpha), r * np.cos(alpha), R * np.sin(beta), R * np.cos(beta)])


def _rotate(X: np.ndarray, seed: int | None) -> np.ndarray:
    if seed is None:
        return X
    if X.shape[1] == 3:
        return X @ Rotation.random(random_state=seed).as_matrix().T
    return X @ special_ortho_group.rvs(X.shape[1], random_state=seed).T


def _covering_radius(X: np.ndarray, probes: np.ndarray) -> float:
    cos = np.clip(probes @ X.T, -1.0, 1.0)
    return float(np.arccos(cos.max(axis=1)).max())


def sphere_points(dim: int, n: int, seed: int | None = 0, antipodal: bool = False) -> np.ndarray:
    """Quasi-uniform unit vectors in R^{dim+1}; with ``antipodal`` point ``i + n/2`` is ``-x_i``."""
    gen = fibonacci_sphere if dim == 2 else super_fibonacci
    if antipodal:
        if dim != 2 or n % 2:
            raise InvalidInput("antipodal samples need dim 2 and an even point count")
        # the first half of the Fibonacci lattice lies in the open upper hemisphere
        half = _rotate(gen(n)[: n // 2], seed)
        return np.vstack([half, -half])
    return _rotate(gen(n), seed)


def sample_sphere(dim: int, n: int, seed: int | None = 0, antipodal: bool = False) -> ManifoldSample:
    if dim not in (2, 3):
        raise InvalidInput(f"sphere dimension must be 2 or 3, got {dim}")
    if n < dim + 2:
        raise TooFewPoints(f"sphere{dim} needs at least {dim + 2} points, got {n}", n=n)
    X = sphere_points(dim, n, seed, antipodal)
    space = validate_metric(_geodesic_from_unit(X))
    probes = _rotate(fibonacci_sphere(20000) if dim == 2 else super_fibonacci(40000), 12345)
    return ManifoldSample(
        space, dim=dim, inj=math.pi, delta=1.0, diam_true=math.pi,
        fillrad_true=0.5 * math.acos(-1.0 / (dim + 1)), orientable=True,
        label=f"sphere{dim}(n={n}{', antipodal' if antipodal else ''})", seed=seed,
        mesh=_covering_radius(X, probes),
    )


def sample_flat_torus(L: float, l: float, nL: int, nl: int) -> SubmersionSample:
    """Grid sample of the flat torus ``S^1(L) x S^1(l)`` with projection onto the first factor."""
    if not (L >= l > 0):
        raise BadGrid(f"need L >= l > 0, got L={L!r}, l={l!r}")
    if nL < 3 or nl < 3:
        raise BadGrid(f"grid counts must be at least 3, got {nL} x {nl}")
    dx = _circle_metric(float(L), nL)
    dy = _circle_metric(float(l), nl)
    # point i * nl + j sits at (x_i, y_j)
    d = np.sqrt(np.kron(dx * dx, np.ones((nl, nl))) + np.kron(np.ones((nL, nL)), dy * dy))
    total = ManifoldSample(
        validate_metric(d), dim=2, inj=l / 2, delta=0.0,
        diam_true=math.hypot(L / 2, l / 2), fillrad_true=min(L, l) / 6, orientable=True,
        label=f"torus(L={L!r}, l={l!r}, {nL}x{nl})",
        mesh=0.5 * math.hypot(L / nL, l / nl), factor_fillrads=(L / 6, l / 6),
    )
    base = sample_circle(L, nL)
    proj = np.repeat(np.arange(nL), nl)
    return make_submersion(total, base, proj)


def quotient_metric(total: ManifoldSample, orbits, *, dim: int | None = None,
                    slack: float = DEFAULT_SLACK, **base_meta) -> tuple[ManifoldSample, SubmersionSample]:
    """Orbit space of a finite partition with ``d(O1, O2) = min d(x, y)`` over representatives.

    The min-distance is a metric only when the orbits are equidistant (as for
    orbits of an isometric group action); the result is validated and
    :class:`QuotientNotMetric` is raised otherwise.
    """
    orbits = [np.asarray(o, dtype=np.int64) for o in orbits]
    if any(len(o) == 0 for o in orbits):
        raise EmptyOrbit("orbits must be nonempty")
    flat = np.concatenate(orbits) if orbits else np.array([], dtype=np.int64)
    if len(flat) != total.n or not np.array_equal(np.sort(flat), np.arange(total.n)):
        raise InvalidInput("orbits must partition the sample indices")
    m = len(orbits)
    db = np.zeros((m, m))
    for a in range(m):
        rows = total.space.d[orbits[a]]
        for b in range(a + 1, m):
            db[a, b] = db[b, a] = rows[:, orbits[b]].min()
    try:
        bspace = validate_metric(db, slack)
    except TriangleViolation as exc:
        raise QuotientNotMetric(
            "orbit min-distance violates the triangle inequality; orbits are not equidistant",
            **exc.context,
        ) from exc
    base = ManifoldSample(
        bspace, dim=total.dim if dim is None else dim,
        label=base_meta.pop("label", f"quotient of {total.label} by {m} orbits"),
        seed=total.seed, **base_meta,
    )
    proj = np.empty(total.n, dtype=np.int64)
    for a, o in enumerate(orbits):
        proj[o] = a
    return base, make_submersion(total, base, proj)


def antipodal_orbits(n: int) -> list[np.ndarray]:
    half = n // 2
    return [np.array([i, i + half]) for i in range(half)]


def sample_rp2(n_pairs: int, seed: int | None = 0) -> tuple[ManifoldSample, SubmersionSample]:
    """Real projective plane as the antipodal quotient of an antipodal sphere sample.

    Returns the RP^2 sample and the submetry ``S^2 -> RP^2``.
    """
    sphere = sample_sphere(2, 2 * n_pairs, seed, antipodal=True)
    rp2, sub = quotient_metric(
        sphere, antipodal_orbits(sphere.n), dim=2,
        inj=math.pi / 2, delta=1.0, diam_true=math.pi / 2, fillrad_true=math.pi / 6,
        orientable=False, mesh=sphere.mesh, label=f"rp2(n={n_pairs})",
    )
    return rp2, sub


def chord_metric(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    return np.linalg.norm(X - Y, axis=-1)


def graph_geodesics(points, local_metric: Callable[[np.ndarray, np.ndarray], np.ndarray] = chord_metric,
                    k: int | None = None, dim: int = 1) -> FiniteMetricSpace:
    """All-pairs shortest paths on the symmetric k-nearest-neighbor graph.

    Neighbors are ranked by ``local_metric`` itself, which is evaluated on
    ``(m, D)`` arrays of endpoint pairs.  The default ``k`` is
    ``ceil(2 ln n) + dim``.
    """
    P = np.asarray(points, dtype=np.float64)
    n = len(P)
    if k is None:
        k = math.ceil(2 * math.log(max(n, 2))) + dim
    k = min(k, n - 1)
    if k < 1:
        raise InvalidInput("need at least two points and k >= 1")
    ii, jj = np.triu_indices(n, 1)
    w = np.zeros((n, n))
    w[ii, jj] = local_metric(P[ii], P[jj])
    w = w + w.T
    order = np.argsort(np.where(np.eye(n, dtype=bool), np.inf, w), axis=1, kind="stable")[:, :k]
    rows = np.repeat(np.arange(n), k)
    cols = order.ravel()
    adj = np.zeros((n, n), dtype=bool)
    adj[rows, cols] = True
    adj |= adj.T
    graph = csr_matrix(np.where(adj, w, 0.0))
    ncomp, _ = connected_components(graph, directed=False)
    if ncomp > 1:
        raise DisconnectedGraph(ncomp)
    d = shortest_path(graph, method="D", directed=False)
    d = np.minimum(d, d.T)
    np.fill_diagonal(d, 0.0)
    return validate_metric(d)


def hopf_lift(p: np.ndarray) -> np.ndarray:
    """A point of S^3 (as (Re z1, Im z1, Re z2, Im z2)) over each unit vector of S^2."""
    x, y, z = p[:, 0], p[:, 1], p[:, 2]
    z1 = np.sqrt((1.0 + z) / 2.0)
    z2 = (x - 1j * y) / (2.0 * z1)
    return np.column_stack([z1, np.zeros_like(z1), z2.real, z2.imag])


def _hopf_rotate(q: np.ndarray, theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    out = np.empty_like(q)
    out[:, 0] = c * q[:, 0] - s * q[:, 1]
    out[:, 1] = s * q[:, 0] + c * q[:, 1]
    out[:, 2] = c * q[:, 2] - s * q[:, 3]
    out[:, 3] = s * q[:, 2] + c * q[:, 3]
    return out


def berger_metric(a: float) -> Callable[[np.ndarray, np.ndarray], np.ndarray]:
    """Chord lengths with the Hopf-vertical component scaled by ``a``."""

    def metric(X, Y):
        v = Y - X
        m = X + Y
        m = m / np.linalg.norm(m, axis=-1, keepdims=True)
        vert = np.column_stack([-m[:, 1], m[:, 0], -m[:, 3], m[:, 2]])
        c = np.sum(v * vert, axis=-1)
        h = v - c[:, None] * vert
        return np.sqrt(a * a * c * c + np.sum(h * h, axis=-1))

    return metric


def sample_berger(a: float, n_base: int = 48, n_fiber: int = 12, seed: int | None = 0,
                  k: int | None = None) -> SubmersionSample:
    """Graph-geodesic sample of a Berger-type S^3 fibred over S^2(1/2) by Hopf circles."""
    if not a > 0:
        raise InvalidInput("Berger parameter must be positive")
    base_pts = _rotate(fibonacci_sphere(n_base), seed)
    lift = hopf_lift(base_pts)
    pts = np.vstack([_hopf_rotate(lift, 2 * math.pi * j / n_fiber) for j in range(n_fiber)])
    total_space = graph_geodesics(pts, berger_metric(a), k=k, dim=3)
    total = ManifoldSample(total_space, dim=3, label=f"berger(a={a!r}, {n_base}x{n_fiber})", seed=seed)
    bd = 0.5 * _geodesic_from_unit(base_pts)
    base = ManifoldSample(validate_metric(bd), dim=2, diam_true=math.pi / 2, label=f"S2(1/2), n={n_base}")
    proj = np.tile(np.arange(n_base), n_fiber)
    return make_submersion(total, base, proj)


def scale_sample(sample, c: float):
    """Rescale every length (and the curvature bound) of a sample by ``c``."""
    if isinstance(sample, SubmersionSample):
        return SubmersionSample(
            scale_sample(sample.total, c), scale_sample(sample.base, c), sample.proj,
            sample.fibers, sample.rho0 * c, sample.epsilon * c,
        )

    def mul(x):
        return None if x is None else x * c

    return replace(
        sample,
        space=scale_metric(sample.space, c),
        inj=mul(sample.inj),
        delta=None if sample.delta is None else sample.delta / (c * c),
        diam_true=mul(sample.diam_true),
        fillrad_true=mul(sample.fillrad_true),
        epsilon=sample.epsilon * c,
        mesh=mul(sample.mesh),
        factor_fillrads=None if sample.factor_fillrads is None else tuple(x * c for x in sample.factor_fillrads),
        label=f"{sample.label} x {c!r}",
    )
