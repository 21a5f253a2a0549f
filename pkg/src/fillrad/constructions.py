"""Finite-scale versions of the constructive steps behind the filling-radius bounds.

* a discrete Fréchet-mean retraction from a sup-norm neighborhood back onto the sample,
* the mapping-cylinder homotopy ``d_p^t`` between Kuratowski rows and shifted base functions,
* witnesses that the Kuratowski image has zero reach, and that a shifted row
  projects uniquely.

Every audit returns a JSON-ready dict with the keys ``construct``,
``parameters``, ``violations``, ``max_residual`` and ``epsilon_used``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyVicinity, InvalidInput, StrictlyCloserPoint
from .metric_core import (
    KuratowskiFrame,
    as_function,
    exact_abs_diff_le,
    row_distances,
    vicinity_set,
)
from .samplers import SubmersionSample

MAX_WITNESSES = 100


def _audit(construct: str, parameters: dict, violations: list, max_residual: float,
           epsilon_used: float, **extra) -> dict:
    out = {
        "construct": construct,
        "parameters": parameters,
        "violations": violations[:MAX_WITNESSES],
        "violation_count": len(violations),
        "max_residual": float(max_residual),
        "epsilon_used": float(epsilon_used),
    }
    out.update(extra)
    return out


# --- retraction -------------------------------------------------------------


@dataclass(frozen=True)
class FrechetProblem:
    frame: KuratowskiFrame
    f: np.ndarray = field(repr=False)
    R: float
    members: np.ndarray

    @property
    def weights(self) -> np.ndarray:
        return np.full(len(self.members), 1.0 / len(self.members))

    def energy(self) -> np.ndarray:
        """``F_2(q) = (1 / 2|A|) * sum_{p in A} d(p, q)^2`` for every sample point ``q``."""
        sq = self.frame.vectors[self.members] ** 2
        return sq.sum(axis=0) / (2.0 * len(self.members))


def frechet_problem(frame: KuratowskiFrame, f, R: float) -> FrechetProblem:
    vs = vicinity_set(frame, f, R)
    if len(vs) == 0:
        raise EmptyVicinity(f"no sample point lies within sup-distance {R!r} of f", R=R)
    return FrechetProblem(frame, vs.f, vs.R, vs.members)


def frechet_retract(frame: KuratowskiFrame, f, R: float) -> int:
    """Sample point minimizing the mean squared distance to the vicinity set of ``f``.

    The minimum is taken over all sample points; ties go to the smallest index.
    """
    return int(np.argmin(frechet_problem(frame, f, R).energy()))


def retraction_audit(frame: KuratowskiFrame, R: float, points=None, *, n_continuity: int = 50,
                     eta: float | None = None, seed: int = 0) -> dict:
    """Fixed-point rate of the retraction on Kuratowski rows plus a continuity probe.

    The continuity probe draws ``f`` near a row and ``g`` with ``‖f - g‖∞ <= eta``
    and records how far apart their retracted points land.
    """
    d = frame.vectors
    points = np.arange(frame.n) if points is None else np.asarray(points, dtype=np.int64)
    violations = []
    residual = 0.0
    for p in points:
        q = frechet_retract(frame, d[p], R)
        if q != p:
            violations.append({"p": int(p), "retracted": q, "distance": float(d[p, q])})
            residual = max(residual, float(d[p, q]))
    eta = R / 4.0 if eta is None else float(eta)
    rng = np.random.default_rng(seed)
    jumps = []
    for _ in range(n_continuity if frame.n else 0):
        p = int(rng.integers(frame.n))
        f = d[p] + rng.uniform(-eta / 2, eta / 2, frame.n)
        g = f + rng.uniform(-eta, eta, frame.n)
        try:
            a, b = frechet_retract(frame, f, R), frechet_retract(frame, g, R)
        except EmptyVicinity:
            continue
        jumps.append(float(d[a, b]))
    fraction = 1.0 - len(violations) / len(points) if len(points) else 1.0
    return _audit(
        "retraction",
        {"R": float(R), "points": len(points), "n_continuity": n_continuity, "eta": eta, "seed": seed},
        violations, residual, 0.0,
        fixed_point_fraction=fraction,
        continuity={"samples": len(jumps), "max_jump": max(jumps, default=0.0),
                    "mean_jump": float(np.mean(jumps)) if jumps else 0.0},
    )


# --- mapping cylinder -------------------------------------------------------


def shifted_base_function(sub: SubmersionSample, b: int) -> np.ndarray:
    """``f_b(z) = d_B(b, proj(z)) + rho0`` over the total sample."""
    return sub.base.space.d[b, sub.proj] + sub.rho0


def _step_within(dp: np.ndarray, t: float, sign: float) -> np.ndarray:
    """``dp + sign * t`` rounded toward ``dp`` so that ``|result - dp| <= t`` holds exactly."""
    s = dp + sign * t
    for _ in range(4):
        bad = ~exact_abs_diff_le(s, dp, t)
        if not bad.any():
            return s
        s = np.where(bad, np.nextafter(s, dp), s)
    raise ArithmeticError("directed rounding did not converge")


def _cylinder_values(dp: np.ndarray, fb: np.ndarray, t: float) -> np.ndarray:
    # f_b itself whenever it is within t of dist_p exactly, else the rounded step toward it
    reach = exact_abs_diff_le(fb, dp, t)
    step = np.where(dp < fb, _step_within(dp, t, 1.0), _step_within(dp, t, -1.0))
    return np.where(reach, fb, step)


@dataclass(frozen=True)
class CylinderFunction:
    sub: SubmersionSample = field(repr=False)
    p: int
    t: float
    values: np.ndarray = field(repr=False)


def cylinder_function(sub: SubmersionSample, p: int, t: float) -> CylinderFunction:
    """``d_p^t``: moves ``dist_p`` toward ``f_{proj(p)}`` by at most ``t`` at every point."""
    if not t >= 0:
        raise InvalidInput(f"t must be nonnegative, got {t!r}", t=t)
    dp = sub.total.space.d[p]
    fb = shifted_base_function(sub, int(sub.proj[p]))
    return CylinderFunction(sub, int(p), float(t), _cylinder_values(dp, fb, float(t)))


def cylinder_audit(sub: SubmersionSample, t_grid=None, points: int = 16) -> dict:
    """Check the cylinder homotopy for every total point and every ``t`` of the grid.

    Checked properties, with ``(p, t, z)`` witnesses on failure:

    * ``|d_p^t(z) - dist_p(z)| <= t`` in exact arithmetic,
    * ``|d_p^rho0 - f_b| <= epsilon`` at the top of the grid, where epsilon is the
      sample slack plus one unit in the last place of ``f_b``,
    * ``‖d_p^t - f_b‖∞`` nonincreasing in ``t``,
    * ``‖d_p^t - d_p^t'‖∞ <= |t - t'|`` up to four ulps,
    * at ``dist_p(z) == f_b(z)`` the value is ``f_b(z)``.
    """
    D = sub.total.space.d
    n = D.shape[0]
    if t_grid is None:
        t_grid = np.linspace(0.0, sub.rho0, points)
    t_grid = np.sort(np.asarray(t_grid, dtype=np.float64))
    if t_grid.size and t_grid[0] < 0:
        raise InvalidInput("t grid must be nonnegative")
    FB = sub.base.space.d[np.ix_(sub.proj, sub.proj)] + sub.rho0  # row p is f_{proj(p)}
    # f_b is a rounded sum, so the endpoint identity can only hold up to its last bit
    eps = float(sub.epsilon) + (float(np.spacing(FB).max()) if n else 0.0)
    violations = []
    residual = 0.0
    prev_vals = None
    prev_t = None
    prev_gap = None
    ulp_scale = 4.0 * np.finfo(np.float64).eps

    def witness(kind, mask, t, amount):
        for p, z in zip(*np.nonzero(mask)):
            violations.append({"check": kind, "p": int(p), "t": float(t), "z": int(z),
                               "amount": float(amount[p, z])})

    for t in t_grid:
        V = _cylinder_values(D, FB, float(t))
        bad = ~exact_abs_diff_le(V, D, t)
        if bad.any():
            witness("displacement", bad, t, np.abs(V - D) - t)
        tie = (D == FB) & (V != FB)
        if tie.any():
            witness("case_boundary", tie, t, np.abs(V - FB))
        gap = np.abs(V - FB).max(axis=1)
        if prev_gap is not None:
            inc = gap > prev_gap
            for p in np.flatnonzero(inc):
                violations.append({"check": "monotone", "p": int(p), "t": float(t), "z": None,
                                   "amount": float(gap[p] - prev_gap[p])})
        if prev_vals is not None:
            excess = np.abs(V - prev_vals) - (t - prev_t)
            allowed = ulp_scale * np.maximum(np.abs(V), t)
            lip = excess > allowed
            if lip.any():
                witness("lipschitz", lip, t, excess)
        prev_vals, prev_t, prev_gap = V, float(t), gap
    top = None
    if t_grid.size and t_grid[-1] == sub.rho0:
        top = np.abs(prev_vals - FB)
        residual = float(top.max()) if n else 0.0
        far = top > eps
        if far.any():
            witness("endpoint", far, sub.rho0, top - eps)
    return _audit(
        "cylinder",
        {"points": n, "grid": [float(t) for t in t_grid], "rho0": float(sub.rho0)},
        violations, residual, eps,
    )


# --- reach ------------------------------------------------------------------


REACH_TOL = 1e-12


@dataclass(frozen=True)
class ReachWitness:
    p: int
    q: int
    delta: float
    f: np.ndarray = field(repr=False)
    half_delta: float
    dist_to_p: float
    dist_to_q: float
    # smallest sup-distance from f to any sample row
    nearest_row: float

    @property
    def is_kuratowski_row(self) -> bool:
        return bool(self.f.min() == 0.0)

    def to_json(self) -> dict:
        return {"p": self.p, "q": self.q, "delta": self.delta, "half_delta": self.half_delta,
                "dist_to_p": self.dist_to_p, "dist_to_q": self.dist_to_q, "nearest_row": self.nearest_row,
                "min_f": float(self.f.min())}


def reach_probe(frame: KuratowskiFrame, p: int, q: int, tol: float = REACH_TOL) -> ReachWitness:
    """Average of two rows: equidistant (``delta / 2``) from both, and no row is closer."""
    if p == q:
        raise InvalidInput("reach probe needs two distinct points", p=p, q=q)
    dp, dq = frame.row(p), frame.row(q)
    delta = float(dp[q])
    f = 0.5 * (dp + dq)
    rd = row_distances(frame, f)
    half = 0.5 * delta
    closer = np.flatnonzero(rd < half - tol)
    if closer.size:
        r = int(closer[np.argmin(rd[closer])])
        raise StrictlyCloserPoint(
            f"row {r} is at sup-distance {rd[r]!r} < {half!r} from the midpoint of rows {p} and {q}",
            r=r, p=p, q=q, distance=float(rd[r]), half_delta=half,
        )
    return ReachWitness(int(p), int(q), delta, f, half, float(rd[p]), float(rd[q]), float(rd.min()))


def reach_audit(frame: KuratowskiFrame, pairs, tol: float = REACH_TOL) -> dict:
    violations = []
    residual = 0.0
    witnesses = []
    for p, q in pairs:
        try:
            w = reach_probe(frame, int(p), int(q), tol)
        except StrictlyCloserPoint as exc:
            violations.append({"check": "strictly_closer", "p": int(p), "q": int(q), **exc.context})
            continue
        res = max(abs(w.dist_to_p - w.half_delta), abs(w.dist_to_q - w.half_delta))
        residual = max(residual, res)
        if res > tol:
            violations.append({"check": "equidistance", "p": w.p, "q": w.q, "amount": res})
        if w.is_kuratowski_row:
            violations.append({"check": "is_row", "p": w.p, "q": w.q, "amount": 0.0})
        witnesses.append(w.to_json())
    return _audit("reach", {"pairs": len(witnesses) + len(violations), "tol": tol}, violations, residual,
                  tol, witnesses=witnesses)


@dataclass(frozen=True)
class ProjectionWitness:
    p: int
    delta: float
    f: np.ndarray = field(repr=False)
    # sup-distance from f to every row
    distances: np.ndarray = field(repr=False)
    residual: float

    @property
    def nearest(self) -> int:
        return int(np.argmin(self.distances))

    @property
    def margin(self) -> float:
        """Gap between the nearest and second-nearest rows."""
        if self.distances.size < 2:
            return float("inf")
        return float(np.partition(self.distances, 1)[1] - self.distances.min())

    def to_json(self) -> dict:
        return {"p": self.p, "delta": self.delta, "nearest": self.nearest, "margin": self.margin,
                "residual": self.residual}


def unique_projection_witness(frame: KuratowskiFrame, p: int, delta: float,
                              tol: float = REACH_TOL) -> ProjectionWitness:
    """``f = dist_p + delta`` has ``p`` as its unique nearest row.

    Checks ``‖f - dist_p‖∞ = delta`` and ``‖f - dist_q‖∞ = delta + d(p, q)`` for
    every ``q != p``, to ``tol`` scaled by the magnitudes involved.
    """
    if not delta > 0:
        raise InvalidInput(f"delta must be positive, got {delta!r}", delta=delta)
    dp = frame.row(p)
    f = as_function(dp + delta)
    dist = row_distances(frame, f)
    expected = delta + dp
    scale = np.maximum(1.0, expected)
    residual = float(np.max(np.abs(dist - expected) / scale))
    if residual > tol:
        bad = int(np.argmax(np.abs(dist - expected) / scale))
        raise ArithmeticError(f"shift identity fails at row {bad}: {dist[bad]!r} vs {expected[bad]!r}")
    others = np.delete(dist, p)
    if others.size and not others.min() > dist[p]:
        raise ArithmeticError(f"row {p} is not the unique nearest row of its shift")
    return ProjectionWitness(int(p), float(delta), f, dist, residual)


def projection_audit(frame: KuratowskiFrame, cases, tol: float = REACH_TOL) -> dict:
    violations = []
    residual = 0.0
    witnesses = []
    for p, delta in cases:
        try:
            w = unique_projection_witness(frame, int(p), float(delta), tol)
        except ArithmeticError as exc:
            violations.append({"check": "unique_projection", "p": int(p), "delta": float(delta),
                               "message": str(exc)})
            continue
        residual = max(residual, w.residual)
        witnesses.append(w.to_json())
    return _audit("projection", {"cases": len(witnesses) + len(violations), "tol": tol}, violations,
                  residual, tol, witnesses=witnesses)

