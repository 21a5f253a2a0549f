"""End-to-end scenarios run by ``fillrad suite``: one in-memory pipeline per manifold."""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import _io, bounds, constructions, samplers
from .errors import FillradError
from .metric_core import kuratowski_embed
from .persistence import estimate_fillrad, scaling_check

THREADS_ENV = "FILLRAD_THREADS"


def thread_count() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw:
        return max(1, int(raw))
    try:
        return max(1, len(os.sched_getaffinity(0)))
    except AttributeError:
        return os.cpu_count() or 1


@dataclass
class Check:
    name: str
    passed: bool
    value: float | None = None
    target: str = ""

    def to_json(self) -> dict:
        return {"name": self.name, "passed": bool(self.passed), "value": self.value, "target": self.target}


@dataclass
class ScenarioResult:
    name: str
    checks: list[Check] = field(default_factory=list)
    artifacts: dict[str, dict] = field(default_factory=dict)
    error: dict | None = None
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return self.error is None and all(c.passed for c in self.checks)

    def summary(self) -> dict:
        # runtimes are left out so that artifacts are reproducible byte for byte
        return {"scenario": self.name, "passed": self.passed, "checks": [c.to_json() for c in self.checks],
                "error": self.error}


def reach_pairs(space, count: int, seed: int) -> list[tuple[int, int]]:
    """Pairs ``(p, q)`` with ``q`` the j-th nearest neighbor of a random ``p``, j = count..1.

    The last pair realizes the smallest distance from ``p``, so the witnesses
    run down to the sampling scale.
    """
    rng = np.random.default_rng(seed)
    pairs = []
    for j in range(count, 0, -1):
        p = int(rng.integers(space.n))
        order = np.argsort(space.d[p], kind="stable")
        pairs.append((p, int(order[min(j, space.n - 1)])))
    return pairs


def projection_cases(space, count: int, seed: int) -> list[tuple[int, float]]:
    rng = np.random.default_rng(seed)
    pos = space.d[space.d > 0]
    lo, hi = float(pos.min()), float(pos.max())
    return [(int(rng.integers(space.n)), float(np.exp(rng.uniform(math.log(lo), math.log(hi)))))
            for _ in range(count)]


def retraction_points(n: int, count: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return np.sort(rng.choice(n, size=min(count, n), replace=False))


def _within(name, value, target, rel):
    return Check(name, abs(value - target) <= rel * abs(target), value, f"{target!r} within {rel:.0%}")


def _bounds_checks(res: ScenarioResult, sample, est) -> None:
    report = bounds.check_bounds(sample, est)
    res.artifacts["bounds"] = report.to_json()
    for v in report.verdicts:
        res.checks.append(Check(f"bound:{v.name}", v.passed, v.residual, f"residual <= {v.tolerance!r}"))


def _negative_control(res: ScenarioResult, sample, est, **corrupt) -> None:
    """A report built from corrupted metadata must fail its lower-bound verdict."""
    report = bounds.check_bounds(replace(sample, **corrupt), est)
    (lb,) = [v for v in report.verdicts if v.name == "lower_bound"]
    res.checks.append(Check("negative_control", not lb.passed and not report.passed, lb.residual,
                            f"lower bound rejected with {corrupt}"))


def _sample_artifact(sample) -> dict:
    return sample.metadata()


def scenario_circle(seed: int = 0) -> ScenarioResult:
    res = ScenarioResult("circle")
    s = samplers.sample_circle(2 * math.pi, 128)
    res.artifacts["sample"] = _sample_artifact(s)
    est = estimate_fillrad(s, 1)
    res.artifacts["estimate"] = est.to_json()
    target = math.pi / 3
    res.checks.append(Check("estimate", abs(est.estimate - target) <= 0.05, est.estimate, "pi/3 +- 0.05"))
    res.checks.append(_within("katz_tightness", est.estimate, bounds.katz_bound(math.pi), 0.05))
    _bounds_checks(res, s, est)
    _negative_control(res, s, est, inj=3 * s.inj)
    frame = kuratowski_embed(s.space)
    audit = constructions.retraction_audit(frame, 0.9 * math.pi / 4, retraction_points(s.n, 50, seed), seed=seed)
    res.artifacts["retraction"] = audit
    res.checks.append(Check("retraction_fixed_points", audit["fixed_point_fraction"] == 1.0,
                            audit["fixed_point_fraction"], "1.0"))
    reach = constructions.reach_audit(frame, reach_pairs(s.space, 20, seed))
    res.artifacts["reach"] = reach
    res.checks.append(Check("reach_witnesses", reach["violation_count"] == 0, reach["max_residual"], "0 violations"))
    proj = constructions.projection_audit(frame, projection_cases(s.space, 20, seed))
    res.artifacts["projection"] = proj
    res.checks.append(Check("unique_projection", proj["violation_count"] == 0, proj["max_residual"], "0 violations"))
    sc = scaling_check(s, 2.0, 1)
    res.artifacts["scaling"] = sc
    res.checks.append(Check("scaling_c2", sc["passed"], sc["relative_error"], "rel <= 1e-9"))
    scaled = samplers.scale_sample(s, 2.0)
    lip = bounds.lipschitz_comparison(s, scaled, np.arange(s.n), 1, surjective=True)
    res.artifacts["lipschitz"] = lip
    res.checks.append(Check("lipschitz_dilation", lip["dilation"] == 2.0, lip["dilation"], "2.0"))
    res.checks.append(Check("lipschitz_tight", lip["tight"] and lip["passed"], lip["slack"], "0"))
    return res


def scenario_sphere2(seed: int = 0) -> ScenarioResult:
    res = ScenarioResult("sphere2")
    s = samplers.sample_sphere(2, 150, seed)
    res.artifacts["sample"] = _sample_artifact(s)
    est = estimate_fillrad(s, 2)
    res.artifacts["estimate"] = est.to_json()
    res.checks.append(_within("estimate", est.estimate, 0.5 * math.acos(-1 / 3), 0.10))
    _bounds_checks(res, s, est)
    # on the unit sphere the curvature term caps the bound, so it is corrupted alongside inj
    _negative_control(res, s, est, inj=3 * s.inj, delta=s.delta / 9)
    frame = kuratowski_embed(s.space)
    audit = constructions.retraction_audit(frame, 0.9 * math.pi / 4, retraction_points(s.n, 50, seed), seed=seed)
    res.artifacts["retraction"] = audit
    res.checks.append(Check("retraction_fixed_points", audit["fixed_point_fraction"] == 1.0,
                            audit["fixed_point_fraction"], "1.0"))
    proj = constructions.projection_audit(frame, projection_cases(s.space, 20, seed))
    res.artifacts["projection"] = proj
    res.checks.append(Check("unique_projection", proj["violation_count"] == 0, proj["max_residual"], "0 violations"))
    return res


def scenario_torus(seed: int = 0) -> ScenarioResult:
    res = ScenarioResult("torus")
    sub = samplers.sample_flat_torus(2 * math.pi, 1.2 * math.pi, 32, 20)
    res.artifacts["sample"] = _sample_artifact(sub.total)
    est = estimate_fillrad(sub, 2)
    res.artifacts["estimate"] = est.to_json()
    res.checks.append(_within("estimate", est.estimate, 0.2 * math.pi, 0.10))
    _bounds_checks(res, sub, est)
    audit = constructions.cylinder_audit(sub)
    res.artifacts["cylinder"] = audit
    res.checks.append(Check("cylinder", audit["violation_count"] == 0, audit["max_residual"], "0 violations"))
    return res


def scenario_rp2(seed: int = 0) -> ScenarioResult:
    res = ScenarioResult("rp2")
    rp2, _ = samplers.sample_rp2(100, seed)
    res.artifacts["sample"] = _sample_artifact(rp2)
    est = estimate_fillrad(rp2, 2)
    res.artifacts["estimate"] = est.to_json()
    _bounds_checks(res, rp2, est)
    return res


def scenario_quotient(seed: int = 0) -> ScenarioResult:
    res = ScenarioResult("quotient")
    _, sub = samplers.sample_rp2(75, seed)
    res.artifacts["sample"] = _sample_artifact(sub.total)
    est = estimate_fillrad(sub, 2)
    res.artifacts["estimate"] = est.to_json()
    _bounds_checks(res, sub, est)
    audit = constructions.cylinder_audit(sub)
    res.artifacts["cylinder"] = audit
    res.checks.append(Check("cylinder", audit["violation_count"] == 0, audit["max_residual"], "0 violations"))
    return res


SCENARIOS = {
    "circle": scenario_circle,
    "sphere2": scenario_sphere2,
    "torus": scenario_torus,
    "rp2": scenario_rp2,
    "quotient": scenario_quotient,
}


def _run_one(name: str, seed: int) -> ScenarioResult:
    t0 = time.perf_counter()
    try:
        res = SCENARIOS[name](seed)
    except FillradError as exc:
        res = ScenarioResult(name, error=exc.to_record())
    res.seconds = time.perf_counter() - t0
    return res


def run_suite(names=None, seed: int = 0, threads: int | None = None) -> list[ScenarioResult]:
    names = list(SCENARIOS) if names is None else list(names)
    threads = thread_count() if threads is None else threads
    if threads <= 1:
        return [_run_one(n, seed) for n in names]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda n: _run_one(n, seed), names))


def write_results(results: list[ScenarioResult], out_dir) -> None:
    out_dir = Path(out_dir)
    for res in results:
        for kind, payload in res.artifacts.items():
            _io.atomic_write_json(out_dir / res.name / f"{kind}.json", payload)
        _io.atomic_write_json(out_dir / res.name / "report.json", res.summary())
    _io.atomic_write_json(out_dir / "suite.json", {
        "passed": all(r.passed for r in results),
        "scenarios": [r.summary() for r in results],
    })

