"""Closed-form filling-radius bounds and their cross-check against persistence estimates."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _io
from .errors import DimensionNotExceeded, HypothesisNotMet, InvalidInput, NonpositiveInjectivityRadius
from .metric_core import FiniteMetricSpace
from .persistence import EstimatorConfig, FillRadEstimate, estimate_fillrad
from .samplers import ManifoldSample, SubmersionSample, fiber_diameters


def lower_bound(inj: float, delta: float) -> float:
    """``min(inj, pi / sqrt(delta)) / 4``; ``delta == 0`` makes the curvature term infinite."""
    if inj is None or not inj > 0:
        raise NonpositiveInjectivityRadius(f"injectivity radius must be positive, got {inj!r}", inj=inj)
    if delta is None or delta < 0:
        raise InvalidInput(f"curvature bound must be nonnegative, got {delta!r}")
    curvature_term = math.pi / math.sqrt(delta) if delta > 0 else math.inf
    return 0.25 * min(inj, curvature_term)


def katz_bound(diam: float) -> float:
    if not diam > 0:
        raise InvalidInput(f"diameter must be positive, got {diam!r}")
    return diam / 3.0


def submersion_bound(sub: SubmersionSample) -> float:
    diams = fiber_diameters(sub.total.space, sub.fibers)
    if all(len(f) < 2 for f in sub.fibers) and sub.total.dim <= sub.base.dim:
        raise DimensionNotExceeded(
            "every fiber is a single point and the total space does not exceed the base dimension",
            total_dim=sub.total.dim, base_dim=sub.base.dim,
        )
    return 0.5 * float(diams.max())


def warped_product_bound(fillrad_base: float, max_warp: float, diam_fiber: float) -> float:
    if not (fillrad_base > 0 and max_warp > 0 and diam_fiber > 0):
        raise InvalidInput("warped-product inputs must be positive")
    return min(fillrad_base, 0.5 * max_warp * diam_fiber)


def product_fillrad(fr1: float, fr2: float) -> float:
    if not (fr1 > 0 and fr2 > 0):
        raise InvalidInput("factor filling radii must be positive")
    return min(fr1, fr2)


def dilation(mapping, X: FiniteMetricSpace, Y: FiniteMetricSpace) -> float:
    """Largest distance ratio ``d_Y(f p, f q) / d_X(p, q)`` over pairs ``p != q``."""
    m = np.asarray(mapping, dtype=np.int64)
    if m.shape != (X.n,):
        raise InvalidInput(f"map must be defined on all {X.n} points of the domain")
    if X.n < 2:
        return 0.0
    ii, jj = np.triu_indices(X.n, 1)
    return float(np.max(Y.d[m[ii], m[jj]] / X.d[ii, jj]))


def _manifold(sample) -> ManifoldSample:
    return sample.total if isinstance(sample, SubmersionSample) else sample


def estimator_tolerance(sample) -> float:
    """Resolution of a half-death estimate on this sample.

    Uses the sample's Hausdorff distance to the manifold when known (stability
    moves each bar endpoint by at most twice that), else half the largest
    nearest-neighbor gap.
    """
    m = _manifold(sample)
    if m.mesh is not None:
        return float(m.mesh)
    if m.n < 2:
        return 0.0
    d = m.space.d + np.diag(np.full(m.n, np.inf))
    return 0.5 * float(d.min(axis=1).max())


def _diameter(m: ManifoldSample) -> float:
    return m.diam_true if m.diam_true is not None else m.space.diameter


def upper_bounds(sample) -> dict[str, float]:
    m = _manifold(sample)
    out = {}
    if m.n >= 2:
        out["katz"] = katz_bound(_diameter(m))
    if isinstance(sample, SubmersionSample):
        try:
            out["submersion"] = submersion_bound(sample)
        except DimensionNotExceeded:
            pass
        if m.factor_fillrads and sample.base.fillrad_true is not None:
            # a Riemannian product is a warped product with warping function 1
            diam_fiber = float(fiber_diameters(m.space, sample.fibers).max())
            out["warped"] = warped_product_bound(sample.base.fillrad_true, 1.0, diam_fiber)
    if m.factor_fillrads:
        out["product"] = product_fillrad(*m.factor_fillrads)
    return out


def best_upper_bound(sample) -> float | None:
    ub = upper_bounds(sample)
    return min(ub.values()) if ub else None


@dataclass(frozen=True)
class Verdict:
    name: str
    # "lower": value <= estimate; "upper": estimate <= value; "equal": |estimate - value|;
    # "combined": metadata-only inequality lhs <= rhs
    kind: str
    value: float
    passed: bool
    residual: float
    tolerance: float
    reference: float | None = None

    def to_json(self) -> dict:
        return {"name": self.name, "kind": self.kind, "value": self.value, "reference": self.reference,
                "passed": self.passed, "residual": self.residual, "tolerance": self.tolerance}


def _verdict(name, kind, value, estimate, tol, reference=None) -> Verdict:
    if kind == "lower":
        residual = value - estimate
    elif kind == "upper":
        residual = estimate - value
    elif kind == "equal":
        residual = abs(estimate - value)
    elif kind == "combined":
        residual = value - reference
    else:
        raise ValueError(kind)
    return Verdict(name, kind, value, bool(residual <= tol), residual, tol, reference)


@dataclass(frozen=True)
class BoundReport:
    label: str
    estimate: FillRadEstimate
    lower: float | None
    katz: float | None
    submersion: float | None = None
    warped: float | None = None
    product: float | None = None
    known: float | None = None
    inj: float | None = None
    delta: float | None = None
    epsilon: float = 0.0
    estimator_tol: float = 0.0
    max_fiber_diameter: float | None = None
    verdicts: tuple[Verdict, ...] = field(default=())

    @property
    def tolerance(self) -> float:
        return self.epsilon + self.estimator_tol

    @property
    def passed(self) -> bool:
        return all(v.passed for v in self.verdicts)

    def to_json(self) -> dict:
        return {
            "label": self.label,
            "estimate": self.estimate.to_json(),
            "lower": self.lower,
            "katz": self.katz,
            "submersion": self.submersion,
            "warped": self.warped,
            "product": self.product,
            "known": self.known,
            "inputs": {"inj": self.inj, "delta": self.delta, "max_fiber_diameter": self.max_fiber_diameter},
            "tolerance": {"epsilon": self.epsilon, "estimator": self.estimator_tol, "total": self.tolerance},
            "verdicts": [v.to_json() for v in self.verdicts],
            "passed": self.passed,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "BoundReport":
        f = _io.from_jsonable_float
        verdicts = tuple(
            Verdict(v["name"], v["kind"], f(v["value"]), bool(v["passed"]), f(v["residual"]),
                    f(v["tolerance"]), f(v.get("reference")))
            for v in obj["verdicts"]
        )
        inputs = obj.get("inputs", {})
        tol = obj["tolerance"]
        return cls(
            label=obj["label"], estimate=FillRadEstimate.from_json(obj["estimate"]),
            lower=f(obj["lower"]), katz=f(obj["katz"]), submersion=f(obj["submersion"]),
            warped=f(obj["warped"]), product=f(obj["product"]), known=f(obj["known"]),
            inj=f(inputs.get("inj")), delta=f(inputs.get("delta")),
            max_fiber_diameter=f(inputs.get("max_fiber_diameter")),
            epsilon=f(tol["epsilon"]), estimator_tol=f(tol["estimator"]), verdicts=verdicts,
        )


def _verdicts_for(report: BoundReport) -> tuple[Verdict, ...]:
    est = report.estimate.estimate
    tol = report.tolerance
    out = []
    if report.lower is not None:
        out.append(_verdict("lower_bound", "lower", report.lower, est, tol))
    for name in ("katz", "submersion", "warped"):
        value = getattr(report, name)
        if value is not None:
            out.append(_verdict(name, "upper", value, est, tol))
    if report.product is not None:
        out.append(_verdict("product", "equal", report.product, est, tol))
    if report.known is not None:
        out.append(_verdict("known", "equal", report.known, est, tol))
    if report.max_fiber_diameter is not None and report.inj is not None and report.delta is not None:
        # 1/2 min{inj, pi/sqrt(delta)} <= max fiber diameter, from metadata alone
        lhs = 2.0 * lower_bound(report.inj, report.delta)
        out.append(_verdict("combined", "combined", lhs, est, report.epsilon, report.max_fiber_diameter))
    return tuple(out)


def recheck(report: BoundReport) -> BoundReport:
    """Recompute every verdict from the numbers stored in the report."""
    return BoundReport(**{**report.__dict__, "verdicts": _verdicts_for(report)})


def check_bounds(sample, estimate: FillRadEstimate, estimator_tol: float | None = None) -> BoundReport:
    m = _manifold(sample)
    lower = None
    if m.inj is not None and m.delta is not None:
        lower = lower_bound(m.inj, m.delta)
    ub = upper_bounds(sample)
    max_fd = None
    eps = m.epsilon
    if isinstance(sample, SubmersionSample):
        max_fd = float(fiber_diameters(m.space, sample.fibers).max())
        eps = sample.epsilon
    report = BoundReport(
        label=m.label or estimate.label,
        estimate=estimate,
        lower=lower,
        katz=ub.get("katz"),
        submersion=ub.get("submersion"),
        warped=ub.get("warped"),
        product=ub.get("product"),
        known=m.fillrad_true,
        inj=m.inj,
        delta=m.delta,
        epsilon=float(eps),
        estimator_tol=estimator_tolerance(sample) if estimator_tol is None else float(estimator_tol),
        max_fiber_diameter=max_fd,
    )
    return recheck(report)


def render_table(report: BoundReport) -> str:
    rows = [("bound", "value", "compared", "residual", "tol", "verdict")]
    for v in report.verdicts:
        other = v.reference if v.kind == "combined" else report.estimate.estimate
        rows.append((v.name, f"{v.value:.6f}", f"{other:.6f}",
                     f"{v.residual:+.6f}", f"{v.tolerance:.6f}", "pass" if v.passed else "FAIL"))
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    lines = [f"{report.label}"]
    for r in rows:
        lines.append("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip())
    return "\n".join(lines)


def lipschitz_comparison(X: ManifoldSample, Y: ManifoldSample, mapping, k: int, surjective: bool,
                         config: EstimatorConfig | None = None, tol: float | None = None) -> dict:
    """Check ``fillrad_k(X) >= fillrad_k(Y) / dil(f)`` for a map onto ``H_k``.

    Surjectivity on ``H_k`` is not computed; the caller asserts it and the
    comparison refuses to run without that assertion.
    """
    if not surjective:
        raise HypothesisNotMet(
            "the map must induce a surjection on degree-k homology; comparison not applicable",
            k=k,
        )
    C = dilation(mapping, X.space, Y.space)
    ex = estimate_fillrad(X, k, config)
    ey = estimate_fillrad(Y, k, config)
    if tol is None:
        tol = estimator_tolerance(X) + (estimator_tolerance(Y) / C if C > 0 else 0.0)
    rhs = ey.estimate / C if C > 0 else 0.0
    return {
        "k": k,
        "dilation": C,
        "estimate_domain": ex.estimate,
        "estimate_codomain": ey.estimate,
        "rhs": rhs,
        "slack": ex.estimate - rhs,
        "tolerance": tol,
        "tight": ex.estimate == rhs,
        "passed": ex.estimate >= rhs - tol,
    }
