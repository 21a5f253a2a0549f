import json
import math
from dataclasses import replace

import numpy as np
import pytest

from fillrad import errors
from fillrad.bounds import (
    BoundReport,
    best_upper_bound,
    check_bounds,
    dilation,
    estimator_tolerance,
    katz_bound,
    lipschitz_comparison,
    lower_bound,
    product_fillrad,
    recheck,
    render_table,
    submersion_bound,
    upper_bounds,
    warped_product_bound,
)
from fillrad.metric_core import validate_metric
from fillrad.persistence import estimate_fillrad
from fillrad.samplers import quotient_metric, sample_circle, sample_sphere, scale_sample


@pytest.fixture(scope="module")
def sphere_estimate(sphere150):
    return estimate_fillrad(sphere150, 2)


@pytest.mark.parametrize(
    "inj, delta, expected",
    [(math.pi, 1.0, math.pi / 4), (math.pi, 0.0, math.pi / 4), (0.2, 100.0, 0.05), (4.0, 4.0, math.pi / 8)],
)
def test_lower_bound_examples(inj, delta, expected):
    assert lower_bound(inj, delta) == pytest.approx(expected)


def test_lower_bound_rejects():
    with pytest.raises(errors.NonpositiveInjectivityRadius):
        lower_bound(0.0, 1.0)
    with pytest.raises(errors.InvalidInput):
        lower_bound(1.0, -1.0)


def test_closed_form_bounds():
    assert katz_bound(math.pi) == pytest.approx(math.pi / 3)
    assert warped_product_bound(math.pi / 3, 1.0, 2.0) == pytest.approx(1.0)
    assert warped_product_bound(math.pi / 3, 0.25, 4.0) == pytest.approx(0.5)
    assert product_fillrad(0.2 * math.pi, math.pi / 3) == pytest.approx(0.2 * math.pi)
    for bad in (lambda: katz_bound(0.0), lambda: warped_product_bound(1, 0, 1), lambda: product_fillrad(-1, 1)):
        with pytest.raises(errors.InvalidInput):
            bad()


def test_dilation():
    X = sample_circle(2 * math.pi, 16).space
    assert dilation(np.arange(16), X, scale_sample(sample_circle(2 * math.pi, 16), 2.0).space) == 2.0
    assert dilation(np.zeros(16, dtype=int), X, X) == 0.0
    one = validate_metric([[0.0]])
    assert dilation([0], one, one) == 0.0
    # angle doubling on the circle stretches short arcs by exactly two
    doubling = (2 * np.arange(16)) % 16
    assert dilation(doubling, X, X) == pytest.approx(2.0)
    with pytest.raises(errors.InvalidInput):
        dilation([0, 1], X, X)


def test_dilation_is_submultiplicative():
    X = sample_circle(2 * math.pi, 24).space
    f = (2 * np.arange(24)) % 24
    g = (3 * np.arange(24)) % 24
    assert dilation(g[f], X, X) <= dilation(f, X, X) * dilation(g, X, X) + 1e-12


def test_submersion_bound_torus(torus):
    assert submersion_bound(torus) == pytest.approx(0.3 * math.pi)


def test_submersion_bound_needs_positive_fiber_dimension(small_torus):
    total = replace(small_torus.total, dim=1)
    _, sub = quotient_metric(total, [[i] for i in range(total.n)], dim=1)
    with pytest.raises(errors.DimensionNotExceeded):
        submersion_bound(sub)


def test_upper_bounds_torus(torus):
    ub = upper_bounds(torus)
    assert set(ub) == {"katz", "submersion", "warped", "product"}
    assert ub["product"] == pytest.approx(0.2 * math.pi)
    assert best_upper_bound(torus) == pytest.approx(0.2 * math.pi)


@pytest.mark.parametrize("sample", ["circle", "sphere"])
def test_analytic_sandwich(sample, circle128, sphere150):
    s = circle128 if sample == "circle" else sphere150
    assert lower_bound(s.inj, s.delta) <= s.fillrad_true <= katz_bound(s.diam_true or s.space.diameter)


def test_estimator_tolerance(circle128):
    assert estimator_tolerance(circle128) == circle128.mesh
    bare = replace(circle128, mesh=None)
    assert estimator_tolerance(bare) == pytest.approx(0.5 * 2 * math.pi / 128)


def test_check_bounds_sphere(sphere150, sphere_estimate):
    report = check_bounds(sphere150, sphere_estimate)
    assert report.passed
    names = [v.name for v in report.verdicts]
    assert names == ["lower_bound", "katz", "known"]
    assert report.lower == pytest.approx(math.pi / 4)


def test_corrupted_injectivity_radius_fails(sphere150, sphere_estimate):
    # with delta = 1 the curvature term caps the bound at pi/4, hiding a larger inj
    assert check_bounds(replace(sphere150, inj=3 * math.pi), sphere_estimate).passed
    bad = replace(sphere150, inj=3 * math.pi, delta=1 / 9)
    report = check_bounds(bad, sphere_estimate)
    assert not report.passed
    (lb,) = [v for v in report.verdicts if v.name == "lower_bound"]
    assert not lb.passed and lb.residual > lb.tolerance


def test_corrupted_circle_fails(circle128):
    est = estimate_fillrad(circle128, 1)
    assert check_bounds(circle128, est).passed
    assert not check_bounds(replace(circle128, inj=3 * math.pi), est).passed


def test_report_json_round_trip(sphere150, sphere_estimate):
    report = check_bounds(sphere150, sphere_estimate)
    text = json.dumps(report.to_json())
    back = BoundReport.from_json(json.loads(text))
    assert back == report
    assert recheck(back) == back
    assert recheck(recheck(report)) == recheck(report)


def test_render_table(sphere150, sphere_estimate):
    table = render_table(check_bounds(sphere150, sphere_estimate))
    lines = table.splitlines()
    assert lines[1].split() == ["bound", "value", "compared", "residual", "tol", "verdict"]
    assert all(line.split()[-1] == "pass" for line in lines[2:])


def test_combined_inequality_from_metadata(torus):
    est = estimate_fillrad(torus.total, 2)
    report = check_bounds(torus, est)
    (comb,) = [v for v in report.verdicts if v.kind == "combined"]
    # 2 * (0.6 pi / 4) = 0.3 pi against the extrinsic fiber diameter 0.6 pi
    assert comb.value == pytest.approx(0.3 * math.pi)
    assert comb.reference == pytest.approx(0.6 * math.pi)
    assert comb.passed and report.passed


def test_lipschitz_identity_and_hypothesis(circle128):
    lip = lipschitz_comparison(circle128, circle128, np.arange(128), 1, surjective=True)
    assert lip["dilation"] == 1.0 and lip["tight"] and lip["passed"]
    scaled = scale_sample(circle128, 2.0)
    lip2 = lipschitz_comparison(circle128, scaled, np.arange(128), 1, surjective=True)
    assert lip2["dilation"] == 2.0 and lip2["tight"]
    with pytest.raises(errors.HypothesisNotMet):
        lipschitz_comparison(circle128, circle128, np.arange(128), 1, surjective=False)


def test_sphere3_bounds_order():
    s = sample_sphere(3, 40, seed=2)
    assert lower_bound(s.inj, s.delta) <= s.fillrad_true <= katz_bound(math.pi)
