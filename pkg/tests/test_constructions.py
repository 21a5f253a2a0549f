import math

import numpy as np
import pytest

from fillrad import errors
from fillrad.constructions import (
    cylinder_audit,
    cylinder_function,
    frechet_problem,
    frechet_retract,
    projection_audit,
    reach_audit,
    reach_probe,
    retraction_audit,
    shifted_base_function,
    unique_projection_witness,
)
from fillrad.metric_core import KuratowskiFrame, exact_abs_diff_le, kuratowski_embed, sup_distance, validate_metric
from fillrad.samplers import ManifoldSample, make_submersion, quotient_metric

R_GOOD = 0.9 * math.pi / 4


@pytest.fixture(scope="module")
def frames(circle128, sphere150):
    return {"circle": kuratowski_embed(circle128.space), "sphere2": kuratowski_embed(sphere150.space)}


@pytest.mark.parametrize("name", ["circle", "sphere2"])
def test_retract_fixes_every_row(frames, name):
    frame = frames[name]
    # exhaustive argmin over all q for every p
    for p in range(frame.n):
        assert frechet_retract(frame, frame.row(p), R_GOOD) == p


@pytest.mark.parametrize("name", ["circle", "sphere2"])
def test_retract_fixes_shifted_rows(frames, name):
    frame = frames[name]
    for p in range(0, frame.n, 7):
        for delta in (0.1, 0.5):
            assert frechet_retract(frame, frame.row(p) + delta, R_GOOD) == p


def test_shifted_row_vicinity_is_smaller_ball(frames):
    frame = frames["sphere2"]
    prob = frechet_problem(frame, frame.row(4) + 0.2, R_GOOD)
    expected = np.flatnonzero(frame.row(4) <= R_GOOD - 0.2)
    assert np.array_equal(prob.members, expected)
    assert prob.weights.sum() == pytest.approx(1.0)


def test_retract_single_member_returns_it(frames):
    frame = frames["circle"]
    d = frame.space.d
    R = 0.5 * d[0, 1]
    assert frechet_retract(frame, frame.row(9), R) == 9


def test_retract_empty_vicinity(frames):
    frame = frames["circle"]
    with pytest.raises(errors.EmptyVicinity):
        frechet_retract(frame, np.full(frame.n, 100.0), 1.0)


def test_retract_tie_break_smallest_index():
    # a 4-cycle: with everything in the vicinity all points tie
    d = np.array([[0, 1, 2, 1], [1, 0, 1, 2], [2, 1, 0, 1], [1, 2, 1, 0]], dtype=float)
    frame = kuratowski_embed(validate_metric(d))
    assert frechet_retract(frame, frame.row(2), 10.0) == 0


def test_retraction_audit_reports(frames):
    audit = retraction_audit(frames["circle"], R_GOOD, np.arange(0, 128, 3))
    assert audit["fixed_point_fraction"] == 1.0
    assert audit["violations"] == [] and audit["max_residual"] == 0.0
    assert set(audit) >= {"construct", "parameters", "violations", "max_residual", "epsilon_used"}
    assert audit["continuity"]["max_jump"] < R_GOOD


def test_retraction_beyond_regime_is_only_reported(frames):
    audit = retraction_audit(frames["sphere2"], 10.0, n_continuity=0)
    assert audit["fixed_point_fraction"] < 1.0


def test_retraction_deterministic(frames):
    a = retraction_audit(frames["sphere2"], R_GOOD, np.arange(20), seed=4)
    b = retraction_audit(frames["sphere2"], R_GOOD, np.arange(20), seed=4)
    assert a == b


def test_shifted_base_function(torus):
    for b in (0, 5, 31):
        f = shifted_base_function(torus, b)
        assert np.all(f[torus.fibers[b]] == torus.rho0)
        assert f.min() == torus.rho0
    f0, f1 = shifted_base_function(torus, 0), shifted_base_function(torus, 9)
    assert abs(sup_distance(f0, f1) - torus.base.space.d[0, 9]) <= 1e-12 + torus.epsilon


def test_cylinder_endpoints(torus):
    p = 123
    dp = torus.total.space.d[p]
    assert np.array_equal(cylinder_function(torus, p, 0.0).values, dp)
    top = cylinder_function(torus, p, torus.rho0).values
    fb = shifted_base_function(torus, int(torus.proj[p]))
    assert np.max(np.abs(top - fb)) <= torus.epsilon + np.spacing(fb.max())


def test_cylinder_displacement_exact(torus):
    for p in (0, 77, 639):
        for t in np.linspace(0, torus.rho0, 7):
            v = cylinder_function(torus, p, t).values
            assert exact_abs_diff_le(v, torus.total.space.d[p], t).all()
    with pytest.raises(errors.InvalidInput):
        cylinder_function(torus, 0, -1.0)


def test_cylinder_audit_torus(torus):
    audit = cylinder_audit(torus)
    assert audit["violation_count"] == 0
    assert len(audit["parameters"]["grid"]) == 16
    assert audit["parameters"]["grid"][-1] == torus.rho0


def test_cylinder_audit_flags_corrupted_rho0(small_torus):
    from dataclasses import replace

    bad = replace(small_torus, rho0=0.5 * small_torus.rho0)
    audit = cylinder_audit(bad)
    assert audit["violation_count"] > 0
    assert {"check", "p", "t", "z"} <= set(audit["violations"][0])


def test_cylinder_trivial_submetry(small_torus):
    total = small_torus.total
    _, sub = quotient_metric(total, [[i] for i in range(total.n)])
    assert sub.rho0 == 0.0
    v = cylinder_function(sub, 5, 0.0).values
    assert np.array_equal(v, total.space.d[5])
    assert np.array_equal(shifted_base_function(sub, 5), total.space.d[5])
    assert cylinder_audit(sub)["violation_count"] == 0


def test_cylinder_single_orbit(sphere150):
    base, sub = quotient_metric(sphere150, [np.arange(sphere150.n)], dim=0)
    f = shifted_base_function(sub, 0)
    assert np.all(f == sub.rho0)
    top = cylinder_function(sub, 3, sub.rho0).values
    assert np.max(np.abs(top - sub.rho0)) <= 1e-15
    assert cylinder_audit(sub)["violation_count"] == 0


def test_reach_probe_equalities(frames):
    frame = frames["circle"]
    w = reach_probe(frame, 0, 1)
    assert w.delta == pytest.approx(2 * math.pi / 128)
    assert w.half_delta == pytest.approx(0.0245, abs=1e-4)
    assert abs(w.dist_to_p - w.half_delta) <= 1e-12
    assert abs(w.dist_to_q - w.half_delta) <= 1e-12
    assert w.nearest_row >= w.half_delta - 1e-12
    assert not w.is_kuratowski_row and w.f.min() >= w.half_delta - 1e-15


def test_reach_probe_three_points():
    d = np.array([[0, 2, 1.5], [2, 0, 1.2], [1.5, 1.2, 0]])
    frame = kuratowski_embed(validate_metric(d))
    w = reach_probe(frame, 0, 1)
    assert w.half_delta == 1.0
    assert sup_distance(frame.row(2), w.f) >= 1.0


def test_reach_probe_detects_corrupted_metric():
    # rows of a non-metric: the midpoint of rows 0 and 1 is strictly closer to row 2
    d = np.array([[0, 4, 1], [4, 0, 1], [1, 1, 0]], dtype=float)
    space = validate_metric(np.ones((3, 3)) - np.eye(3))
    frame = KuratowskiFrame(space, d)
    with pytest.raises(errors.StrictlyCloserPoint) as info:
        reach_probe(frame, 0, 1)
    assert info.value.context["r"] == 2


def test_reach_probe_needs_distinct_points(frames):
    with pytest.raises(errors.InvalidInput):
        reach_probe(frames["circle"], 3, 3)


def test_reach_audit_down_to_nearest_neighbor(frames):
    frame = frames["circle"]
    pairs = [(0, j) for j in range(20, 0, -1)]
    audit = reach_audit(frame, pairs)
    assert audit["violation_count"] == 0 and audit["max_residual"] <= 1e-12
    assert audit["witnesses"][-1]["delta"] == pytest.approx(2 * math.pi / 128)


def test_unique_projection(frames):
    frame = frames["sphere2"]
    w = unique_projection_witness(frame, 10, 1.0)
    assert w.nearest == 10
    d = frame.space.d
    assert w.margin == pytest.approx(np.sort(d[10])[1])
    rng = np.random.default_rng(0)
    cases = [(int(rng.integers(150)), float(rng.uniform(1e-3, 2))) for _ in range(20)]
    assert projection_audit(frame, cases)["violation_count"] == 0
    tiny = unique_projection_witness(frame, 3, 1e-12)
    assert np.allclose(tiny.distances, d[3], atol=1e-11)
    with pytest.raises(errors.InvalidInput):
        unique_projection_witness(frame, 0, 0.0)


def test_make_submersion_requires_surjective_projection(small_torus):
    with pytest.raises(errors.InvalidInput):
        make_submersion(small_torus.total, small_torus.base, np.zeros(small_torus.total.n, dtype=int))


def test_manifold_sample_frame_type():
    s = ManifoldSample(validate_metric([[0, 1], [1, 0]]), dim=1)
    assert kuratowski_embed(s.space).n == 2
