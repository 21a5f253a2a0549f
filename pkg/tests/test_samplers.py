import math

import numpy as np
import pytest

from fillrad import errors, samplers
from fillrad.metric_core import scale_metric, validate_metric
from fillrad.samplers import (
    antipodal_orbits,
    chord_metric,
    fiber_diameters,
    graph_geodesics,
    quotient_metric,
    sample_berger,
    sample_circle,
    sample_flat_torus,
    sample_rp2,
    sample_sphere,
    scale_sample,
    submersion_slack,
)


def test_circle_four_points():
    s = sample_circle(2 * math.pi, 4)
    assert s.space.d[0].tolist() == pytest.approx([0, math.pi / 2, math.pi, math.pi / 2])
    assert s.fillrad_true == pytest.approx(math.pi / 3)
    assert s.inj == pytest.approx(math.pi) and s.delta == 0.0


def test_circle_fillrad_matches_sphere_formula_at_n1():
    s = sample_circle(2 * math.pi, 64)
    assert s.fillrad_true == pytest.approx(0.5 * math.acos(-0.5))


def test_circle_too_few_points():
    with pytest.raises(errors.TooFewPoints):
        sample_circle(1.0, 2)


@pytest.mark.parametrize("c", [2.0, 0.5, 4.0])
def test_circle_scaling_is_exact(c):
    a = scale_metric(sample_circle(3.0, 37).space, c)
    b = sample_circle(3.0 * c, 37).space
    assert np.array_equal(a.d, b.d)


@pytest.mark.parametrize("c", [2.0, 0.5])
def test_torus_scaling_is_exact(c):
    a = scale_metric(sample_flat_torus(5.0, 3.0, 7, 5).total.space, c)
    b = sample_flat_torus(5.0 * c, 3.0 * c, 7, 5).total.space
    assert np.array_equal(a.d, b.d)


def test_sphere_metadata_and_range(sphere150):
    assert sphere150.fillrad_true == pytest.approx(0.95532, abs=1e-5)
    assert sphere150.space.diameter <= math.pi
    assert sphere150.inj == math.pi and sphere150.delta == 1.0
    assert 0 < sphere150.mesh < 0.3


def test_sphere_determinism():
    a = sample_sphere(2, 150, seed=7).space.d
    b = sample_sphere(2, 150, seed=7).space.d
    assert a.tobytes() == b.tobytes()
    assert not np.array_equal(a, sample_sphere(2, 150, seed=8).space.d)


def test_sphere3():
    s = sample_sphere(3, 60, seed=1)
    assert s.fillrad_true == pytest.approx(0.5 * math.acos(-0.25))
    assert s.space.diameter <= math.pi
    with pytest.raises(errors.TooFewPoints):
        sample_sphere(3, 4)


def test_torus_metadata(torus):
    assert torus.rho0 == pytest.approx(0.3 * math.pi)
    assert torus.total.fillrad_true == pytest.approx(0.2 * math.pi)
    assert torus.total.inj == pytest.approx(0.6 * math.pi)
    assert len(torus.fibers) == 32 and all(len(f) == 20 for f in torus.fibers)
    assert torus.epsilon <= torus.total.mesh


def test_torus_bad_grid():
    with pytest.raises(errors.BadGrid):
        sample_flat_torus(1.0, 2.0, 8, 8)
    with pytest.raises(errors.BadGrid):
        sample_flat_torus(2.0, 1.0, 2, 8)


def test_submersion_invariants_exhaustive(small_torus):
    sub = small_torus
    D, B = sub.total.space.d, sub.base.space.d
    for b1, fiber in enumerate(sub.fibers):
        nearest = D[:, fiber].min(axis=1)
        assert np.all(np.abs(nearest - B[sub.proj, b1]) <= sub.epsilon)
    assert np.all(B[np.ix_(sub.proj, sub.proj)] <= D + sub.epsilon)
    equi, contraction = submersion_slack(sub.total.space, sub.base.space, sub.proj, sub.fibers)
    assert max(equi, contraction) == sub.epsilon


def test_rp2_quotient():
    rp2, sub = sample_rp2(60, seed=3)
    assert rp2.n == 60
    assert rp2.space.diameter <= math.pi / 2 + 1e-12
    assert rp2.space.diameter > 0.9 * math.pi / 2
    assert not rp2.orientable
    assert sub.rho0 == pytest.approx(math.pi / 2)


def test_trivial_partition_is_identity(small_torus):
    total = small_torus.total
    base, sub = quotient_metric(total, [[i] for i in range(total.n)])
    assert np.array_equal(base.space.d, total.space.d)
    assert sub.rho0 == 0.0 and sub.epsilon == 0.0


def test_single_orbit_quotient(sphere150):
    base, sub = quotient_metric(sphere150, [np.arange(sphere150.n)], dim=0)
    assert base.n == 1
    assert sub.rho0 == pytest.approx(0.5 * sphere150.space.diameter)


def test_quotient_rejects_non_equidistant_orbits():
    # orbits {0,1} and {2} and {3}: min-distances violate the triangle inequality
    d = np.array([[0, 10, 1, 10], [10, 0, 10, 1], [1, 10, 0, 10], [10, 1, 10, 0]], dtype=float)
    total = samplers.ManifoldSample(validate_metric(d), dim=1)
    with pytest.raises(errors.QuotientNotMetric):
        quotient_metric(total, [[0, 1], [2], [3]])
    with pytest.raises(errors.EmptyOrbit):
        quotient_metric(total, [[0, 1, 2, 3], []])
    with pytest.raises(errors.InvalidInput):
        quotient_metric(total, [[0, 1], [2]])


def test_antipodal_orbits():
    assert [o.tolist() for o in antipodal_orbits(6)] == [[0, 3], [1, 4], [2, 5]]


def test_graph_geodesics_on_circle_chords():
    n = 64
    t = 2 * math.pi * np.arange(n) / n
    pts = np.column_stack([np.cos(t), np.sin(t)])
    approx = graph_geodesics(pts, chord_metric, k=2).d
    exact = sample_circle(2 * math.pi, n).space.d
    off = ~np.eye(n, dtype=bool)
    assert np.max(np.abs(approx[off] - exact[off]) / exact[off]) < 0.01


def test_graph_geodesics_complete_graph_is_direct():
    rng = np.random.default_rng(0)
    pts = rng.uniform(size=(15, 2))
    d = graph_geodesics(pts, chord_metric, k=14).d
    direct = np.linalg.norm(pts[:, None] - pts[None, :], axis=-1)
    assert np.allclose(d, direct, rtol=0, atol=1e-15)


def test_graph_geodesics_disconnected():
    pts = np.array([[0.0, 0], [0.1, 0], [0.2, 0], [5.0, 0], [5.1, 0], [5.2, 0]])
    with pytest.raises(errors.DisconnectedGraph) as info:
        graph_geodesics(pts, chord_metric, k=2)
    assert info.value.context["components"] == 2


@pytest.mark.slow
def test_berger_fibers_shrink_with_a():
    maxima = []
    for a in (1.0, 0.5, 0.25):
        sub = sample_berger(a, n_base=32, n_fiber=10, seed=0)
        maxima.append(float(fiber_diameters(sub.total.space, sub.fibers).max()))
    assert maxima[0] > maxima[1] > maxima[2]


def test_scale_sample_metadata(circle128):
    s = scale_sample(circle128, 2.0)
    assert s.inj == 2 * circle128.inj
    assert s.fillrad_true == 2 * circle128.fillrad_true
    assert s.mesh == 2 * circle128.mesh
    t = scale_sample(sample_sphere(2, 20), 2.0)
    assert t.delta == 0.25


def test_sample_metadata_round_trip(torus):
    meta = torus.total.metadata()
    back = samplers.ManifoldSample.from_metadata(torus.total.space, meta)
    assert back.metadata() == meta


def test_declared_diameter_is_enforced():
    space = validate_metric([[0, 2], [2, 0]])
    with pytest.raises(errors.InvalidInput):
        samplers.ManifoldSample(space, dim=1, diam_true=1.0)
    with pytest.raises(errors.InvalidInput):
        samplers.ManifoldSample(space, dim=1, inj=0.0)
