import numpy as np
import pytest

from estrace.problems import FUNCTION_IDS, LOWER_BOUND, UPPER_BOUND, make_problem


def test_function_ids_cover_suite():
    assert FUNCTION_IDS == tuple(range(1, 25))


@pytest.mark.parametrize("dim", [0, 1, -3])
def test_dim_below_two_rejected(dim):
    with pytest.raises(ValueError):
        make_problem(1, dim)


@pytest.mark.parametrize("fid", [0, 25, -1])
def test_unknown_fid_rejected(fid):
    with pytest.raises(ValueError):
        make_problem(fid, 5)


def test_non_integer_dim_rejected():
    with pytest.raises(ValueError):
        make_problem(1, 5.0)


@pytest.mark.parametrize("fid", FUNCTION_IDS)
def test_optimum_value_attained(fid):
    p = make_problem(fid, 5, transform_seed=3)
    # exact up to roundoff of the composed transforms (f20 accumulates
    # a few ulps in its conditioning chain)
    assert p.evaluate(p.x_opt) == pytest.approx(p.f_opt, rel=1e-12, abs=1e-12)


@pytest.mark.parametrize("fid", FUNCTION_IDS)
def test_optimum_is_lower_bound_under_probing(fid):
    p = make_problem(fid, 5, transform_seed=1)
    rng = np.random.default_rng(fid)
    X = rng.uniform(LOWER_BOUND, UPPER_BOUND, size=(10_000, 5))
    vals = p.evaluate(X)
    assert np.all(np.isfinite(vals))
    assert np.all(vals >= p.f_opt)


def test_sphere_unit_offset():
    """A unit step from the optimum costs exactly 1 on the sphere."""
    p = make_problem(1, 5, transform_seed=2)
    e1 = np.zeros(5)
    e1[0] = 1.0
    assert p.evaluate(p.x_opt + e1) == pytest.approx(p.f_opt + 1.0, rel=1e-12)


def test_sphere_translation_is_exact():
    p = make_problem(1, 6, transform_seed=4)
    rng = np.random.default_rng(0)
    for _ in range(50):
        x = rng.uniform(-4, 4, size=6)
        want = float(np.sum((x - p.x_opt) ** 2)) + p.f_opt
        assert p.evaluate(x) == pytest.approx(want, rel=1e-12)


def test_ellipsoid_conditioning_ratios():
    """Axis costs follow 10^(6(i-1)/(d-1)) once oscillation is off."""
    d = 5
    p = make_problem(2, d, transform_seed=5, oscillation=False)
    steps = []
    for i in range(d):
        e = np.zeros(d)
        e[i] = 1.0
        steps.append(p.evaluate(p.x_opt + e) - p.f_opt)
    for i in range(d):
        want = 10.0 ** (6.0 * i / (d - 1))
        assert steps[i] / steps[0] == pytest.approx(want, rel=1e-9)


def test_linear_slope_has_constant_differences():
    p = make_problem(5, 5, transform_seed=7)
    x0 = np.zeros(5)
    for i in range(5):
        e = np.zeros(5)
        e[i] = 0.5
        d1 = p.evaluate(x0 + e) - p.evaluate(x0)
        d2 = p.evaluate(x0 + 2 * e) - p.evaluate(x0 + e)
        assert d1 == pytest.approx(d2, rel=1e-9)
        assert d1 != 0.0


def test_linear_slope_floor_holds_near_the_face():
    # points on and beyond the optimal face evaluate to exactly f_opt
    p = make_problem(5, 5, transform_seed=1)
    beyond = p.x_opt * 1.04
    assert p.evaluate(beyond) == p.f_opt
    rng = np.random.default_rng(3)
    X = p.x_opt + rng.uniform(-1e-9, 1e-9, size=(1000, 5))
    assert np.all(p.evaluate(X) >= p.f_opt)


def test_reevaluation_is_bit_identical():
    for fid in (3, 8, 16, 21):
        p = make_problem(fid, 5, transform_seed=9)
        rng = np.random.default_rng(fid)
        X = rng.uniform(-5, 5, size=(100, 5))
        first = p.evaluate(X)
        again = p.evaluate(X)
        assert np.array_equal(first, again)


def test_instances_reproducible_across_construction():
    a = make_problem(13, 5, transform_seed=11)
    b = make_problem(13, 5, transform_seed=11)
    assert np.array_equal(a.x_opt, b.x_opt)
    assert a.f_opt == b.f_opt
    x = np.linspace(-2, 2, 5)
    assert a.evaluate(x) == b.evaluate(x)


def test_transform_seed_changes_the_instance():
    a = make_problem(13, 5, transform_seed=0)
    b = make_problem(13, 5, transform_seed=1)
    assert not np.array_equal(a.x_opt, b.x_opt)


def test_evaluation_counter_tracks_rows():
    p = make_problem(1, 4)
    p.evaluate(np.zeros(4))
    p.evaluate(np.zeros((7, 4)))
    assert p.evaluations == 8


def test_batch_matches_single_point():
    p = make_problem(10, 5, transform_seed=6)
    rng = np.random.default_rng(8)
    X = rng.uniform(-5, 5, size=(20, 5))
    batch = p.evaluate(X)
    singles = np.array([p.evaluate(row) for row in X])
    # BLAS may pick different kernels for the two batch shapes, so
    # agreement is to rounding, not bit for bit
    assert singles == pytest.approx(batch, rel=1e-12)


def test_shape_validation():
    p = make_problem(1, 4)
    with pytest.raises(ValueError):
        p.evaluate(np.zeros(3))
    with pytest.raises(ValueError):
        p.evaluate(np.zeros((2, 5)))
    with pytest.raises(ValueError):
        p.evaluate(np.zeros((2, 2, 2)))
