import numpy as np
import pytest

from cohortexplain import (
    AbsoluteRange,
    Equality,
    RelativeRange,
    SimilaritySpec,
    TargetOutOfRange,
    ZOutOfRange,
    build_profile,
    cohort,
    soft_similarity,
)

from conftest import make_dataset, random_binary_profile


def test_d3_profile(d3_dataset, d3_spec):
    profile = build_profile(d3_dataset, d3_spec, 0)
    np.testing.assert_array_equal(
        profile.indicators, [[True, True], [True, False], [False, False]]
    )
    assert profile.dissim_set(0) == frozenset()
    assert profile.dissim_set(1) == frozenset({1})
    assert profile.dissim_set(2) == frozenset({0, 1})
    np.testing.assert_array_equal(profile.dissim_counts, [0, 1, 2])


def test_target_row_all_similar_for_any_rule():
    rng = np.random.default_rng(7)
    ds = make_dataset(rng.normal(size=(20, 4)), rng.normal(size=20))
    spec = SimilaritySpec((Equality(), RelativeRange(0.3), AbsoluteRange(0.5), RelativeRange(1.0)))
    for t in range(ds.n):
        profile = build_profile(ds, spec, t)
        assert profile.indicators[t].all()
        assert profile.dissim_counts[t] == 0


def test_relative_range_rule():
    ds = make_dataset([[0.0], [0.05], [1.0]], [0, 0, 0])
    profile = build_profile(ds, SimilaritySpec((RelativeRange(0.1),)), 0)
    np.testing.assert_array_equal(profile.indicators[:, 0], [True, True, False])


def test_constant_column_all_similar():
    # threshold 0.1 * 0 = 0 and |x - x| = 0 <= 0, so the <= rule keeps everyone
    ds = make_dataset([[7.0], [7.0], [7.0]], [0, 0, 0])
    profile = build_profile(ds, SimilaritySpec((RelativeRange(0.1),)), 1)
    assert profile.indicators.all()


def test_absolute_range_rule():
    ds = make_dataset([[0.0], [0.4], [0.6]], [0, 0, 0])
    profile = build_profile(ds, SimilaritySpec((AbsoluteRange(0.5),)), 0)
    np.testing.assert_array_equal(profile.indicators[:, 0], [True, True, False])


def test_target_out_of_range(d3_dataset, d3_spec):
    with pytest.raises(TargetOutOfRange):
        build_profile(d3_dataset, d3_spec, 3)
    with pytest.raises(TargetOutOfRange):
        build_profile(d3_dataset, d3_spec, -1)


def test_bitsets_consistent_with_indicators():
    rng = np.random.default_rng(11)
    profile = random_binary_profile(rng, n=40, d=67, target=5, density=0.6)
    for i in range(profile.n):
        expected = frozenset(np.flatnonzero(~profile.indicators[i]).tolist())
        assert profile.dissim_set(i) == expected
        assert profile.dissim_counts[i] == len(expected)


def test_wide_bitsets():
    rng = np.random.default_rng(3)
    profile = random_binary_profile(rng, n=8, d=4096, target=0, density=0.9)
    assert profile.dissim_packed.shape == (8, 512)
    i = int(np.argmax(profile.dissim_counts))
    assert profile.dissim_set(i) == frozenset(np.flatnonzero(~profile.indicators[i]).tolist())


def test_cohort(d3_profile):
    np.testing.assert_array_equal(cohort(d3_profile, ()), [0, 1, 2])
    np.testing.assert_array_equal(cohort(d3_profile, (0,)), [0, 1])
    np.testing.assert_array_equal(cohort(d3_profile, (1,)), [0])
    np.testing.assert_array_equal(cohort(d3_profile, (0, 1)), [0])
    with pytest.raises(ValueError):
        cohort(d3_profile, (2,))


def test_cohort_always_contains_target():
    rng = np.random.default_rng(23)
    profile = random_binary_profile(rng, n=30, d=6, target=4, density=0.4)
    for mask in range(1 << 6):
        u = tuple(j for j in range(6) if (mask >> j) & 1)
        members = cohort(profile, u)
        assert 4 in members


def test_soft_similarity_examples(d3_profile):
    np.testing.assert_array_equal(soft_similarity(d3_profile, [0.0, 0.0]), [1, 1, 1])
    np.testing.assert_allclose(soft_similarity(d3_profile, [0.5, 0.5]), [1.0, 0.5, 0.25])
    # corners reproduce the binary indicators S_u
    for mask in range(4):
        z = np.array([(mask >> j) & 1 for j in range(2)], dtype=float)
        u = [j for j in range(2) if (mask >> j) & 1]
        expected = d3_profile.indicators[:, u].all(axis=1) if u else np.ones(3, bool)
        np.testing.assert_array_equal(soft_similarity(d3_profile, z), expected.astype(float))


def test_soft_similarity_bounds_and_monotonicity():
    rng = np.random.default_rng(5)
    profile = random_binary_profile(rng, n=25, d=9, target=3)
    for _ in range(50):
        z = rng.random(9)
        s = soft_similarity(profile, z)
        assert np.all(s >= 0.0) and np.all(s <= 1.0)
        assert s[3] == 1.0
        z_up = np.minimum(z + rng.random(9) * (1.0 - z), 1.0)
        assert np.all(soft_similarity(profile, z_up) <= s + 1e-12)


def test_soft_similarity_diagonal_power_form():
    rng = np.random.default_rng(9)
    profile = random_binary_profile(rng, n=40, d=12, target=0)
    for alpha in [0.0, 0.25, 0.7, 1.0]:
        s = soft_similarity(profile, np.full(12, alpha))
        expected = (1.0 - alpha) ** profile.dissim_counts
        np.testing.assert_allclose(s, expected, atol=1e-14)


def test_z_out_of_range(d3_profile):
    with pytest.raises(ZOutOfRange):
        soft_similarity(d3_profile, [0.5, 1.5])
    with pytest.raises(ZOutOfRange):
        soft_similarity(d3_profile, [-0.1, 0.5])
    with pytest.raises(ZOutOfRange):
        soft_similarity(d3_profile, [0.5])


def test_equality_is_exact_float_equality():
    ds = make_dataset([[0.1], [0.1], [0.1 + 1e-18]], [0, 0, 0])
    profile = build_profile(ds, SimilaritySpec((Equality(),)), 0)
    # 0.1 + 1e-18 rounds to the same double, so all three match bit-for-bit
    assert profile.indicators.all()
    ds2 = make_dataset([[0.1], [0.1 + 1e-10]], [0, 0])
    profile2 = build_profile(ds2, SimilaritySpec((Equality(),)), 0)
    np.testing.assert_array_equal(profile2.indicators[:, 0], [True, False])
