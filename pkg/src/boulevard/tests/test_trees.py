from __future__ import annotations

import numpy as np
import pytest

from boulevard.errors import ConfigurationError, DomainError
from boulevard.models.config import StructureConstraints
from boulevard.models.trees import Subsample
from boulevard.samplers import RandomizedSampler
from boulevard.trees import (
    assign_leaf_values,
    build_greedy_structure,
    build_randomized_structure,
    constraint_report,
    draw_subsample,
    explicit_structure,
    leaf_of,
    predict_tree,
    structure_vector,
)

HALF_SPLIT = (0, 0.5, None, None)


def _corner_layout():
    inner = (2, 0.5, None, None)
    middle = (1, 0.5, inner, inner)
    return (0, 0.5, middle, middle)


def test_single_point_gives_single_leaf():
    rng = np.random.default_rng(0)
    structure = build_randomized_structure(np.array([[0.3, 0.7]]), StructureConstraints(min_leaf_samples=1), rng)
    assert structure.leaf_count == 1
    assert structure.cell(0).volume == pytest.approx(1.0)


def test_floor_equal_to_n_gives_single_leaf():
    X = np.random.default_rng(1).random((20, 3))
    structure = build_randomized_structure(X, StructureConstraints(min_leaf_samples=20), np.random.default_rng(2))
    assert structure.leaf_count == 1


def test_floor_above_n_is_a_configuration_error():
    X = np.random.default_rng(1).random((4, 2))
    with pytest.raises(ConfigurationError, match="exceeds the sample size"):
        build_randomized_structure(X, StructureConstraints(min_leaf_samples=5), np.random.default_rng(0))


def test_randomized_leaves_respect_sample_floor():
    X = np.random.default_rng(3).random((100, 2))
    constraints = StructureConstraints(min_leaf_samples=10, max_depth=8)
    structure = build_randomized_structure(X, constraints, np.random.default_rng(4))
    counts = np.bincount(structure.apply(X), minlength=structure.leaf_count)
    assert counts.min() >= 10
    assert structure.leaf_count > 1
    assert constraint_report(structure, X, constraints).count_violations == []


def test_leaves_partition_the_unit_cube():
    X = np.random.default_rng(5).random((200, 3))
    structure = build_randomized_structure(X, StructureConstraints(min_leaf_samples=5), np.random.default_rng(6))
    assert sum(cell.volume for cell in structure.cells()) == pytest.approx(1.0, abs=1e-9)

    queries = np.random.default_rng(7).random((10_000, 3))
    leaves = structure.apply(queries)
    cells = structure.cells()
    for x, leaf in zip(queries[:500], leaves[:500]):
        containing = [j for j, cell in enumerate(cells) if cell.contains(x)]
        assert containing == [leaf]
    assert leaves.min() >= 0 and leaves.max() < structure.leaf_count


def test_randomized_structure_ignores_responses():
    X = np.random.default_rng(8).random((60, 2))
    z = np.random.default_rng(9).normal(size=60)
    constraints = StructureConstraints(min_leaf_samples=5)
    sampler = RandomizedSampler()
    subsample = Subsample.full(60)
    a = sampler.sample(X, z, subsample, constraints, np.random.default_rng(10))
    b = sampler.sample(X, np.random.default_rng(11).permutation(z), subsample, constraints, np.random.default_rng(10))
    np.testing.assert_array_equal(a.feature, b.feature)
    np.testing.assert_array_equal(a.threshold, b.threshold)


def test_diameter_cap_stops_splitting():
    X = np.random.default_rng(12).random((400, 2))
    constraints = StructureConstraints(min_leaf_samples=1, max_depth=30, max_leaf_diameter=0.5)
    structure = build_randomized_structure(X, constraints, np.random.default_rng(13))
    report = constraint_report(structure, X, constraints)
    assert report.max_leaf_diameter <= 0.5 + 1e-12 or report.diameter_violations


def test_diameter_cap_above_sqrt_d_is_rejected():
    X = np.random.default_rng(0).random((10, 1))
    with pytest.raises(ConfigurationError, match="sqrt"):
        build_randomized_structure(X, StructureConstraints(max_leaf_diameter=1.5, min_leaf_samples=1), np.random.default_rng(0))


def test_greedy_constant_gradient_is_single_leaf():
    X = np.random.default_rng(14).random((30, 2))
    structure = build_greedy_structure(X, np.zeros(30), StructureConstraints(min_leaf_samples=2), Subsample.full(30))
    assert structure.leaf_count == 1


def test_greedy_picks_the_zero_impurity_split():
    X = np.array([[0.1], [0.2], [0.8], [0.9]])
    z = np.array([1.0, 1.0, 5.0, 5.0])
    structure = build_greedy_structure(X, z, StructureConstraints(min_leaf_samples=2), Subsample.full(4))
    assert structure.leaf_count == 2
    assert structure.feature[0] == 0
    assert structure.threshold[0] == pytest.approx(0.5)
    assert list(structure.apply(X)) == [0, 0, 1, 1]


def test_greedy_floor_forbids_every_split():
    X = np.array([[0.1], [0.2], [0.8], [0.9]])
    z = np.array([1.0, 1.0, 5.0, 5.0])
    structure = build_greedy_structure(X, z, StructureConstraints(min_leaf_samples=3), Subsample.full(4))
    assert structure.leaf_count == 1


def test_greedy_ties_go_to_the_lowest_feature():
    # Both features separate z identically.
    X = np.array([[0.1, 0.1], [0.2, 0.2], [0.8, 0.8], [0.9, 0.9]])
    z = np.array([0.0, 0.0, 1.0, 1.0])
    structure = build_greedy_structure(X, z, StructureConstraints(min_leaf_samples=2), Subsample.full(4))
    assert structure.feature[0] == 0


def test_greedy_mirror_ties_go_to_the_lower_threshold():
    X = ((np.arange(6) + 0.5) / 6)[:, None]
    constraints = StructureConstraints(min_leaf_samples=1, max_depth=1)
    rng = np.random.default_rng(21)
    for _ in range(200):
        h = rng.normal(size=3)
        z = np.concatenate([h, h[::-1]])
        structure = build_greedy_structure(X, z, constraints, Subsample.full(6))
        if structure.leaf_count > 1:
            assert structure.threshold[0] <= 0.5 + 1e-12


def test_greedy_searches_subsample_points_only():
    X = np.array([[0.1], [0.2], [0.3], [0.8], [0.9]])
    z = np.array([0.0, 0.0, 9.0, 1.0, 1.0])
    subsample = Subsample(indices=np.array([0, 1, 3, 4]), population=5, theta=0.8)
    structure = build_greedy_structure(X, z, StructureConstraints(min_leaf_samples=2), subsample)
    assert structure.threshold[0] == pytest.approx(0.5)


def test_leaf_value_is_the_mean():
    structure = explicit_structure(1, None)
    X = np.array([[0.1], [0.5], [0.9]])
    tree = assign_leaf_values(structure, np.array([1.0, 2.0, 3.0]), X, Subsample.full(3))
    assert tree.leaf_values[0] == pytest.approx(2.0)
    assert predict_tree(tree, np.array([0.42])) == pytest.approx(2.0)


def test_leaf_missed_by_subsample_has_value_zero():
    structure = explicit_structure(1, HALF_SPLIT)
    X = np.array([[0.1], [0.2], [0.7], [0.8]])
    subsample = Subsample(indices=np.array([2, 3]), population=4, theta=0.5)
    tree = assign_leaf_values(structure, np.array([5.0, 6.0, 7.0, 8.0]), X, subsample)
    assert tree.leaf_values[0] == 0.0
    assert predict_tree(tree, np.array([0.15])) == 0.0
    assert tree.leaf_values[1] == pytest.approx(7.5)


def test_leaf_value_uses_subsample_members_only():
    structure = explicit_structure(1, None)
    X = np.array([[0.1], [0.2], [0.3]])
    subsample = Subsample(indices=np.array([0, 2]), population=3, theta=0.67)
    tree = assign_leaf_values(structure, np.array([2.0, 100.0, 4.0]), X, subsample)
    assert tree.leaf_values[0] == pytest.approx(3.0)


def test_leaf_values_are_linear_in_z():
    X = np.random.default_rng(15).random((50, 2))
    structure = build_randomized_structure(X, StructureConstraints(min_leaf_samples=4), np.random.default_rng(16))
    subsample = draw_subsample(50, 0.6, np.random.default_rng(17))
    z1, z2 = np.random.default_rng(18).normal(size=(2, 50))
    combined = assign_leaf_values(structure, 2.0 * z1 - 3.0 * z2, X, subsample).leaf_values
    separate = 2.0 * assign_leaf_values(structure, z1, X, subsample).leaf_values - 3.0 * assign_leaf_values(
        structure, z2, X, subsample
    ).leaf_values
    np.testing.assert_allclose(combined, separate, atol=1e-12)


def test_boundary_point_goes_right():
    structure = explicit_structure(1, HALF_SPLIT)
    assert leaf_of(structure, np.array([0.5])) == 1
    assert leaf_of(structure, np.array([0.4999])) == 0
    assert leaf_of(structure, np.array([1.0])) == 1
    assert leaf_of(explicit_structure(2, None), np.array([0.3, 0.9])) == 0


def test_corners_land_in_distinct_leaves():
    structure = explicit_structure(3, _corner_layout())
    corners = np.array([[a, b, c] for a in (0.0, 1.0) for b in (0.0, 1.0) for c in (0.0, 1.0)])
    assert structure.leaf_count == 8
    assert len(set(structure.apply(corners).tolist())) == 8


def test_query_outside_the_cube_is_a_domain_error():
    structure = explicit_structure(1, HALF_SPLIT)
    with pytest.raises(DomainError):
        leaf_of(structure, np.array([1.2]))


def test_structure_vector_examples():
    X = np.array([[0.1], [0.2], [0.7], [0.8]])
    single = explicit_structure(1, None)
    np.testing.assert_allclose(structure_vector(single, X, Subsample.full(4), np.array([0.3])), np.full(4, 0.25))

    split = explicit_structure(1, HALF_SPLIT)
    hit = Subsample(indices=np.array([0, 2]), population=4, theta=0.5)
    np.testing.assert_array_equal(structure_vector(split, X, hit, np.array([0.15])), [1.0, 0.0, 0.0, 0.0])

    miss = Subsample(indices=np.array([2, 3]), population=4, theta=0.5)
    np.testing.assert_array_equal(structure_vector(split, X, miss, np.array([0.15])), np.zeros(4))


def test_prediction_equals_structure_vector_dot_z():
    rng = np.random.default_rng(19)
    X = rng.random((80, 3))
    z = rng.normal(size=80)
    subsample = draw_subsample(80, 0.5, rng)
    structure = build_greedy_structure(X, z, StructureConstraints(min_leaf_samples=3), subsample)
    tree = assign_leaf_values(structure, z, X, subsample)
    for x in rng.random((100, 3)):
        s = structure_vector(structure, X, subsample, x)
        assert s.min() >= 0.0
        assert s.sum() == pytest.approx(1.0) or s.sum() == 0.0
        assert predict_tree(tree, x) == pytest.approx(float(s @ z), abs=1e-12)


def test_subsample_size_and_order():
    subsample = draw_subsample(10, 0.25, np.random.default_rng(20))
    assert subsample.size == 3
    assert np.all(np.diff(subsample.indices) > 0)
    assert draw_subsample(7, 1.0, np.random.default_rng(0)).size == 7
    with pytest.raises(ConfigurationError):
        draw_subsample(3, 0.1, np.random.default_rng(0))


def test_explicit_structure_rejects_thresholds_outside_the_cell():
    with pytest.raises(ConfigurationError):
        explicit_structure(1, (0, 0.5, (0, 0.7, None, None), None))
