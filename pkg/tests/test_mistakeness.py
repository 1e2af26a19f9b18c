import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from credex.belief import Frame
from credex.errors import DimensionMismatch, InvalidIndex, ZeroResidentCentroids
from credex.mistakeness import (
    NodeView,
    UtilityScores,
    check_assignment,
    cost_down,
    cost_up,
    kappa,
    lambda_mistakeness,
    mistakeness_down,
    mistakeness_up,
    representativeness_evidential,
    representativeness_hard,
)
from credex.oracle import brute_kappa, count_mistakes, random_partition
from credex.partition import CredalPartition, HardClustering, encode_hard
from credex.utility import CustomUtility, UtilitySpec

LAMBDAS = [-math.inf, -2.0, -1.0, 0.0, 0.5, 1.0, 2.0, math.inf]


def _single_point(frame):
    """One observation whose categorical mass sits on {w1}; candidates {w1}, {w2}, {w1,w2}."""
    return CredalPartition(frame, tuple(frame.all_subsets()), np.array([[1.0, 0.0, 0.0]]))


@pytest.mark.parametrize("u", [0.0, 0.25, 0.5, 1.0])
def test_cost_table(frame2, u):
    p = _single_point(frame2)
    spec = CustomUtility.from_table(frame2, {("w1|w2", "w1"): u})
    w1, w2, both = frame2.all_subsets()
    assert [cost_down(p, spec, 0, a) for a in (w1, both, w2)] == [0.0, 1.0 - u, 1.0]
    assert [cost_up(p, spec, 0, a) for a in (w1, both, w2)] == [u, 1.0, 1.0 + u]


def test_cost_invalid_index(frame2):
    p = _single_point(frame2)
    with pytest.raises(InvalidIndex):
        cost_up(p, 0, 1, frame2.singleton(0))
    with pytest.raises(InvalidIndex):
        cost_down(p, 0, -1, frame2.singleton(0))


def test_mistakeness_small_cases(frame2):
    p = _single_point(frame2)
    assert mistakeness_up(p, 1.0, NodeView.root(p)) == 0.0
    # one external centroid {w1,w2}, U^1({w1,w2}, {w1}) = 0.5
    node = NodeView.of(p.n_focal, [0], [0, 1])
    assert node.complement == (2,)
    assert mistakeness_up(p, 1.0, node) == 0.5
    with pytest.raises(ZeroResidentCentroids):
        mistakeness_down(p, 1.0, NodeView.of(p.n_focal, [0], []))
    with pytest.raises(InvalidIndex):
        NodeView.of(p.n_focal, [0], [5])


def test_lambda_dispatch(small_evidential):
    _, p, _ = small_evidential
    node = NodeView.of(p.n_focal, [0, 1, 2], [0, 2])
    assert lambda_mistakeness(p, 1.0, node) == mistakeness_up(p, 1.0, node)
    assert lambda_mistakeness(p, 0.0, node) == mistakeness_up(p, 0.0, node)
    assert lambda_mistakeness(p, -1.0, node) == mistakeness_down(p, -1.0, node)
    scores = UtilityScores.build(p, UtilitySpec(-1.0))
    assert lambda_mistakeness(p, -1.0, node, scores) == pytest.approx(mistakeness_down(p, -1.0, node))


def test_up_mistakeness_counts_hard_mistakes():
    rng = np.random.default_rng(5)
    frame = Frame.of_size(3)
    for _ in range(30):
        labels = rng.integers(3, size=12)
        hard = HardClustering(frame, labels)
        p = encode_hard(hard)
        members = np.flatnonzero(rng.random(12) < 0.5)
        resident = np.flatnonzero(rng.random(3) < 0.6)
        node = NodeView.of(3, members, resident)
        assert mistakeness_up(p, 0.0, node) == count_mistakes(hard, members, resident)


def test_down_mistakeness_example(small_evidential):
    _, p, _ = small_evidential
    # 1 - m(w1) for the first two points
    assert mistakeness_down(p, 0.0, NodeView.of(p.n_focal, [0, 1], [0])) == pytest.approx(0.4)
    # averaged over the two resident centroids
    both = NodeView.of(p.n_focal, [2], [0, 2])
    assert mistakeness_down(p, 0.0, both) == pytest.approx(((1 - 0.2) + (1 - 0.6)) / 2)


def test_representativeness_hard_matches_evidential():
    rng = np.random.default_rng(11)
    frame = Frame.of_size(3)
    truth = HardClustering(frame, rng.integers(3, size=40))
    guess = HardClustering(frame, np.where(rng.random(40) < 0.8, truth.labels, rng.integers(3, size=40)))
    p = encode_hard(truth)
    expected = representativeness_hard(truth, guess)
    assert representativeness_evidential(p, 0.0, guess.labels) == pytest.approx(expected)
    with pytest.raises(DimensionMismatch):
        representativeness_hard(truth, HardClustering(frame, np.zeros(3, dtype=int)))


def test_check_assignment(small_evidential):
    _, p, _ = small_evidential
    with pytest.raises(DimensionMismatch):
        check_assignment(p, [0, 1])
    with pytest.raises(InvalidIndex):
        check_assignment(p, [0, 0, 0, 0, 0, 3])


@pytest.mark.parametrize("lam", LAMBDAS)
def test_kappa_matches_triple_sum(lam):
    rng = np.random.default_rng(LAMBDAS.index(lam))
    for c in (2, 3):
        frame = Frame.of_size(c)
        focal, m = random_partition(rng, 15, frame, min(4, 2**c - 1))
        p = CredalPartition(frame, focal, m)
        assert kappa(p, lam) == pytest.approx(brute_kappa(p, lam), rel=1e-12, abs=1e-12)


def test_kappa_point_utility_is_n(small_evidential):
    _, p, _ = small_evidential
    assert kappa(p, 0.0) == pytest.approx(p.n_obs)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(min_value=0, max_value=2**32 - 1), lam=st.sampled_from(LAMBDAS))
def test_cost_down_never_exceeds_cost_up(seed, lam):
    rng = np.random.default_rng(seed)
    frame = Frame.of_size(3)
    focal, m = random_partition(rng, 4, frame, int(rng.integers(2, 8)))
    p = CredalPartition(frame, focal, m)
    for x in range(p.n_obs):
        for a in focal:
            assert cost_down(p, lam, x, a) <= cost_up(p, lam, x, a) + 1e-12
