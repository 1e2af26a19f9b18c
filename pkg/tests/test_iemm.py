import copy
import math

import numpy as np
import pytest

from credex import config
from credex.belief import Frame
from credex.errors import DimensionMismatch, IndistinguishableCentroids, SchemaViolation
from credex.iemm import (
    Leaf,
    Split,
    candidate_splits,
    iemm_fit,
    leaf_nodes,
    leaf_path_charges,
    resolve_mode,
    split_cost,
    tree_from_json,
    tree_total_mistakeness,
)
from credex.mistakeness import NodeView, mistakeness_up
from credex.models import IemmConfig
from credex.oracle import (
    brute_split_argmin,
    count_mistakes,
    imm_reference_tree,
    node_candidates,
    node_split_cost,
    random_tiny_instance,
)
from credex.partition import CentroidSet, Dataset, HardClustering, encode_hard
from credex.utility import CustomUtility

LAMBDAS = [-math.inf, -1.0, 0.0, 1.0, math.inf]


def _hard_instance(rng):
    c = int(rng.integers(2, 5))
    n = int(rng.integers(20, 201))
    centers = rng.uniform(0.0, 10.0, size=(c, 2))
    labels = np.concatenate([np.arange(c), rng.integers(c, size=n - c)])
    x = centers[labels] + rng.normal(scale=1.5, size=(n, 2))
    data = Dataset(x)
    hard = HardClustering(Frame.of_size(c), labels)
    p = encode_hard(hard, data)
    means = np.array([x[labels == k].mean(axis=0) for k in range(c)])
    return data, hard, p, CentroidSet(p.focal_sets, means)


def _assert_imm_like(tree, k):
    assert tree.n_leaves == k
    assert tree.depth <= k - 1
    np.testing.assert_array_equal(tree.assign(tree.centroids.points), np.arange(k))


def test_separable_1d(hard_1d):
    data, _, p, centroids = hard_1d
    tree = iemm_fit(data, p, centroids, 0.0)
    assert isinstance(tree.root, Split)
    assert tree.root.threshold == 1.0
    assert tree.root.cost == 0.0
    assert tree.n_leaves == 2
    assert tree_total_mistakeness(tree, data, p) == 0.0
    assert tree.predict([0.7]) == p.frame.singleton(0)
    assert tree.predict_index([12.0]) == 1


def test_lambda_zero_on_hard_partition_matches_imm():
    rng = np.random.default_rng(2024)
    for _ in range(100):
        data, hard, p, centroids = _hard_instance(rng)
        tree = iemm_fit(data, p, centroids, 0.0)
        reference = imm_reference_tree(data, hard, centroids.points)
        assert tree.root == reference.root
        total = tree_total_mistakeness(tree, data, p, 0.0)
        assert total == sum(s.cost for s in tree.splits())
        assert total == sum(count_mistakes(hard, n.members, n.resident) for _, n in leaf_nodes(tree, data))


@pytest.mark.parametrize("lam", LAMBDAS)
def test_fitted_trees_are_imm_like(lam, easy_fit, full3_qb_fit, small_evidential):
    for data, res in (easy_fit, full3_qb_fit):
        tree = iemm_fit(data, res.partition, res.centroids, lam)
        _assert_imm_like(tree, res.partition.n_focal)
    data, p, centroids = small_evidential
    _assert_imm_like(iemm_fit(data, p, centroids, lam), p.n_focal)


@pytest.mark.parametrize("lam", LAMBDAS + [0.5, 2.0])
def test_root_split_is_brute_force_argmin(lam):
    rng = np.random.default_rng(int(abs(lam) * 10) if math.isfinite(lam) else 99 + (lam > 0))
    for _ in range(25):
        inst = random_tiny_instance(rng, n=10, n_clusters=int(rng.integers(2, 4)), n_focal=4)
        data, p, cen = inst.data, inst.partition, inst.centroids
        members = list(range(p.n_obs))
        resident = list(range(p.n_focal))
        cands = node_candidates(data, cen, members, resident)
        assert {(c.dim, c.threshold) for c in candidate_splits(data, cen, NodeView.root(p))} == {
            (c.dim, c.threshold) for c in cands
        }
        best = brute_split_argmin(cands, lambda c: node_split_cost(data, p, cen, members, resident, c, lam))
        tree = iemm_fit(data, p, cen, lam)
        assert tree.root.cost == pytest.approx(best.cost, rel=1e-9, abs=1e-12)
        assert (tree.root.dim, tree.root.threshold) == (best.dim, best.threshold)
        for c in cands[:6]:
            direct = split_cost(data, p, NodeView.root(p), cen, c, lam)
            looped = node_split_cost(data, p, cen, members, resident, c, lam)
            assert direct == pytest.approx(looped, rel=1e-9, abs=1e-12)


def _walk_with_nodes(data, cen, node, members, resident):
    if isinstance(node, Leaf):
        return
    yield node, members, resident
    x = data.values[:, node.dim]
    v = cen.points[:, node.dim]
    left_m = [j for j in members if x[j] <= node.threshold]
    right_m = [j for j in members if x[j] > node.threshold]
    left_r = [a for a in resident if v[a] <= node.threshold]
    right_r = [a for a in resident if v[a] > node.threshold]
    yield from _walk_with_nodes(data, cen, node.left, left_m, left_r)
    yield from _walk_with_nodes(data, cen, node.right, right_m, right_r)


@pytest.mark.parametrize("lam", [-math.inf, -1.0, 0.0, 0.5, 1.0, math.inf])
def test_every_split_is_brute_force_argmin(lam):
    rng = np.random.default_rng(7 + LAMBDAS.index(lam) if lam in LAMBDAS else 71)
    checked = 0
    for _ in range(15):
        inst = random_tiny_instance(rng, n=10, n_clusters=3, n_focal=5)
        data, p, cen = inst.data, inst.partition, inst.centroids
        tree = iemm_fit(data, p, cen, lam)
        nodes = _walk_with_nodes(data, cen, tree.root, list(range(p.n_obs)), list(range(p.n_focal)))
        for split, members, resident in nodes:
            cands = node_candidates(data, cen, members, resident)
            best = brute_split_argmin(cands, lambda c: node_split_cost(data, p, cen, members, resident, c, lam))
            assert split.cost == pytest.approx(best.cost, rel=1e-9, abs=1e-12)
            assert (split.dim, split.threshold) == (best.dim, best.threshold)
            checked += 1
    assert checked >= 15 * 4


@pytest.mark.parametrize("lam", [0.0, 1.0, math.inf])
def test_overline_costs_telescope(lam, easy_fit):
    data, res = easy_fit
    p = res.partition
    tree = iemm_fit(data, p, res.centroids, lam)
    total = tree_total_mistakeness(tree, data, p)
    assert sum(s.cost for s in tree.splits()) == pytest.approx(total, rel=1e-9)
    charges = leaf_path_charges(tree, data, p)
    for focal, node in leaf_nodes(tree, data):
        assert sum(charges[focal]) == pytest.approx(mistakeness_up(p, lam, node), rel=1e-9, abs=1e-12)


def test_json_round_trip(small_evidential):
    data, p, centroids = small_evidential
    tree = iemm_fit(data, p, centroids, IemmConfig(lam=-1.0))
    doc = tree.to_json()
    assert doc["lambda"] == "-1" and doc["mode"] == "down"
    back = tree_from_json(doc)
    assert back.to_json() == doc
    np.testing.assert_array_equal(back.assign(data.values), tree.assign(data.values))
    with pytest.raises(SchemaViolation):
        tree_from_json({"frame": ["w1"], "tree": {}})


def _broken(doc, edit):
    out = copy.deepcopy(doc)
    edit(out["tree"])
    return out


@pytest.mark.parametrize(
    "edit",
    [
        lambda t: t.update(dim=5),
        lambda t: t.update(dim=-1),
        lambda t: t.update(threshold=float("nan")),
        lambda t: t.update(left=copy.deepcopy(t["right"])),
    ],
)
def test_tree_document_structure_is_checked(small_evidential, edit):
    data, p, centroids = small_evidential
    doc = iemm_fit(data, p, centroids, 0.0).to_json()
    with pytest.raises(SchemaViolation):
        tree_from_json(_broken(doc, edit))


def test_tree_document_rejects_empty_region(small_evidential):
    data, p, centroids = small_evidential
    doc = iemm_fit(data, p, centroids, 0.0).to_json()
    inner = doc["tree"]["left"] if "dim" in doc["tree"]["left"] else doc["tree"]["right"]
    went_left = inner is doc["tree"]["left"]
    # same dimension as the root, on the wrong side of its threshold
    inner["dim"] = doc["tree"]["dim"]
    inner["threshold"] = doc["tree"]["threshold"] + (1.0 if went_left else -1.0)
    with pytest.raises(SchemaViolation):
        tree_from_json(doc)


def test_threaded_search_gives_same_tree(monkeypatch, easy_fit):
    data, res = easy_fit
    serial = iemm_fit(data, res.partition, res.centroids, 1.0)
    monkeypatch.setattr(config, "CREDEX_THREADS", 4)
    threaded = iemm_fit(data, res.partition, res.centroids, 1.0)
    assert threaded.to_json() == serial.to_json()


def test_input_errors(small_evidential):
    data, p, centroids = small_evidential
    clash = CentroidSet(p.focal_sets, np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 1.0]]))
    with pytest.raises(IndistinguishableCentroids):
        iemm_fit(data, p, clash)
    with pytest.raises(DimensionMismatch):
        iemm_fit(Dataset(data.values[:3]), p, centroids)
    tree = iemm_fit(data, p, centroids)
    with pytest.raises(DimensionMismatch):
        tree.predict([1.0, 2.0, 3.0])


def test_resolve_mode():
    u, overline, label = resolve_mode(IemmConfig(lam=-1.0, mode="up"))
    assert overline and label == "-1"
    assert IemmConfig.model_validate({"lambda": "inf"}).lam == math.inf
    assert resolve_mode("-inf")[1:] == (False, "-inf")
    frame = Frame.of_size(2)
    custom = CustomUtility.from_table(frame, {("w1|w2", "w1"): 0.5}, label="half", up=False)
    assert resolve_mode(custom)[1:] == (False, "half")


def test_custom_utility_tree(small_evidential):
    data, p, centroids = small_evidential
    custom = CustomUtility.from_table(p.frame, {("w1|w2", "w1"): 0.5, ("w1|w2", "w2"): 0.5}, label="half")
    tree = iemm_fit(data, p, centroids, custom)
    assert tree.label == "half"
    _assert_imm_like(tree, p.n_focal)
    assert tree_total_mistakeness(tree, data, p, custom) == pytest.approx(sum(s.cost for s in tree.splits()))
    assert tree_total_mistakeness(tree, data, p) == pytest.approx(tree_total_mistakeness(tree, data, p, custom))
    charges = leaf_path_charges(tree, data, p)
    assert sum(sum(c) for c in charges.values()) == pytest.approx(sum(s.cost for s in tree.splits()))


def test_leaf_routing(small_evidential):
    data, p, centroids = small_evidential
    tree = iemm_fit(data, p, centroids, 0.0)
    for focal, path in tree.leaves():
        point = centroids.points[focal]
        for split, went_left in path:
            assert (point[split.dim] <= split.threshold) == went_left
    assert all(isinstance(n, (Leaf, Split)) for n in tree.nodes())
