import json

import numpy as np
import pytest

from credex.belief import Frame
from credex.errors import InputError, UnsupportedDimension
from credex.explain import DnfTable, representativeness_matrix
from credex.iemm import ExplainerTree, Leaf, Split, iemm_fit, tree_from_json
from credex.partition import CentroidSet
from credex.render import ScatterScene, display_key, render_report


@pytest.fixture
def fitted(small_evidential):
    data, p, centroids = small_evidential
    trees = {label: iemm_fit(data, p, centroids, label) for label in ("-inf", "0", "inf")}
    return data, p, centroids, trees


def test_display_keys(frame2):
    w1, w2, omega = frame2.all_subsets()
    assert display_key(w1) == "w1"
    assert display_key(omega) == "Ω"


def test_dnf_markdown_layout(fitted):
    *_, trees = fitted
    text = render_report(DnfTable.from_trees(trees), "md")
    lines = text.splitlines()
    assert lines[0] == "| λ-mistakeness | w1 | w2 | Ω |"
    assert lines[1] == "|---|---|---|---|"
    assert [line.split("|")[1].strip() for line in lines[2:]] == ["-inf", "0", "inf"]
    assert "≤" in text
    assert render_report(DnfTable.from_trees(trees), "markdown") == text


def test_dnf_csv(fitted):
    *_, trees = fitted
    text = render_report(DnfTable.from_trees(trees), "csv")
    assert text.splitlines()[0] == "lambda,w1,w2,Ω"
    assert len(text.splitlines()) == 4


def test_tree_json_round_trips(fitted):
    data, _, _, trees = fitted
    tree = trees["inf"]
    back = tree_from_json(json.loads(render_report(tree, "json")))
    np.testing.assert_array_equal(back.assign(data.values), tree.assign(data.values))
    assert render_report(back, "json") == render_report(tree, "json")


def test_tree_dot(fitted):
    *_, trees = fitted
    dot = render_report(trees["0"], "dot")
    assert dot.startswith('digraph "lambda_0" {')
    assert dot.count("shape=box") == 3
    assert dot.count("->") == 4


def test_matrix_outputs(small_evidential):
    data, p, centroids = small_evidential
    report = representativeness_matrix(data, p, centroids, ["-1", "1"], ["-1", "1"])
    md = render_report(report, "md")
    assert md.splitlines()[0] == "| train λ \\ eval | U^-1 | U^1 |"
    assert "**" in md
    csv = render_report(report, "csv")
    assert csv.splitlines()[0] == "train_lambda,U^-1,U^1"
    doc = json.loads(render_report(report, "json"))
    assert doc["train_lambdas"] == ["-1", "1"]
    assert np.allclose(doc["values"], report.values)


def test_scatter_svg(fitted):
    data, p, _, trees = fitted
    scene = ScatterScene(trees["inf"], data, p)
    svg = render_report(scene, "svg")
    assert svg.startswith("<svg")
    assert svg.count("<circle") == data.n_obs
    assert svg == render_report(scene, "svg-scatter")


def test_scatter_needs_two_dimensions(hard_1d):
    data, _, p, centroids = hard_1d
    tree = iemm_fit(data, p, centroids)
    with pytest.raises(UnsupportedDimension):
        render_report(ScatterScene(tree, data, p), "svg")


def test_unknown_formats(fitted):
    *_, trees = fitted
    with pytest.raises(InputError):
        render_report(trees["0"], "pdf")
    with pytest.raises(InputError):
        render_report(trees["0"], "svg")


def test_tree_dot_escapes_feature_names():
    frame = Frame.of_size(2)
    focal = tuple(frame.singletons())
    centroids = CentroidSet(focal, np.array([[0.0], [2.0]]))
    tree = ExplainerTree(Split(0, 1.0, 0.0, Leaf(0), Leaf(1)), frame, focal, ('say "hi" \\ bye',), centroids)
    dot = render_report(tree, "dot")
    assert 'label="say \\"hi\\" \\\\ bye ≤ 1.00\\ncost 0"' in dot
