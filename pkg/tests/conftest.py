import numpy as np
import pytest

from credex.belief import Frame
from credex.ecm import fit_ecm, synth_generate
from credex.models import EcmConfig
from credex.partition import (
    CentroidSet,
    CredalPartition,
    Dataset,
    HardClustering,
    encode_hard,
    metacluster_centroids,
)
from credex.presets import EASY, FULL3


@pytest.fixture
def frame2() -> Frame:
    return Frame.of_size(2)


@pytest.fixture
def hard_1d():
    """Two well separated 1-D clusters: {0, 1} and {10, 11}."""
    data = Dataset(np.array([[0.0], [1.0], [10.0], [11.0]]))
    hard = HardClustering(Frame.of_size(2), np.array([0, 0, 1, 1]))
    p = encode_hard(hard, data)
    centroids = CentroidSet(p.focal_sets, np.array([[0.5], [10.5]]))
    return data, hard, p, centroids


@pytest.fixture
def small_doc():
    """Partition document with embedded rows; the metacluster centroid is left to be derived."""
    return {
        "frame": ["w1", "w2"],
        "focal_sets": ["w1", "w2", "w1|w2"],
        "masses": [
            [0.8, 0.1, 0.1],
            [0.7, 0.1, 0.2],
            [0.2, 0.2, 0.6],
            [0.1, 0.8, 0.1],
            [0.1, 0.7, 0.2],
        ],
        "centroids": {"w1": [0.0, 0.5], "w2": [5.0, 5.5]},
        "features": ["x", "y"],
        "rows": [[0.0, 0.0], [0.0, 1.0], [2.5, 3.0], [5.0, 5.0], [5.0, 6.0]],
    }


@pytest.fixture
def small_evidential(frame2):
    """Hand-built evidential partition over {w1, w2, w1|w2} in 2-D."""
    data = Dataset(np.array([[0.0, 0.0], [0.5, 1.0], [2.4, 2.6], [2.6, 2.4], [5.0, 5.0], [4.5, 5.5]]))
    focal = tuple(frame2.all_subsets())
    masses = np.array(
        [
            [0.9, 0.0, 0.1],
            [0.7, 0.1, 0.2],
            [0.2, 0.2, 0.6],
            [0.1, 0.3, 0.6],
            [0.0, 0.8, 0.2],
            [0.1, 0.7, 0.2],
        ]
    )
    p = CredalPartition(frame2, focal, masses, data)
    centroids = metacluster_centroids(p, {"w1": [0.25, 0.5], "w2": [4.75, 5.25]})
    return data, p, centroids


@pytest.fixture(scope="session")
def easy_fit():
    data = synth_generate(EASY.synth)
    res = fit_ecm(data, EcmConfig(n_clusters=EASY.n_clusters, focal_policy="all_nonempty_subsets", seed=0))
    return data, res


@pytest.fixture(scope="session")
def full3_qb_fit():
    data = synth_generate(FULL3.synth)
    res = fit_ecm(data, EcmConfig(n_clusters=3, focal_policy="singletons_plus_omega", seed=0))
    return data, res
