import numpy as np
import pytest
from pydantic import ValidationError

from credex.belief import Frame
from credex.ecm import (
    MONOTONE_RTOL,
    _update_masses,
    ecm_fit,
    fit_ecm,
    focal_sets_for,
    initial_centroids,
    synth_generate,
)
from credex.errors import DegenerateInit
from credex.models import EcmConfig
from credex.partition import Dataset
from credex.presets import EASY, FIG1, get_preset


def test_synth_fig1_layout():
    data = synth_generate(FIG1.synth)
    assert data.values.shape == (202, 2)
    np.testing.assert_array_equal(data.values[-2:], [[2.0, 2.0], [6.0, 6.0]])
    np.testing.assert_array_equal(synth_generate(FIG1.synth).values, data.values)
    assert not np.array_equal(synth_generate(FIG1.with_seed(8)).values, data.values)


def test_focal_policies():
    frame = Frame.of_size(3)
    assert len(focal_sets_for(frame, "all")) == 7
    qb = focal_sets_for(frame, "qb")
    assert len(qb) == 4 and qb[-1] == frame.omega


def test_zero_distance_splits_mass():
    card = np.array([1.0, 1.0, 2.0])
    d2 = np.array([[0.0, 4.0, 1.0], [0.0, 0.0, 1.0], [1.0, 1.0, 0.25]])
    m = _update_masses(d2, card, 1.0, 2.0)
    np.testing.assert_allclose(m[0], [1.0, 0.0, 0.0])
    np.testing.assert_allclose(m[1], [0.5, 0.5, 0.0])
    np.testing.assert_allclose(m.sum(axis=1), 1.0)
    # alpha penalises the pair: 1/(2 * 0.25) = 2 against 1 and 1
    np.testing.assert_allclose(m[2], [0.25, 0.25, 0.5])


def test_fit_easy(easy_fit):
    data, res = easy_fit
    p = res.partition
    assert p.n_obs == data.n_obs and p.n_focal == 3
    np.testing.assert_allclose(p.masses.sum(axis=1), 1.0, atol=1e-12)
    hist = np.array(res.objective_history)
    assert np.all(np.diff(hist) <= MONOTONE_RTOL * np.maximum(1.0, np.abs(hist[:-1])))
    assert len(hist) == res.n_iter + 1
    singles = res.centroids.points[:2]
    np.testing.assert_allclose(res.centroids.points[2], singles.mean(axis=0))
    assert res.centroids.derived == (False, False, True)
    np.testing.assert_allclose(sorted(map(tuple, singles)), [(3.0, 5.0), (5.0, 3.0)], atol=1.0)


def test_tight_blobs_get_their_own_singleton():
    rng = np.random.default_rng(5)
    x = np.vstack([rng.normal((0.0, 0.0), 0.1, size=(30, 2)), rng.normal((10.0, 10.0), 0.1, size=(30, 2))])
    p, _ = ecm_fit(Dataset(x), EcmConfig(n_clusters=2, seed=2))
    m = p.masses
    top = m.argmax(axis=1)
    assert set(top[:30]) | set(top[30:]) <= {0, 1}
    assert top[0] != top[30] and len(set(top[:30])) == len(set(top[30:])) == 1
    assert m.max(axis=1).min() > 0.9


def test_equidistant_point_favours_the_pair():
    # v1 = (0, 0), v2 = (2, 0), pair barycenter (1, 0); point (1, 0.5)
    d2 = np.array([[1.25, 1.25, 0.25]])
    m = _update_masses(d2, np.array([1.0, 1.0, 2.0]), 1.0, 2.0)
    assert m[0, 0] == pytest.approx(m[0, 1])
    assert m[0, 2] > m[0, 0]

    offsets = np.random.default_rng(3).normal(0.0, 0.05, size=(20, 2))
    x = np.vstack([offsets, np.array([10.0, 0.0]) - offsets, [[5.0, 0.0]]])
    p, _ = ecm_fit(Dataset(x), EcmConfig(n_clusters=2, seed=0))
    mid = p.masses[-1]
    assert mid[0] == pytest.approx(mid[1], abs=0.02)
    assert mid[2] > max(mid[0], mid[1])


def test_one_point_per_cluster_is_categorical():
    x = np.array([[0.0, 0.0], [4.0, 0.0], [0.0, 5.0]])
    res = fit_ecm(Dataset(x), EcmConfig(n_clusters=3, seed=9))
    assert res.partition.n_focal == 7
    assert res.partition.masses.max(axis=1).min() > 0.99
    singles = res.centroids.points[:3]
    for row in x:
        assert np.min(np.linalg.norm(singles - row, axis=1)) < 1e-6


def test_fit_ignores_row_order():
    data = synth_generate(EASY.synth)
    cfg = EcmConfig(n_clusters=2, seed=4)
    perm = np.random.default_rng(0).permutation(data.n_obs)
    a = fit_ecm(data, cfg)
    b = fit_ecm(Dataset(data.values[perm]), cfg)
    np.testing.assert_array_equal(b.partition.masses, a.partition.masses[perm])
    np.testing.assert_array_equal(b.centroids.points, a.centroids.points)


def test_fit_is_deterministic():
    data = synth_generate(get_preset("full3").synth)
    cfg = EcmConfig(n_clusters=3, focal_policy="singletons_plus_omega", seed=1)
    p1, c1 = ecm_fit(data, cfg)
    p2, c2 = ecm_fit(data, cfg)
    np.testing.assert_array_equal(p1.masses, p2.masses)
    np.testing.assert_array_equal(c1.points, c2.points)
    assert p1.n_focal == 4


def test_degenerate_init():
    rng = np.random.default_rng(0)
    with pytest.raises(DegenerateInit):
        initial_centroids(np.zeros((2, 2)), 3, rng)
    with pytest.raises(DegenerateInit):
        initial_centroids(np.ones((10, 2)), 2, rng)


def test_config_bounds():
    with pytest.raises(ValidationError):
        EcmConfig(n_clusters=1)
    with pytest.raises(ValidationError):
        EcmConfig(n_clusters=2, beta=1.0)
    with pytest.raises(ValidationError):
        EcmConfig(n_clusters=2, focal_policy="pairs")
