# credex/ecm.py
"""
Synthetic Gaussian data and an evidential c-means fitter (no empty-set
column). Metacluster centroids are barycenters of the singleton centroids.
"""
import hashlib
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from credex.belief import Frame, Subset
from credex.errors import DegenerateInit, NonMonotoneObjective
from credex.log import get_logger
from credex.models import EcmConfig, FocalPolicy, SynthConfig
from credex.partition import CentroidSet, CredalPartition, Dataset, membership

log = get_logger("ecm")

FOCAL_ALIASES = {
    "all": "all_nonempty_subsets",
    "full": "all_nonempty_subsets",
    "qb": "singletons_plus_omega",
    "all_nonempty_subsets": "all_nonempty_subsets",
    "singletons_plus_omega": "singletons_plus_omega",
}

INIT_REDRAWS = 10
# relative slack before a rising objective counts as a real increase
MONOTONE_RTOL = 1e-8


@dataclass(frozen=True, eq=False)
class EcmResult:
    partition: CredalPartition
    centroids: CentroidSet
    objective_history: Tuple[float, ...]
    n_iter: int
    converged: bool

    @property
    def objective(self) -> float:
        return self.objective_history[-1]


def synth_generate(cfg: SynthConfig) -> Dataset:
    rng = np.random.default_rng(cfg.seed)
    blocks: List[np.ndarray] = []
    for comp in cfg.components:
        center = np.asarray(comp.center, dtype=float)
        blocks.append(rng.normal(loc=center, scale=comp.sigma, size=(comp.count, center.size)))
    if cfg.outliers:
        blocks.append(np.asarray(cfg.outliers, dtype=float))
    data = Dataset(np.vstack(blocks), tuple(cfg.feature_names or ()))
    log.info("Generated %d points in %d dimensions (seed=%d)", data.n_obs, data.dim, cfg.seed)
    return data


def focal_sets_for(frame: Frame, policy: FocalPolicy) -> Tuple[Subset, ...]:
    policy = FOCAL_ALIASES.get(policy, policy)
    if policy == "singletons_plus_omega":
        return tuple(frame.singletons()) + (frame.omega,)
    return tuple(frame.all_subsets())


def _data_digest(values: np.ndarray) -> int:
    return int.from_bytes(hashlib.sha256(np.ascontiguousarray(values).tobytes()).digest()[:8], "little")


def _kmeanspp(x: np.ndarray, c: int, rng: np.random.Generator) -> np.ndarray:
    n = x.shape[0]
    chosen = [int(rng.integers(n))]
    d2 = np.sum((x - x[chosen[0]]) ** 2, axis=1)
    for _ in range(1, c):
        total = d2.sum()
        if total > 0:
            nxt = int(rng.choice(n, p=d2 / total))
        else:
            nxt = int(rng.integers(n))
        chosen.append(nxt)
        d2 = np.minimum(d2, np.sum((x - x[nxt]) ** 2, axis=1))
    return x[chosen].copy()


def initial_centroids(x: np.ndarray, c: int, rng: np.random.Generator) -> np.ndarray:
    if x.shape[0] < c:
        raise DegenerateInit(f"{x.shape[0]} observations cannot seed {c} clusters")
    for attempt in range(INIT_REDRAWS):
        v = _kmeanspp(x, c, rng)
        if np.unique(v, axis=0).shape[0] == c:
            return v
        log.debug("Duplicate initial centroids on draw %d, redrawing", attempt + 1)
    raise DegenerateInit(f"could not draw {c} distinct initial centroids in {INIT_REDRAWS} attempts")


def _sq_distances(x: np.ndarray, vbar: np.ndarray) -> np.ndarray:
    diff = x[:, None, :] - vbar[None, :, :]
    return np.einsum("nkd,nkd->nk", diff, diff)


def _update_masses(d2: np.ndarray, card: np.ndarray, alpha: float, beta: float) -> np.ndarray:
    zero = d2 <= 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        logw = -(alpha / (beta - 1.0)) * np.log(card)[None, :] - np.log(d2) / (beta - 1.0)
        logw[zero] = -np.inf
        logw -= logw.max(axis=1, keepdims=True)
        m = np.exp(logw)
        m /= m.sum(axis=1, keepdims=True)

    # a point sitting on a (meta)centroid splits its mass over every such centroid
    hit = zero.any(axis=1)
    if hit.any():
        z = zero[hit].astype(float)
        m[hit] = z / z.sum(axis=1, keepdims=True)
    return m


def _update_centroids(
    x: np.ndarray, m: np.ndarray, memb: np.ndarray, card: np.ndarray, alpha: float, beta: float
) -> np.ndarray:
    mb = m**beta
    rhs = memb.T @ ((mb * card ** (alpha - 1.0)).T @ x)
    lhs = memb.T @ ((card ** (alpha - 2.0) * mb.sum(axis=0))[:, None] * memb)
    try:
        return np.linalg.solve(lhs, rhs)
    except np.linalg.LinAlgError:
        log.warning("Singular centroid system, falling back to least squares")
        return np.linalg.lstsq(lhs, rhs, rcond=None)[0]


def _objective(m: np.ndarray, d2: np.ndarray, card: np.ndarray, alpha: float, beta: float) -> float:
    return float(np.sum(card[None, :] ** alpha * m**beta * d2))


def _fit_sorted(x: np.ndarray, cfg: EcmConfig, focal: Tuple[Subset, ...], rng: np.random.Generator):
    frame = focal[0].frame
    memb = membership(focal, frame)
    card = memb.sum(axis=1)
    bary = memb / card[:, None]

    v = initial_centroids(x, cfg.n_clusters, rng)
    d2 = _sq_distances(x, bary @ v)
    m = _update_masses(d2, card, cfg.alpha, cfg.beta)
    history = [_objective(m, d2, card, cfg.alpha, cfg.beta)]
    converged = False
    it = 0
    for it in range(1, cfg.max_iter + 1):
        v = _update_centroids(x, m, memb, card, cfg.alpha, cfg.beta)
        d2 = _sq_distances(x, bary @ v)
        m = _update_masses(d2, card, cfg.alpha, cfg.beta)
        j_new = _objective(m, d2, card, cfg.alpha, cfg.beta)
        j_old = history[-1]
        if j_new - j_old > MONOTONE_RTOL * max(1.0, abs(j_old)):
            raise NonMonotoneObjective(f"objective rose from {j_old!r} to {j_new!r} at iteration {it}")
        history.append(j_new)
        log.debug("ECM iteration %d: J=%.10g", it, j_new)
        if j_old - j_new < cfg.tol:
            converged = True
            break
    return v, bary @ v, m, history, it, converged


def fit_ecm(data: Dataset, cfg: EcmConfig) -> EcmResult:
    frame = Frame.of_size(cfg.n_clusters)
    focal = focal_sets_for(frame, cfg.focal_policy)

    # fit on lexicographically sorted rows so the result does not depend on row order
    order = np.lexsort(data.values.T[::-1])
    x = data.values[order]
    rng = np.random.default_rng([cfg.seed, _data_digest(x)])
    _, vbar, m_sorted, history, n_iter, converged = _fit_sorted(x, cfg, focal, rng)

    masses = np.empty_like(m_sorted)
    masses[order] = m_sorted
    p = CredalPartition(frame, focal, masses, data)
    derived = tuple(not a.is_singleton for a in focal)
    centroids = CentroidSet(focal, vbar, derived)
    if converged:
        log.info("ECM converged in %d iterations (K=%d, J=%.6g)", n_iter, len(focal), history[-1])
    else:
        log.warning("ECM stopped at max_iter=%d without converging (J=%.6g)", cfg.max_iter, history[-1])
    return EcmResult(p, centroids, tuple(history), n_iter, converged)


def ecm_fit(data: Dataset, cfg: EcmConfig) -> Tuple[CredalPartition, CentroidSet]:
    res = fit_ecm(data, cfg)
    return res.partition, res.centroids
