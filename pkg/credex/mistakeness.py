# credex/mistakeness.py
"""
Explanation costs over a credal partition.

Everything reduces to two N x K matrices built once per (partition, utility):

    gain[x, a] = sum_B U(A_a, B) m_x(B)          expected utility of assigning A_a
    loss[x, a] = sum_B (1 - U(A_a, B)) m_x(B)    expected cost of assigning A_a

The candidate metaclusters are the partition's focal sets.
"""
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Tuple, Union

import numpy as np

from credex.belief import Subset
from credex.errors import DimensionMismatch, InvalidIndex, ZeroResidentCentroids
from credex.partition import CredalPartition, HardClustering
from credex.utility import Utility, resolve_utility

UtilityRef = Union[Utility, float, str]


@dataclass(frozen=True, eq=False)
class UtilityScores:
    utility: Utility
    umat: np.ndarray   # K x K, umat[a, b] = U(A_a, A_b)
    gain: np.ndarray
    loss: np.ndarray

    @classmethod
    def build(cls, p: CredalPartition, spec: UtilityRef) -> "UtilityScores":
        u = resolve_utility(spec)
        umat = u.matrix(p.focal_sets, p.focal_sets)
        return cls(u, umat, p.masses @ umat.T, p.masses @ (1.0 - umat).T)


@dataclass(frozen=True)
class NodeView:
    """Observations inside a region plus the focal sets whose centroid lies in it."""

    members: Tuple[int, ...]
    resident: Tuple[int, ...]
    complement: Tuple[int, ...]

    @classmethod
    def of(cls, n_focal: int, members: Iterable[int], resident: Iterable[int]) -> "NodeView":
        res = tuple(sorted(set(int(a) for a in resident)))
        if any(not 0 <= a < n_focal for a in res):
            raise InvalidIndex(f"resident focal index outside 0..{n_focal - 1}")
        inside = set(res)
        comp = tuple(a for a in range(n_focal) if a not in inside)
        return cls(tuple(int(j) for j in members), res, comp)

    @classmethod
    def root(cls, p: CredalPartition) -> "NodeView":
        return cls.of(p.n_focal, range(p.n_obs), range(p.n_focal))


def _scores(p: CredalPartition, spec: UtilityRef, scores: Optional[UtilityScores]) -> UtilityScores:
    return scores if scores is not None else UtilityScores.build(p, spec)


def _assigned_row(p: CredalPartition, u: Utility, x: int, assigned: Subset) -> np.ndarray:
    return np.array([u(assigned, b) for b in p.focal_sets]) @ p.masses[x]


def cost_up(p: CredalPartition, spec: UtilityRef, x: int, assigned: Subset) -> float:
    """Expected utility forgone by not assigning x to every other candidate."""
    x = p.check_obs(x)
    u = resolve_utility(spec)
    others = [a for a in p.focal_sets if a != assigned]
    if not others:
        return 0.0
    return float(np.sum(u.matrix(others, p.focal_sets) @ p.masses[x]))


def cost_down(p: CredalPartition, spec: UtilityRef, x: int, assigned: Subset) -> float:
    """Expected cost of assigning x to ``assigned``."""
    x = p.check_obs(x)
    u = resolve_utility(spec)
    return float(np.sum(p.masses[x]) - _assigned_row(p, u, x, assigned))


def mistakeness_up(
    p: CredalPartition, spec: UtilityRef, node: NodeView, scores: Optional[UtilityScores] = None
) -> float:
    if not node.members or not node.complement:
        return 0.0
    s = _scores(p, spec, scores)
    return float(s.gain[np.ix_(node.members, node.complement)].sum())


def mistakeness_down(
    p: CredalPartition, spec: UtilityRef, node: NodeView, scores: Optional[UtilityScores] = None
) -> float:
    if not node.resident:
        raise ZeroResidentCentroids("node holds no centroid; the expected assignment cost is undefined")
    if not node.members:
        return 0.0
    s = _scores(p, spec, scores)
    return float(s.loss[np.ix_(node.members, node.resident)].sum() / len(node.resident))


def lambda_mistakeness(
    p: CredalPartition, lam: UtilityRef, node: NodeView, scores: Optional[UtilityScores] = None
) -> float:
    """Up form for lambda >= 0, down form for lambda < 0."""
    s = _scores(p, lam, scores)
    if s.utility.overline:
        return mistakeness_up(p, s.utility, node, s)
    return mistakeness_down(p, s.utility, node, s)


def representativeness_hard(reference: HardClustering, candidate: HardClustering) -> float:
    if reference.labels.shape != candidate.labels.shape:
        raise DimensionMismatch(f"{reference.labels.size} reference labels vs {candidate.labels.size} candidate labels")
    return float(np.mean(reference.labels == candidate.labels))


def check_assignment(p: CredalPartition, delta: Sequence[int]) -> np.ndarray:
    d = np.asarray(delta, dtype=int)
    if d.shape != (p.n_obs,):
        raise DimensionMismatch(f"assignment has {d.size} entries for {p.n_obs} observations")
    if d.size and (d.min() < 0 or d.max() >= p.n_focal):
        raise InvalidIndex(f"assignment indices must lie in 0..{p.n_focal - 1}")
    return d


def representativeness_evidential(
    p: CredalPartition, spec: UtilityRef, delta: Sequence[int], scores: Optional[UtilityScores] = None
) -> float:
    """Mean expected utility of the assignment ``delta`` (focal index per observation)."""
    d = check_assignment(p, delta)
    s = _scores(p, spec, scores)
    return float(np.mean(s.gain[np.arange(p.n_obs), d]))


def kappa(p: CredalPartition, spec: UtilityRef, candidates: Optional[Sequence[Subset]] = None) -> float:
    u = resolve_utility(spec)
    cands = p.focal_sets if candidates is None else tuple(candidates)
    per_focal = u.matrix(cands, p.focal_sets).sum(axis=0)
    return float(np.sum(p.masses @ per_focal))
