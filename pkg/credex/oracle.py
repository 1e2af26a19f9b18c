# credex/oracle.py
"""
Slow, independent re-derivations used by the test-suite to cross-check the
vectorised code paths: plain loops over bit-patterns, no shared inner loops.
"""
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from credex.belief import Frame, Subset
from credex.errors import InstanceTooLarge, SchemaViolation
from credex.iemm import ExplainerTree, Leaf, Node, Split, SplitCandidate
from credex.partition import CentroidSet, CredalPartition, Dataset, HardClustering, encode_hard
from credex.utility import Utility, UtilitySpec, format_lambda, parse_lambda

MAX_K = 4
MAX_N = 12
MAX_D = 3
MAX_THRESHOLDS = 16
TIE = 1e-12


def _popcount(mask: int) -> int:
    return bin(mask).count("1")


def _lambda_utility(lam: float, a: int, b: int) -> float:
    if lam == 0:
        return 1.0 if a == b else 0.0
    if lam == math.inf:
        return 1.0 if b & ~a == 0 else 0.0
    if lam == -math.inf:
        return 1.0 if a & ~b == 0 else 0.0
    inside = (b & ~a == 0) if lam > 0 else (a & ~b == 0)
    if not inside:
        return 0.0
    return (_popcount(a & b) / _popcount(a | b)) ** (1.0 / abs(lam))


def utility_fn(spec: Union[Utility, float, str]) -> Tuple[Callable[[Subset, Subset], float], bool]:
    """(U(A, B), overline?) without going through the main utility code for lambda specs."""
    if isinstance(spec, UtilitySpec):
        lam = spec.lam
    elif isinstance(spec, Utility):
        return spec, spec.overline
    else:
        lam = parse_lambda(spec)
    return (lambda a, b: _lambda_utility(lam, a.mask, b.mask)), lam >= 0


@dataclass(frozen=True, eq=False)
class TinyInstance:
    data: Dataset
    partition: CredalPartition
    centroids: CentroidSet

    def check(self) -> None:
        n, d = self.data.values.shape
        k = self.partition.n_focal
        if k > MAX_K or n > MAX_N or d > MAX_D:
            raise InstanceTooLarge(f"exhaustive search caps K<={MAX_K}, N<={MAX_N}, D<={MAX_D}; got K={k}, N={n}, D={d}")


# ---------- counting ----------
def count_mistakes(hard: HardClustering, members: Iterable[int], resident: Iterable[int]) -> int:
    """Points of the node whose own cluster centroid is not in the node."""
    inside = set(int(c) for c in resident)
    return sum(1 for j in members if int(hard.labels[int(j)]) not in inside)


def brute_split_argmin(
    candidates: Sequence[SplitCandidate], cost: Callable[[SplitCandidate], float]
) -> SplitCandidate:
    if not candidates:
        raise SchemaViolation("no candidate splits")
    best: Optional[SplitCandidate] = None
    for cand in sorted(candidates, key=lambda c: (c.dim, c.threshold)):
        c = float(cost(cand))
        if best is None or c < best.cost - TIE * max(1.0, abs(best.cost)):
            best = SplitCandidate(cand.dim, cand.threshold, c)
    return best


def node_split_cost(
    data: Dataset,
    p: CredalPartition,
    centroids: CentroidSet,
    members: Sequence[int],
    resident: Sequence[int],
    cand: SplitCandidate,
    spec: Union[Utility, float, str],
) -> float:
    """Loop-level split cost (incremental separation upward, child down-mistakeness downward)."""
    u, overline = utility_fn(spec)
    focal = p.focal_sets
    x = data.values
    v = centroids.points
    s_l = [j for j in members if x[j][cand.dim] <= cand.threshold]
    s_r = [j for j in members if x[j][cand.dim] > cand.threshold]
    f_l = [a for a in resident if v[a][cand.dim] <= cand.threshold]
    f_r = [a for a in resident if v[a][cand.dim] > cand.threshold]
    if not f_l or not f_r:
        return math.inf

    def expected(j: int, a: int, flip: bool) -> float:
        total = 0.0
        for b in range(len(focal)):
            ub = u(focal[a], focal[b])
            total += (1.0 - ub if flip else ub) * p.masses[j][b]
        return total

    if overline:
        return sum(expected(j, a, False) for j in s_l for a in f_r) + sum(
            expected(j, a, False) for j in s_r for a in f_l
        )
    down_l = sum(expected(j, a, True) for j in s_l for a in f_l) / len(f_l)
    down_r = sum(expected(j, a, True) for j in s_r for a in f_r) / len(f_r)
    return down_l + down_r


def node_candidates(data: Dataset, centroids: CentroidSet, members: Sequence[int], resident: Sequence[int]) -> List[SplitCandidate]:
    out = []
    for i in range(data.dim):
        cvals = [float(centroids.points[a][i]) for a in resident]
        lo, hi = min(cvals), max(cvals)
        values = sorted(set(cvals) | {float(data.values[j][i]) for j in members})
        out.extend(SplitCandidate(i, t) for t in values if lo <= t < hi)
    return out


# ---------- exhaustive tree search ----------
def _leaf_mistakeness(
    p: CredalPartition, u: Callable, overline: bool, members: FrozenSet[int], resident: FrozenSet[int]
) -> float:
    focal = p.focal_sets
    k = len(focal)
    total = 0.0
    for j in members:
        for a in range(k):
            if overline and a in resident:
                continue
            if not overline and a not in resident:
                continue
            for b in range(k):
                ub = u(focal[a], focal[b])
                total += (ub if overline else 1.0 - ub) * p.masses[j][b]
    if overline:
        return total
    return total / len(resident)


def exhaustive_best_tree(inst: TinyInstance, lam: Union[Utility, float, str]) -> Tuple[float, ExplainerTree]:
    """Minimal total mistakeness over every centroid-separating threshold tree."""
    inst.check()
    data, p, cen = inst.data, inst.partition, inst.centroids
    u, overline = utility_fn(lam)

    @lru_cache(maxsize=None)
    def best(members: FrozenSet[int], resident: FrozenSet[int]) -> Tuple[float, Node]:
        if len(resident) == 1:
            return _leaf_mistakeness(p, u, overline, members, resident), Leaf(next(iter(resident)))
        cands = node_candidates(data, cen, sorted(members), sorted(resident))
        per_dim: Dict[int, int] = {}
        for c in cands:
            per_dim[c.dim] = per_dim.get(c.dim, 0) + 1
        if any(n > MAX_THRESHOLDS for n in per_dim.values()):
            raise InstanceTooLarge(f"more than {MAX_THRESHOLDS} thresholds in one dimension")
        if not cands:
            raise SchemaViolation("resident centroids cannot be separated")
        winner: Optional[Tuple[float, Node]] = None
        for c in cands:
            col = data.values[:, c.dim]
            vcol = cen.points[:, c.dim]
            left_m = frozenset(j for j in members if col[j] <= c.threshold)
            left_r = frozenset(a for a in resident if vcol[a] <= c.threshold)
            lv, ln = best(left_m, left_r)
            rv, rn = best(members - left_m, resident - left_r)
            total = lv + rv
            if winner is None or total < winner[0] - TIE * max(1.0, abs(winner[0])):
                winner = (total, Split(c.dim, c.threshold, 0.0, ln, rn))
        return winner

    value, root = best(frozenset(range(p.n_obs)), frozenset(range(p.n_focal)))
    if isinstance(lam, UtilitySpec):
        label = format_lambda(lam.lam)
    elif isinstance(lam, Utility):
        label = lam.name
    else:
        label = format_lambda(parse_lambda(lam))
    tree = ExplainerTree(root, p.frame, p.focal_sets, data.feature_names, cen, label, overline, lam if isinstance(lam, Utility) else None)
    return value, tree


# ---------- identities ----------
@dataclass(frozen=True)
class AffineCheck:
    holds: bool
    residual_up: float
    residual_down: float
    kappa: float
    representativeness: float
    total_up: float
    total_down: float


def _route(root: Node, z: Sequence[float]) -> int:
    node = root
    while isinstance(node, Split):
        node = node.left if z[node.dim] <= node.threshold else node.right
    return node.focal


def brute_kappa(p: CredalPartition, spec: Union[Utility, float, str], candidates: Optional[Sequence[Subset]] = None) -> float:
    u, _ = utility_fn(spec)
    cands = list(p.focal_sets if candidates is None else candidates)
    total = 0.0
    for j in range(p.n_obs):
        for b, fb in enumerate(p.focal_sets):
            for c in cands:
                total += p.masses[j][b] * u(c, fb)
    return total


def verify_affine_identities(
    p: CredalPartition,
    spec: Union[Utility, float, str],
    tree: ExplainerTree,
    data: Optional[Dataset] = None,
    kappa_offset: float = 0.0,
    tol: float = 1e-9,
) -> AffineCheck:
    data = data or p.dataset
    if data is None:
        raise SchemaViolation("the identities need the observations")
    u, _ = utility_fn(spec)
    focal = p.focal_sets
    k = len(focal)
    n = p.n_obs
    leaf_of_obs = [_route(tree.root, data.values[j]) for j in range(n)]
    leaf_of_cen = [_route(tree.root, tree.centroids.points[a]) for a in range(k)]

    rep = up = down = 0.0
    for j in range(n):
        leaf = leaf_of_obs[j]
        resident = [a for a in range(k) if leaf_of_cen[a] == leaf]
        for b in range(k):
            m = p.masses[j][b]
            rep += u(focal[leaf], focal[b]) * m
            for a in range(k):
                ub = u(focal[a], focal[b])
                if a in resident:
                    down += (1.0 - ub) * m / len(resident)
                else:
                    up += ub * m
    kap = brute_kappa(p, spec) + kappa_offset
    r_up = n * (rep / n) + up - kap
    r_down = (down - up) - (n - kap)
    return AffineCheck(abs(r_up) < tol and abs(r_down) < tol, r_up, r_down, kap, rep / n, up, down)


# ---------- generators ----------
def random_imm_tree(rng: np.random.Generator, p: CredalPartition, centroids: CentroidSet, feature_names: Sequence[str]) -> ExplainerTree:
    """A random threshold tree with one leaf per centroid."""
    pts = centroids.points

    def grow(resident: List[int]) -> Node:
        if len(resident) == 1:
            return Leaf(resident[0])
        dims = [i for i in range(pts.shape[1]) if len({pts[a][i] for a in resident}) > 1]
        if not dims:
            raise SchemaViolation("coinciding centroids")
        i = int(rng.choice(dims))
        values = sorted({float(pts[a][i]) for a in resident})
        cut = int(rng.integers(len(values) - 1))
        t = values[cut] + float(rng.random()) * (values[cut + 1] - values[cut])
        if t >= values[cut + 1]:
            t = values[cut]
        left = [a for a in resident if pts[a][i] <= t]
        right = [a for a in resident if pts[a][i] > t]
        return Split(i, t, 0.0, grow(left), grow(right))

    root = grow(list(range(len(centroids.focal_sets))))
    return ExplainerTree(root, p.frame, p.focal_sets, tuple(feature_names), centroids)


def random_partition(
    rng: np.random.Generator, n: int, frame: Frame, n_focal: int, categorical: bool = False
) -> Tuple[Tuple[Subset, ...], np.ndarray]:
    pool = frame.all_subsets()
    pick = sorted(rng.choice(len(pool), size=n_focal, replace=False).tolist())
    focal = tuple(pool[i] for i in pick)
    if categorical:
        m = np.zeros((n, n_focal))
        m[np.arange(n), rng.integers(n_focal, size=n)] = 1.0
    else:
        m = rng.dirichlet(np.full(n_focal, 0.7), size=n)
    return focal, m


def random_tiny_instance(
    rng: np.random.Generator,
    n: int = 8,
    dim: int = 2,
    n_clusters: int = 2,
    n_focal: int = 3,
    categorical: bool = False,
) -> TinyInstance:
    frame = Frame.of_size(n_clusters)
    n_focal = min(n_focal, 2**n_clusters - 1)
    focal, m = random_partition(rng, n, frame, n_focal, categorical)
    # integer grid keeps threshold counts small and ties frequent
    values = rng.integers(0, 6, size=(n, dim)).astype(float)
    data = Dataset(values)
    points = rng.permutation(np.unique(rng.integers(0, 6, size=(4 * n_focal, dim)).astype(float), axis=0))
    while points.shape[0] < n_focal:
        points = np.unique(np.vstack([points, rng.integers(0, 6, size=(n_focal, dim))]), axis=0)
    p = CredalPartition(frame, focal, m, data)
    inst = TinyInstance(data, p, CentroidSet(focal, points[:n_focal]))
    inst.check()
    return inst


def imm_reference_tree(data: Dataset, hard: HardClustering, singleton_centroids: np.ndarray) -> ExplainerTree:
    """
    Plain mistake-minimising tree on a hard clustering: each split minimises
    the number of points separated from their own (resident) cluster centroid.
    Recorded split costs are those counts.
    """
    v = np.asarray(singleton_centroids, dtype=float)
    x = data.values
    labels = hard.labels

    def grow(members: np.ndarray, resident: List[int]) -> Node:
        if len(resident) == 1:
            return Leaf(resident[0])
        in_node = np.isin(labels[members], resident)
        best: Optional[Tuple[int, int, float]] = None
        for i in range(x.shape[1]):
            cvals = v[resident, i]
            lo, hi = cvals.min(), cvals.max()
            for t in np.unique(np.concatenate([x[members, i], cvals])):
                if not lo <= t < hi:
                    continue
                point_left = x[members, i] <= t
                centroid_left = v[labels[members], i] <= t
                mistakes = int(np.sum(in_node & (point_left != centroid_left)))
                if best is None or mistakes < best[0]:
                    best = (mistakes, i, float(t))
        if best is None:
            raise SchemaViolation("coinciding centroids")
        mistakes, i, t = best
        go_left = x[members, i] <= t
        return Split(
            i,
            t,
            float(mistakes),
            grow(members[go_left], [c for c in resident if v[c, i] <= t]),
            grow(members[~go_left], [c for c in resident if v[c, i] > t]),
        )

    p = encode_hard(hard, data)
    root = grow(np.arange(data.n_obs), list(range(hard.frame.cardinality)))
    return ExplainerTree(root, p.frame, p.focal_sets, data.feature_names, CentroidSet(p.focal_sets, v), "0", True)
