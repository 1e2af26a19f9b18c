# credex/iemm.py
"""
Greedy axis-aligned threshold trees with one leaf per focal set.

Each node holds the observations reaching it and the focal sets whose
centroid lies in its region. A split ``x[dim] <= threshold`` must send at
least one resident centroid to each side; among all such splits the one
with the smallest cost wins (lowest dimension, then lowest threshold on
ties).

Split cost, overline mode (lambda >= 0): expected utility lost by the
observations on one side for the centroids sent to the other side. These
increments add up over the tree to the leaf-level up-mistakeness.
Underline mode (lambda < 0): down-mistakeness of both children.
"""
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from credex import config
from credex.belief import Frame, Subset
from credex.errors import DimensionMismatch, IndistinguishableCentroids, SchemaViolation
from credex.log import get_logger
from credex.mistakeness import NodeView, UtilityScores, mistakeness_down, mistakeness_up
from credex.models import IemmConfig
from credex.partition import CentroidSet, CredalPartition, Dataset
from credex.utility import UTILITY_REGISTRY, Utility, UtilitySpec, format_lambda, parse_lambda, resolve_utility

log = get_logger("iemm")

TIE_RTOL = 1e-12


@dataclass(frozen=True)
class Leaf:
    focal: int


@dataclass(frozen=True)
class Split:
    dim: int
    threshold: float
    cost: float
    left: "Node"
    right: "Node"


Node = Union[Leaf, Split]


@dataclass(frozen=True)
class SplitCandidate:
    dim: int
    threshold: float
    cost: float = math.nan


@dataclass(frozen=True, eq=False)
class ExplainerTree:
    root: Node
    frame: Frame
    focal_sets: Tuple[Subset, ...]
    feature_names: Tuple[str, ...]
    centroids: CentroidSet
    label: str = "0"
    overline: bool = True
    utility: Optional[Utility] = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return len(self.feature_names)

    def nodes(self) -> Iterator[Node]:
        stack: List[Node] = [self.root]
        while stack:
            node = stack.pop()
            yield node
            if isinstance(node, Split):
                stack.extend((node.right, node.left))

    def splits(self) -> List[Split]:
        return [n for n in self.nodes() if isinstance(n, Split)]

    def leaves(self) -> List[Tuple[int, Tuple[Tuple[Split, bool], ...]]]:
        """(focal index, path) per leaf, left to right; path items are (split, went_left)."""
        out: List[Tuple[int, Tuple[Tuple[Split, bool], ...]]] = []

        def walk(node: Node, path: Tuple[Tuple[Split, bool], ...]) -> None:
            if isinstance(node, Leaf):
                out.append((node.focal, path))
                return
            walk(node.left, path + ((node, True),))
            walk(node.right, path + ((node, False),))

        walk(self.root, ())
        return out

    @property
    def n_leaves(self) -> int:
        return sum(1 for n in self.nodes() if isinstance(n, Leaf))

    @property
    def depth(self) -> int:
        return max(len(path) for _, path in self.leaves())

    def predict_index(self, point: Sequence[float]) -> int:
        z = np.asarray(point, dtype=float).ravel()
        if z.size != self.dim:
            raise DimensionMismatch(f"point has {z.size} coordinates, tree expects {self.dim}")
        node = self.root
        while isinstance(node, Split):
            node = node.left if z[node.dim] <= node.threshold else node.right
        return node.focal

    def predict(self, point: Sequence[float]) -> Subset:
        return self.focal_sets[self.predict_index(point)]

    def assign(self, points: np.ndarray) -> np.ndarray:
        """Focal index for every row of ``points``."""
        z = np.asarray(points, dtype=float)
        if z.ndim == 1:
            z = z.reshape(1, -1)
        if z.shape[1] != self.dim:
            raise DimensionMismatch(f"points have {z.shape[1]} columns, tree expects {self.dim}")
        out = np.full(z.shape[0], -1, dtype=int)

        def route(node: Node, idx: np.ndarray) -> None:
            if isinstance(node, Leaf):
                out[idx] = node.focal
                return
            go_left = z[idx, node.dim] <= node.threshold
            route(node.left, idx[go_left])
            route(node.right, idx[~go_left])

        route(self.root, np.arange(z.shape[0]))
        return out

    def to_json(self) -> Dict[str, Any]:
        return {
            "lambda": self.label,
            "mode": "up" if self.overline else "down",
            "frame": list(self.frame.labels),
            "focal_sets": [a.key for a in self.focal_sets],
            "features": list(self.feature_names),
            "centroids": self.centroids.as_dict(),
            "tree": _node_to_json(self.root, self.focal_sets),
        }


def _node_to_json(node: Node, focal: Sequence[Subset]) -> Dict[str, Any]:
    if isinstance(node, Leaf):
        return {"leaf": focal[node.focal].key}
    return {
        "dim": node.dim,
        "threshold": node.threshold,
        "cost": node.cost,
        "left": _node_to_json(node.left, focal),
        "right": _node_to_json(node.right, focal),
    }


def tree_from_json(doc: Mapping[str, Any]) -> ExplainerTree:
    try:
        frame = Frame(tuple(doc["frame"]))
        focal = tuple(frame.parse(k) for k in doc["focal_sets"])
        index = {a.mask: k for k, a in enumerate(focal)}

        def build(raw: Mapping[str, Any]) -> Node:
            if "leaf" in raw:
                return Leaf(index[frame.parse(raw["leaf"]).mask])
            return Split(
                int(raw["dim"]), float(raw["threshold"]), float(raw["cost"]), build(raw["left"]), build(raw["right"])
            )

        raw_c = doc["centroids"]
        centroids = CentroidSet(focal, np.array([raw_c[a.key] for a in focal], dtype=float))
        tree = ExplainerTree(
            build(doc["tree"]),
            frame,
            focal,
            tuple(doc["features"]),
            centroids,
            str(doc.get("lambda", "0")),
            doc.get("mode", "up") == "up",
        )
    except (KeyError, TypeError, ValueError) as e:
        raise SchemaViolation(f"invalid tree document: {e!r}") from None
    _check_structure(tree)
    return tree


def _check_structure(tree: ExplainerTree) -> None:
    if tree.centroids.dim != tree.dim:
        raise SchemaViolation(f"centroids have {tree.centroids.dim} coordinates for {tree.dim} features")
    seen: List[int] = []

    def walk(node: Node, lo: np.ndarray, hi: np.ndarray) -> None:
        if isinstance(node, Leaf):
            seen.append(node.focal)
            return
        if not 0 <= node.dim < tree.dim:
            raise SchemaViolation(f"split dimension {node.dim} outside 0..{tree.dim - 1}")
        t = node.threshold
        if not math.isfinite(t) or not lo[node.dim] < t < hi[node.dim]:
            raise SchemaViolation(f"threshold {t!r} on dimension {node.dim} leaves an empty region")
        left_hi, right_lo = hi.copy(), lo.copy()
        left_hi[node.dim] = t
        right_lo[node.dim] = t
        walk(node.left, lo, left_hi)
        walk(node.right, right_lo, hi)

    walk(tree.root, np.full(tree.dim, -np.inf), np.full(tree.dim, np.inf))
    if sorted(seen) != list(range(len(tree.focal_sets))):
        raise SchemaViolation("every focal set must label exactly one leaf")
    routed = tree.assign(tree.centroids.points)
    if not np.array_equal(routed, np.arange(len(tree.focal_sets))):
        raise SchemaViolation("some centroid does not reach the leaf of its own focal set")


# ---------------------- fitting ----------------------
def resolve_mode(cfg: Union[IemmConfig, Utility, float, str]) -> Tuple[Utility, bool, str]:
    """(utility, overline?, label) for a config, a utility or a bare lambda."""
    if isinstance(cfg, IemmConfig):
        return UtilitySpec(cfg.lam), cfg.overline, cfg.label()
    if isinstance(cfg, UtilitySpec):
        return cfg, cfg.overline, format_lambda(cfg.lam)
    if isinstance(cfg, Utility):
        return cfg, cfg.overline, cfg.name
    if isinstance(cfg, str) and cfg in UTILITY_REGISTRY:
        u = UTILITY_REGISTRY[cfg]
        return u, u.overline, cfg
    lam = parse_lambda(cfg)
    u = resolve_utility(lam)
    return u, u.overline, format_lambda(lam)


def _check_inputs(data: Dataset, p: CredalPartition, centroids: CentroidSet) -> None:
    if p.n_obs != data.n_obs:
        raise DimensionMismatch(f"{p.n_obs} mass rows for {data.n_obs} observations")
    if tuple(centroids.focal_sets) != tuple(p.focal_sets):
        raise SchemaViolation("centroids are not aligned with the partition's focal sets")
    if centroids.dim != data.dim:
        raise DimensionMismatch(f"centroids have {centroids.dim} coordinates, data has {data.dim}")
    uniq = np.unique(centroids.points, axis=0)
    if uniq.shape[0] != centroids.points.shape[0]:
        raise IndistinguishableCentroids("two focal sets share the same centroid; no threshold can separate them")


def _prefix(a: np.ndarray, axis: int) -> np.ndarray:
    """Sums over the first i entries along ``axis`` (length + 1, starting at 0)."""
    pad = [(0, 0)] * a.ndim
    pad[axis] = (1, 0)
    return np.pad(np.cumsum(a, axis=axis), pad)


def _suffix(a: np.ndarray, axis: int) -> np.ndarray:
    """Sums over entries i.. along ``axis`` (length + 1, ending at 0)."""
    rev = np.flip(a, axis=axis)
    pad = [(0, 0)] * a.ndim
    pad[axis] = (1, 0)
    return np.flip(np.pad(np.cumsum(rev, axis=axis), pad), axis=axis)


def _dimension_costs(
    x: np.ndarray, v: np.ndarray, members: np.ndarray, resident: np.ndarray, scores: UtilityScores, overline: bool
) -> Optional[Tuple[np.ndarray, np.ndarray]]:
    """Candidate thresholds and their costs for one dimension, or None if no split exists."""
    lo, hi = v.min(), v.max()
    if lo == hi:
        return None
    thresholds = np.unique(np.concatenate([x, v]))
    thresholds = thresholds[(thresholds >= lo) & (thresholds < hi)]

    px = np.argsort(x, kind="stable")
    pv = np.argsort(v, kind="stable")
    n_left = np.searchsorted(x[px], thresholds, side="right")
    c_left = np.searchsorted(v[pv], thresholds, side="right")

    rows = members[px]
    cols = resident[pv]
    if overline:
        w = scores.gain[np.ix_(rows, cols)]
        # left points x centroids sent right, plus right points x centroids sent left
        left_cross = _prefix(_suffix(w, axis=1), axis=0)
        right_cross = _suffix(_prefix(w, axis=1), axis=0)
        cost = left_cross[n_left, c_left] + right_cross[n_left, c_left]
    else:
        g = scores.loss[np.ix_(rows, cols)]
        left_own = _prefix(_prefix(g, axis=1), axis=0)
        right_own = _suffix(_suffix(g, axis=1), axis=0)
        k = len(resident)
        cost = left_own[n_left, c_left] / c_left + right_own[n_left, c_left] / (k - c_left)
    return thresholds, cost


def _best_split(
    data: Dataset, centroids: CentroidSet, node: NodeView, scores: UtilityScores, overline: bool
) -> SplitCandidate:
    members = np.asarray(node.members, dtype=int)
    resident = np.asarray(node.resident, dtype=int)

    def per_dim(i: int):
        return _dimension_costs(
            data.values[members, i], centroids.points[resident, i], members, resident, scores, overline
        )

    dims = range(data.dim)
    if config.CREDEX_THREADS > 1 and data.dim > 1:
        with ThreadPoolExecutor(max_workers=min(config.CREDEX_THREADS, data.dim)) as pool:
            results = list(pool.map(per_dim, dims))
    else:
        results = [per_dim(i) for i in dims]

    best: Optional[SplitCandidate] = None
    for i, res in enumerate(results):
        if res is None:
            continue
        thresholds, cost = res
        low = cost.min()
        j = int(np.flatnonzero(cost <= low + TIE_RTOL * max(1.0, abs(low)))[0])
        if best is None or cost[j] < best.cost - TIE_RTOL * max(1.0, abs(best.cost)):
            best = SplitCandidate(i, float(thresholds[j]), float(cost[j]))
    if best is None:
        labels = [centroids.focal_sets[a].key for a in resident]
        raise IndistinguishableCentroids(f"centroids of {labels} coincide in every dimension")
    return best


def iemm_fit(
    data: Dataset,
    p: CredalPartition,
    centroids: CentroidSet,
    cfg: Union[IemmConfig, Utility, float, str] = 0.0,
) -> ExplainerTree:
    _check_inputs(data, p, centroids)
    u, overline, label = resolve_mode(cfg)
    scores = UtilityScores.build(p, u)

    def grow(node: NodeView) -> Node:
        if len(node.resident) == 1:
            return Leaf(node.resident[0])
        cand = _best_split(data, centroids, node, scores, overline)
        x = data.values[:, cand.dim]
        v = centroids.points[:, cand.dim]
        left = NodeView.of(
            p.n_focal, [j for j in node.members if x[j] <= cand.threshold], [a for a in node.resident if v[a] <= cand.threshold]
        )
        right = NodeView.of(
            p.n_focal, [j for j in node.members if x[j] > cand.threshold], [a for a in node.resident if v[a] > cand.threshold]
        )
        log.debug(
            "Split %s <= %.6g (cost %.6g): %d/%d points, %d/%d centroids",
            data.feature_names[cand.dim], cand.threshold, cand.cost,
            len(left.members), len(right.members), len(left.resident), len(right.resident),
        )
        return Split(cand.dim, cand.threshold, cand.cost, grow(left), grow(right))

    root = grow(NodeView.root(p))
    tree = ExplainerTree(root, p.frame, p.focal_sets, data.feature_names, centroids, label, overline, u)
    log.info("Fitted tree for lambda=%s: %d leaves, depth %d", label, tree.n_leaves, tree.depth)
    return tree


def split_cost(
    data: Dataset,
    p: CredalPartition,
    node: NodeView,
    centroids: CentroidSet,
    cand: SplitCandidate,
    cfg: Union[IemmConfig, Utility, float, str] = 0.0,
) -> float:
    """Direct evaluation of one candidate; one-sided centroid splits cost +inf."""
    u, overline, _ = resolve_mode(cfg)
    scores = UtilityScores.build(p, u)
    x = data.values[:, cand.dim]
    v = centroids.points[:, cand.dim]
    s_left = np.array([j for j in node.members if x[j] <= cand.threshold], dtype=int)
    s_right = np.array([j for j in node.members if x[j] > cand.threshold], dtype=int)
    f_left = np.array([a for a in node.resident if v[a] <= cand.threshold], dtype=int)
    f_right = np.array([a for a in node.resident if v[a] > cand.threshold], dtype=int)
    if not f_left.size or not f_right.size:
        return math.inf
    if overline:
        return float(
            scores.gain[np.ix_(s_left, f_right)].sum() + scores.gain[np.ix_(s_right, f_left)].sum()
        )
    left = NodeView.of(p.n_focal, s_left, f_left)
    right = NodeView.of(p.n_focal, s_right, f_right)
    return mistakeness_down(p, u, left, scores) + mistakeness_down(p, u, right, scores)


def candidate_splits(data: Dataset, centroids: CentroidSet, node: NodeView) -> List[SplitCandidate]:
    """Every enumerated (dimension, threshold) pair for a node, without costs."""
    out: List[SplitCandidate] = []
    members = list(node.members)
    resident = list(node.resident)
    for i in range(data.dim):
        v = centroids.points[resident, i]
        lo, hi = v.min(), v.max()
        for t in np.unique(np.concatenate([data.values[members, i], v])):
            if lo <= t < hi:
                out.append(SplitCandidate(i, float(t)))
    return out


# ---------------------- evaluation ----------------------
def leaf_nodes(tree: ExplainerTree, data: Dataset) -> List[Tuple[int, NodeView]]:
    """Leaf focal index with the observations and centroids routed to it."""
    obs = tree.assign(data.values)
    cen = tree.assign(tree.centroids.points)
    k = len(tree.focal_sets)
    return [
        (focal, NodeView.of(k, np.flatnonzero(obs == focal), np.flatnonzero(cen == focal)))
        for focal, _ in tree.leaves()
    ]


def _fitted_utility(tree: ExplainerTree) -> Utility:
    if tree.utility is not None:
        return tree.utility
    return resolve_mode(tree.label)[0]


def tree_total_mistakeness(
    tree: ExplainerTree,
    data: Dataset,
    p: CredalPartition,
    cfg: Union[IemmConfig, Utility, float, str, None] = None,
) -> float:
    """Sum of leaf-level mistakeness; defaults to the tree's own lambda and mode."""
    if cfg is None:
        u, overline = _fitted_utility(tree), tree.overline
    else:
        u, overline, _ = resolve_mode(cfg)
    scores = UtilityScores.build(p, u)
    total = 0.0
    for _, node in leaf_nodes(tree, data):
        total += mistakeness_up(p, u, node, scores) if overline else mistakeness_down(p, u, node, scores)
    return total


def leaf_path_charges(
    tree: ExplainerTree,
    data: Dataset,
    p: CredalPartition,
    cfg: Union[IemmConfig, Utility, float, str, None] = None,
) -> Dict[int, List[float]]:
    """
    For each leaf, the expected utility its observations lose at every split
    on its path (centroids sent to the other side). The charges of a leaf add
    up to its up-mistakeness; the charges of all leaves below a split add up
    to that split's overline cost.
    """
    u = _fitted_utility(tree) if cfg is None else resolve_mode(cfg)[0]
    scores = UtilityScores.build(p, u)
    obs = tree.assign(data.values)
    v = tree.centroids.points
    out: Dict[int, List[float]] = {}
    for focal, path in tree.leaves():
        gain = scores.gain[obs == focal]
        reached = np.ones(v.shape[0], dtype=bool)
        charges = []
        for split, went_left in path:
            same_side = (v[:, split.dim] <= split.threshold) == went_left
            charges.append(float(gain[:, reached & ~same_side].sum()))
            reached &= same_side
        out[focal] = charges
    return out
