# credex/explain.py
"""
From trees to explanations: one conjunction of threshold literals per leaf,
grouped by metacluster, plus the checks and tables built on top of them.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Literal as TypingLiteral, Optional, Sequence, Tuple, Union

import numpy as np

from credex import config
from credex.belief import Subset
from credex.errors import SchemaViolation
from credex.iemm import ExplainerTree, iemm_fit
from credex.log import get_logger
from credex.mistakeness import UtilityScores, representativeness_evidential
from credex.partition import CentroidSet, CredalPartition, Dataset, partition_kind
from credex.utility import Utility, UtilitySpec, format_lambda, parse_lambda, resolve_utility

log = get_logger("explain")

Op = TypingLiteral["<=", ">"]


@dataclass(frozen=True)
class Literal:
    feature: int
    op: Op
    threshold: float
    name: str = ""

    def holds(self, z: np.ndarray) -> np.ndarray:
        col = np.asarray(z, dtype=float)[..., self.feature]
        return col <= self.threshold if self.op == "<=" else col > self.threshold

    def text(self, digits: int = 2) -> str:
        sym = "≤" if self.op == "<=" else ">"
        return f"({self.name or f'x{self.feature}'} {sym} {self.threshold:.{digits}f})"

    def to_json(self) -> Dict[str, Any]:
        return {"feature": self.name, "dim": self.feature, "op": self.op, "threshold": self.threshold}


Conjunction = Tuple[Literal, ...]


def conjunction_text(conj: Conjunction, digits: int = 2) -> str:
    if not conj:
        return "⊤"
    return " ∧ ".join(lit.text(digits) for lit in conj)


def conjunction_holds(conj: Conjunction, z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    out = np.ones(z.shape[:-1], dtype=bool)
    for lit in conj:
        out &= lit.holds(z)
    return out


@dataclass(frozen=True, eq=False)
class DnfExplanation:
    focal_sets: Tuple[Subset, ...]
    feature_names: Tuple[str, ...]
    terms: Dict[int, List[Conjunction]]

    def conjunctions(self, a: Subset) -> List[Conjunction]:
        for k, b in enumerate(self.focal_sets):
            if b == a:
                return self.terms.get(k, [])
        return []

    def as_strings(self, digits: int = 2) -> Dict[str, List[str]]:
        return {
            self.focal_sets[k].key: [conjunction_text(c, digits) for c in conjs]
            for k, conjs in sorted(self.terms.items())
        }

    def to_json(self) -> Dict[str, Any]:
        return {
            "features": list(self.feature_names),
            "terms": {
                self.focal_sets[k].key: [[lit.to_json() for lit in c] for c in conjs]
                for k, conjs in sorted(self.terms.items())
            },
        }


def _merge(path: Sequence[Literal]) -> Conjunction:
    """Keep the tightest bound per (feature, op), in order of first appearance."""
    tight: Dict[Tuple[int, str], Literal] = {}
    for lit in path:
        key = (lit.feature, lit.op)
        prev = tight.get(key)
        if prev is None:
            tight[key] = lit
        elif (lit.op == "<=" and lit.threshold < prev.threshold) or (lit.op == ">" and lit.threshold > prev.threshold):
            tight[key] = Literal(prev.feature, prev.op, lit.threshold, prev.name)
    return tuple(tight.values())


def tree_to_dnf(tree: ExplainerTree, feature_names: Optional[Sequence[str]] = None) -> DnfExplanation:
    names = tuple(feature_names or tree.feature_names)
    terms: Dict[int, List[Conjunction]] = {}
    for focal, path in tree.leaves():
        lits = [Literal(s.dim, "<=" if left else ">", s.threshold, names[s.dim]) for s, left in path]
        terms.setdefault(focal, []).append(_merge(lits))
    return DnfExplanation(tree.focal_sets, names, dict(sorted(terms.items())))


@dataclass(frozen=True)
class RepresentativeCheck:
    representative: bool
    violating: Tuple[int, ...]
    # True when the partition is not categorical and the mass-weighted diagnostic was used
    relaxed: bool


def check_representative(
    tree: ExplainerTree, p: CredalPartition, spec: Union[Utility, float, str], data: Optional[Dataset] = None
) -> RepresentativeCheck:
    data = data or p.dataset
    if data is None:
        raise SchemaViolation("representativity needs the observations; pass the dataset")
    u = resolve_utility(spec)
    delta = tree.assign(data.values)
    umat = UtilityScores.build(p, u).umat
    # best utility of the assigned metacluster against any focal set carrying mass
    reach = np.where(p.masses > 0, umat[delta], -np.inf).max(axis=1)
    violating = tuple(int(j) for j in np.flatnonzero(reach < 1.0))
    relaxed = not partition_kind(p).categorical
    return RepresentativeCheck(not violating, violating, relaxed)


@dataclass(frozen=True, eq=False)
class RepresentativenessReport:
    train_labels: Tuple[str, ...]
    eval_labels: Tuple[str, ...]
    values: np.ndarray
    bold: np.ndarray
    trees: Dict[str, ExplainerTree] = field(default_factory=dict)


def column_max_mask(values: np.ndarray, tol: float = config.BOLD_TOL) -> np.ndarray:
    return values >= values.max(axis=0, keepdims=True) - tol


def representativeness_matrix(
    data: Dataset,
    p: CredalPartition,
    centroids: CentroidSet,
    train_lambdas: Sequence[float],
    eval_lambdas: Optional[Sequence[float]] = None,
) -> RepresentativenessReport:
    train = [parse_lambda(t) for t in train_lambdas]
    evals = [parse_lambda(e) for e in (eval_lambdas if eval_lambdas is not None else train_lambdas)]
    if not train or not evals:
        raise SchemaViolation("training and evaluation lambda lists must not be empty")

    def fit(lam: float) -> ExplainerTree:
        return iemm_fit(data, p, centroids, lam)

    if config.CREDEX_THREADS > 1 and len(train) > 1:
        with ThreadPoolExecutor(max_workers=min(config.CREDEX_THREADS, len(train))) as pool:
            trees = list(pool.map(fit, train))
    else:
        trees = [fit(lam) for lam in train]

    scores = [UtilityScores.build(p, UtilitySpec(e)) for e in evals]
    values = np.zeros((len(train), len(evals)))
    for i, tree in enumerate(trees):
        delta = tree.assign(data.values)
        for j, s in enumerate(scores):
            values[i, j] = representativeness_evidential(p, s.utility, delta, s)
    report = RepresentativenessReport(
        tuple(format_lambda(t) for t in train),
        tuple(format_lambda(e) for e in evals),
        values,
        column_max_mask(values),
        {format_lambda(t): tree for t, tree in zip(train, trees)},
    )
    log.info("Representativeness matrix %dx%d computed", len(train), len(evals))
    return report


# ---------------------- regions ----------------------
def region_boxes(
    tree: ExplainerTree, lo: Sequence[float], hi: Sequence[float]
) -> List[Tuple[int, np.ndarray, np.ndarray]]:
    """Axis-aligned box of every leaf clipped to [lo, hi], as (focal index, lower, upper)."""
    out = []
    for focal, path in tree.leaves():
        a = np.array(lo, dtype=float)
        b = np.array(hi, dtype=float)
        for s, left in path:
            if left:
                b[s.dim] = min(b[s.dim], s.threshold)
            else:
                a[s.dim] = max(a[s.dim], s.threshold)
        out.append((focal, a, b))
    return out


def grid_points(lo: Sequence[float], hi: Sequence[float], n: int = 100) -> np.ndarray:
    """Regular grid with ``n`` points per dimension, shape (n**D, D)."""
    axes = [np.linspace(a, b, n) for a, b in zip(lo, hi)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def cautious_area_fraction(
    tree: ExplainerTree, lo: Sequence[float], hi: Sequence[float], n: int = 100
) -> float:
    """Share of grid points predicted as a non-singleton metacluster."""
    pred = tree.assign(grid_points(lo, hi, n))
    cautious = np.array([not a.is_singleton for a in tree.focal_sets])
    return float(np.mean(cautious[pred]))


@dataclass(frozen=True, eq=False)
class DnfTable:
    """Rows are lambda labels, columns the focal sets shared by every row."""

    focal_sets: Tuple[Subset, ...]
    rows: Tuple[Tuple[str, DnfExplanation], ...]

    @classmethod
    def from_trees(cls, trees: Dict[str, ExplainerTree]) -> "DnfTable":
        if not trees:
            raise SchemaViolation("no trees to tabulate")
        first = next(iter(trees.values()))
        return cls(first.focal_sets, tuple((label, tree_to_dnf(t)) for label, t in trees.items()))

    def cells(self, digits: int = 2) -> List[Tuple[str, List[str]]]:
        out = []
        for label, dnf in self.rows:
            strings = dnf.as_strings(digits)
            out.append((label, [" ∨ ".join(strings.get(a.key, [])) or "-" for a in self.focal_sets]))
        return out
