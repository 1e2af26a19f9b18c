# credex/partition.py
"""
Credal partitions: one mass function per observation over a shared list of
focal sets, stored dense as an N x K matrix, plus the centroids annotating
each focal set.
"""
import io
import json
import os
from dataclasses import dataclass, field
from typing import Any, Dict, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import ValidationError

from credex.belief import Frame, MassFunction, Subset, make_mass
from credex.config import MASS_TOL
from credex.errors import (
    DimensionMismatch,
    EmptyFocalSet,
    InvalidIndex,
    MissingCentroid,
    NonNormalizedRow,
    SchemaViolation,
)
from credex.files import atomic_write_text
from credex.log import get_logger
from credex.models import PartitionDocument

log = get_logger("partition")

PathLike = Union[str, os.PathLike]


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=float, copy=True)
    arr.setflags(write=False)
    return arr


def default_feature_names(d: int) -> Tuple[str, ...]:
    if d == 2:
        return ("x", "y")
    return tuple(f"x{i}" for i in range(d))


@dataclass(frozen=True, eq=False)
class Dataset:
    values: np.ndarray
    feature_names: Tuple[str, ...] = ()

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim == 1:
            values = values.reshape(-1, 1)
        if values.ndim != 2 or values.shape[0] < 1 or values.shape[1] < 1:
            raise SchemaViolation(f"dataset must be a non-empty N x D table, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise SchemaViolation("dataset contains non-finite values")
        names = tuple(self.feature_names) or default_feature_names(values.shape[1])
        if len(names) != values.shape[1]:
            raise DimensionMismatch(f"{len(names)} feature names for {values.shape[1]} columns")
        object.__setattr__(self, "values", _frozen(values))
        object.__setattr__(self, "feature_names", tuple(str(n) for n in names))

    @property
    def n_obs(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def bounds(self) -> Tuple[np.ndarray, np.ndarray]:
        return self.values.min(axis=0), self.values.max(axis=0)


@dataclass(frozen=True, eq=False)
class CredalPartition:
    frame: Frame
    focal_sets: Tuple[Subset, ...]
    masses: np.ndarray
    dataset: Optional[Dataset] = None

    def __post_init__(self):
        focal = tuple(self.focal_sets)
        if not focal:
            raise SchemaViolation("a credal partition needs at least one focal set")
        for a in focal:
            if a.frame != self.frame:
                raise SchemaViolation(f"focal set {a!r} is not over frame {list(self.frame.labels)}")
            if a.is_empty:
                raise EmptyFocalSet("the empty set cannot be a focal set")
        if len({a.mask for a in focal}) != len(focal):
            raise SchemaViolation("focal sets must be distinct")

        m = np.asarray(self.masses, dtype=float)
        if m.ndim != 2 or m.shape[1] != len(focal) or m.shape[0] < 1:
            raise SchemaViolation(f"masses must be N x {len(focal)}, got shape {m.shape}")
        if not np.all(np.isfinite(m)) or np.any(m < 0):
            raise NonNormalizedRow("masses must be finite and non-negative")
        sums = m.sum(axis=1)
        bad = np.flatnonzero(np.abs(sums - 1.0) > MASS_TOL)
        if bad.size:
            j = int(bad[0])
            raise NonNormalizedRow(f"row {j} sums to {sums[j]!r}, expected 1 (and {bad.size - 1} more)")

        if self.dataset is not None and self.dataset.n_obs != m.shape[0]:
            raise DimensionMismatch(f"{m.shape[0]} mass rows for {self.dataset.n_obs} observations")
        object.__setattr__(self, "focal_sets", focal)
        object.__setattr__(self, "masses", _frozen(m))

    @property
    def n_obs(self) -> int:
        return self.masses.shape[0]

    @property
    def n_focal(self) -> int:
        return len(self.focal_sets)

    def focal_index(self, a: Subset) -> int:
        for k, b in enumerate(self.focal_sets):
            if b == a:
                return k
        raise InvalidIndex(f"{a!r} is not a focal set of this partition")

    def check_obs(self, j: int) -> int:
        if not 0 <= int(j) < self.n_obs:
            raise InvalidIndex(f"observation {j} outside 0..{self.n_obs - 1}")
        return int(j)

    def mass_function(self, j: int) -> MassFunction:
        j = self.check_obs(j)
        return make_mass(self.frame, zip(self.focal_sets, self.masses[j]))

    def with_dataset(self, dataset: Dataset) -> "CredalPartition":
        return CredalPartition(self.frame, self.focal_sets, self.masses, dataset)


@dataclass(frozen=True, eq=False)
class CentroidSet:
    """Row k of ``points`` is the centroid of focal set k."""

    focal_sets: Tuple[Subset, ...]
    points: np.ndarray
    derived: Tuple[bool, ...] = field(default=())

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[0] != len(self.focal_sets):
            raise MissingCentroid(f"need one centroid per focal set ({len(self.focal_sets)}), got shape {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise SchemaViolation("centroid coordinates must be finite")
        object.__setattr__(self, "focal_sets", tuple(self.focal_sets))
        object.__setattr__(self, "points", _frozen(pts))
        if not self.derived:
            object.__setattr__(self, "derived", (False,) * len(self.focal_sets))

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __getitem__(self, a: Subset) -> np.ndarray:
        for k, b in enumerate(self.focal_sets):
            if b == a:
                return self.points[k]
        raise MissingCentroid(f"no centroid for {a!r}")

    def as_dict(self) -> Dict[str, list]:
        return {a.key: [float(v) for v in self.points[k]] for k, a in enumerate(self.focal_sets)}


@dataclass(frozen=True, eq=False)
class HardClustering:
    frame: Frame
    labels: np.ndarray

    def __post_init__(self):
        lab = np.asarray(self.labels)
        if lab.ndim != 1 or lab.size < 1:
            raise SchemaViolation("labels must be a non-empty vector")
        if not np.issubdtype(lab.dtype, np.integer):
            raise SchemaViolation("labels must be integer frame indices")
        if lab.min() < 0 or lab.max() >= self.frame.cardinality:
            raise InvalidIndex(f"labels must lie in 0..{self.frame.cardinality - 1}")
        lab = lab.astype(int)
        lab.setflags(write=False)
        object.__setattr__(self, "labels", lab)

    @property
    def used(self) -> Tuple[int, ...]:
        return tuple(int(c) for c in np.unique(self.labels))


@dataclass(frozen=True)
class PartitionKind:
    categorical: bool
    bayesian: bool
    quasi_bayesian: bool
    hard: bool


def partition_kind(p: CredalPartition) -> PartitionKind:
    categorical = bool(np.all(np.count_nonzero(p.masses, axis=1) == 1))
    bayesian = all(a.is_singleton for a in p.focal_sets)
    quasi = all(a.is_singleton or a == p.frame.omega for a in p.focal_sets)
    return PartitionKind(categorical, bayesian, quasi, categorical and bayesian)


def membership(focal_sets: Sequence[Subset], frame: Frame) -> np.ndarray:
    """K x C 0/1 matrix: [k, i] = 1 iff omega_i in A_k."""
    out = np.zeros((len(focal_sets), frame.cardinality), dtype=float)
    for k, a in enumerate(focal_sets):
        out[k, list(a.indices)] = 1.0
    return out


def plausibility_matrix(p: CredalPartition) -> np.ndarray:
    """N x C singleton plausibilities."""
    return p.masses @ membership(p.focal_sets, p.frame)


def to_hard(p: CredalPartition) -> HardClustering:
    # argmax returns the first maximum, which is the lowest frame index
    return HardClustering(p.frame, np.argmax(plausibility_matrix(p), axis=1))


def encode_hard(hard: HardClustering, dataset: Optional[Dataset] = None) -> CredalPartition:
    """One-hot credal partition over the frame's singletons."""
    singletons = tuple(hard.frame.singletons())
    m = np.zeros((hard.labels.size, len(singletons)))
    m[np.arange(hard.labels.size), hard.labels] = 1.0
    return CredalPartition(hard.frame, singletons, m, dataset)


def dominant_focal(p: CredalPartition) -> np.ndarray:
    """Index of the focal set carrying the most mass, per row."""
    return np.argmax(p.masses, axis=1)


CentroidKey = Union[int, str, Subset]


def _singleton_index(frame: Frame, key: CentroidKey) -> int:
    if isinstance(key, Subset):
        if not key.is_singleton:
            raise MissingCentroid(f"{key!r} is not a singleton")
        return key.indices[0]
    if isinstance(key, str):
        return frame.index(key)
    if not 0 <= int(key) < frame.cardinality:
        raise InvalidIndex(f"frame index {key} out of range")
    return int(key)


def metacluster_centroids(
    p: CredalPartition,
    singleton_centroids: Mapping[CentroidKey, Sequence[float]],
) -> CentroidSet:
    by_index: Dict[int, np.ndarray] = {
        _singleton_index(p.frame, k): np.asarray(v, dtype=float) for k, v in singleton_centroids.items()
    }
    dims = {v.shape for v in by_index.values()}
    if len(dims) > 1:
        raise DimensionMismatch(f"singleton centroids disagree on dimension: {sorted(dims)}")
    points = []
    derived = []
    for a in p.focal_sets:
        missing = [p.frame.labels[i] for i in a.indices if i not in by_index]
        if missing:
            raise MissingCentroid(f"no centroid for singleton(s) {missing} needed by {a!r}")
        points.append(np.mean([by_index[i] for i in a.indices], axis=0))
        derived.append(not a.is_singleton)
    return CentroidSet(p.focal_sets, np.vstack(points), tuple(derived))


# ---------- persistence ----------
def load_dataset_csv(path: PathLike) -> Dataset:
    try:
        df = pd.read_csv(path, float_precision="round_trip")
    except pd.errors.EmptyDataError:
        raise SchemaViolation(f"{path}: empty CSV") from None
    if df.empty:
        raise SchemaViolation(f"{path}: no observations")
    non_numeric = [c for c in df.columns if not pd.api.types.is_numeric_dtype(df[c])]
    if non_numeric:
        raise SchemaViolation(f"{path}: non-numeric columns {non_numeric}")
    return Dataset(df.to_numpy(dtype=float), tuple(str(c) for c in df.columns))


def dataset_to_csv(data: Dataset) -> str:
    df = pd.DataFrame(data.values, columns=list(data.feature_names))
    buf = io.StringIO()
    df.to_csv(buf, index=False, lineterminator="\n")
    return buf.getvalue()


def save_dataset_csv(path: PathLike, data: Dataset) -> None:
    atomic_write_text(path, dataset_to_csv(data))
    log.info("Wrote dataset %s (%d x %d)", path, data.n_obs, data.dim)


def parse_partition_document(
    doc: Union[PartitionDocument, Mapping[str, Any]],
    dataset: Optional[Dataset] = None,
) -> Tuple[Dataset, CredalPartition, CentroidSet]:
    if not isinstance(doc, PartitionDocument):
        try:
            doc = PartitionDocument.model_validate(doc)
        except ValidationError as e:
            raise SchemaViolation(f"invalid partition document: {e.errors()[0]['msg']}") from None

    frame = Frame(tuple(doc.frame))
    focal = tuple(frame.parse(k) for k in doc.focal_sets)
    if any(a.is_empty for a in focal):
        raise EmptyFocalSet("the empty set cannot be a focal set")
    if len({len(r) for r in doc.masses}) != 1:
        raise SchemaViolation("mass rows have unequal lengths")

    if dataset is None:
        if doc.rows is None:
            raise SchemaViolation("partition has no embedded rows; supply the dataset CSV")
        dataset = Dataset(np.asarray(doc.rows, dtype=float), tuple(doc.features or ()))
    p = CredalPartition(frame, focal, np.asarray(doc.masses, dtype=float), dataset)
    centroids = _centroids_from_doc(p, doc.centroids, dataset.dim)
    return dataset, p, centroids


def _centroids_from_doc(p: CredalPartition, raw: Mapping[str, Sequence[float]], dim: int) -> CentroidSet:
    given: Dict[int, np.ndarray] = {}
    for key, v in raw.items():
        vec = np.asarray(v, dtype=float)
        if vec.shape != (dim,):
            raise DimensionMismatch(f"centroid {key!r} has {vec.size} coordinates, data has {dim}")
        given[p.frame.parse(key).mask] = vec

    singles = {mask.bit_length() - 1: vec for mask, vec in given.items() if mask and mask & (mask - 1) == 0}
    points = []
    derived = []
    for a in p.focal_sets:
        if a.mask in given:
            points.append(given[a.mask])
            derived.append(False)
            continue
        missing = [p.frame.labels[i] for i in a.indices if i not in singles]
        if missing:
            raise MissingCentroid(f"no centroid for {a.key!r} and no singleton centroids for {missing}")
        log.warning("Centroid of %s derived as barycenter of its singleton centroids", a.key)
        points.append(np.mean([singles[i] for i in a.indices], axis=0))
        derived.append(True)
    return CentroidSet(p.focal_sets, np.vstack(points), tuple(derived))


def partition_document(data: Dataset, p: CredalPartition, centroids: CentroidSet) -> Dict[str, Any]:
    return {
        "frame": list(p.frame.labels),
        "focal_sets": [a.key for a in p.focal_sets],
        "masses": [[float(v) for v in row] for row in p.masses],
        "centroids": centroids.as_dict(),
        "features": list(data.feature_names),
        "rows": [[float(v) for v in row] for row in data.values],
    }


def load_partition(path: PathLike, data_path: Optional[PathLike] = None) -> Tuple[Dataset, CredalPartition, CentroidSet]:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as e:
            raise SchemaViolation(f"{path}: not valid JSON ({e.msg})") from None
    dataset = load_dataset_csv(data_path) if data_path is not None else None
    data, p, centroids = parse_partition_document(raw, dataset)
    log.info("Loaded partition %s: N=%d K=%d D=%d", path, p.n_obs, p.n_focal, data.dim)
    return data, p, centroids


def save_partition(path: PathLike, data: Dataset, p: CredalPartition, centroids: CentroidSet) -> None:
    # json floats use repr(), the shortest string that round-trips exactly
    text = json.dumps(partition_document(data, p, centroids), indent=1)
    atomic_write_text(path, text + "\n")
    log.info("Wrote partition %s (N=%d, K=%d)", path, p.n_obs, p.n_focal)


def ingest_external(path: PathLike, data_path: Optional[PathLike] = None) -> Tuple[Dataset, CredalPartition, CentroidSet]:
    return load_partition(path, data_path)
