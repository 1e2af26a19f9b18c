# credex/belief.py
"""
Frames of discernment, subsets and mass functions.

Subsets are bit-patterns over frame indices (bit i set <=> omega_i in A), so a
frame is capped at 16 labels and 2^C enumeration stays cheap.
"""
import math
from dataclasses import dataclass
from typing import Any, Dict, Iterable, Iterator, List, Mapping, Tuple

from credex.config import MASS_TOL
from credex.errors import BadFrame, BadSubset, EmptySetMass, FrameMismatch, NonNormalized

MAX_FRAME = 16
KEY_SEP = "|"


@dataclass(frozen=True)
class Frame:
    labels: Tuple[str, ...]

    def __post_init__(self):
        labels = tuple(str(x) for x in self.labels)
        object.__setattr__(self, "labels", labels)
        if not 1 <= len(labels) <= MAX_FRAME:
            raise BadFrame(f"frame must have between 1 and {MAX_FRAME} labels, got {len(labels)}")
        if any(not x or KEY_SEP in x for x in labels):
            raise BadFrame(f"frame labels must be non-empty and must not contain {KEY_SEP!r}")
        if len(set(labels)) != len(labels):
            raise BadFrame(f"frame labels must be unique: {list(labels)}")

    @classmethod
    def of_size(cls, n: int, prefix: str = "w") -> "Frame":
        return cls(tuple(f"{prefix}{i + 1}" for i in range(n)))

    @property
    def cardinality(self) -> int:
        return len(self.labels)

    @property
    def full_mask(self) -> int:
        return (1 << len(self.labels)) - 1

    @property
    def omega(self) -> "Subset":
        return Subset(self, self.full_mask)

    @property
    def empty(self) -> "Subset":
        return Subset(self, 0)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise BadSubset(f"unknown label {label!r} for frame {list(self.labels)}") from None

    def singleton(self, i: int) -> "Subset":
        return self.from_indices([i])

    def singletons(self) -> List["Subset"]:
        return [self.singleton(i) for i in range(len(self.labels))]

    def from_indices(self, indices: Iterable[int]) -> "Subset":
        mask = 0
        for i in indices:
            if not 0 <= int(i) < len(self.labels):
                raise BadSubset(f"index {i} outside frame of size {len(self.labels)}")
            mask |= 1 << int(i)
        return Subset(self, mask)

    def subset(self, *labels: str) -> "Subset":
        return self.from_indices(self.index(x) for x in labels)

    def parse(self, key: str) -> "Subset":
        """Parse ``"w1|w2"``; the empty string is the empty subset."""
        key = (key or "").strip()
        if not key:
            return self.empty
        return self.subset(*[part.strip() for part in key.split(KEY_SEP)])

    def all_subsets(self) -> List["Subset"]:
        """Every non-empty subset, singletons first, Omega last."""
        return sorted((Subset(self, m) for m in range(1, self.full_mask + 1)), key=Subset.sort_key)


@dataclass(frozen=True)
class Subset:
    frame: Frame
    mask: int

    def __post_init__(self):
        if not 0 <= self.mask <= self.frame.full_mask:
            raise BadSubset(f"bit-pattern {self.mask:#x} outside frame of size {self.frame.cardinality}")

    def sort_key(self) -> Tuple[int, int]:
        return (len(self), self.mask)

    @property
    def indices(self) -> Tuple[int, ...]:
        return tuple(i for i in range(self.frame.cardinality) if self.mask >> i & 1)

    @property
    def labels(self) -> Tuple[str, ...]:
        return tuple(self.frame.labels[i] for i in self.indices)

    @property
    def key(self) -> str:
        return KEY_SEP.join(self.labels)

    def __len__(self) -> int:
        return bin(self.mask).count("1")

    def __iter__(self) -> Iterator[int]:
        return iter(self.indices)

    def __contains__(self, i: int) -> bool:
        return 0 <= i < self.frame.cardinality and bool(self.mask >> i & 1)

    def _same_frame(self, other: "Subset") -> None:
        if self.frame != other.frame:
            raise FrameMismatch(f"subsets over different frames: {self.frame.labels} vs {other.frame.labels}")

    def __and__(self, other: "Subset") -> "Subset":
        self._same_frame(other)
        return Subset(self.frame, self.mask & other.mask)

    def __or__(self, other: "Subset") -> "Subset":
        self._same_frame(other)
        return Subset(self.frame, self.mask | other.mask)

    def issubset(self, other: "Subset") -> bool:
        self._same_frame(other)
        return self.mask & ~other.mask == 0

    def issuperset(self, other: "Subset") -> bool:
        return other.issubset(self)

    def intersects(self, other: "Subset") -> bool:
        self._same_frame(other)
        return self.mask & other.mask != 0

    @property
    def is_empty(self) -> bool:
        return self.mask == 0

    @property
    def is_singleton(self) -> bool:
        return len(self) == 1

    def __repr__(self) -> str:
        return "{" + ",".join(self.labels) + "}"


@dataclass(frozen=True)
class MassFunction:
    frame: Frame
    focal: Tuple[Tuple[Subset, float], ...]

    @property
    def focal_sets(self) -> Tuple[Subset, ...]:
        return tuple(a for a, _ in self.focal)

    def as_dict(self) -> Dict[Subset, float]:
        return dict(self.focal)

    def __getitem__(self, a: Subset) -> float:
        for b, v in self.focal:
            if b == a:
                return v
        return 0.0


@dataclass(frozen=True)
class MassKind:
    bayesian: bool
    categorical: bool
    vacuous: bool


def make_mass(frame: Frame, assignments: Iterable[Tuple[Subset, float]]) -> MassFunction:
    acc: Dict[Subset, float] = {}
    for a, v in assignments:
        if a.frame != frame:
            raise FrameMismatch(f"subset {a!r} is not over frame {list(frame.labels)}")
        v = float(v)
        if not math.isfinite(v):
            raise NonNormalized(f"non-finite mass {v!r} on {a!r}")
        if v < 0:
            raise NonNormalized(f"negative mass {v} on {a!r}")
        if a.is_empty and v > 0:
            raise EmptySetMass(f"positive mass {v} on the empty set")
        acc[a] = acc.get(a, 0.0) + v

    ordered = sorted(acc.items(), key=lambda kv: kv[0].sort_key())
    total = sum(v for _, v in ordered)
    if not abs(total - 1.0) <= MASS_TOL:
        raise NonNormalized(f"masses sum to {total!r}, expected 1")
    focal = tuple((a, v / total) for a, v in ordered if v > 0)
    return MassFunction(frame, focal)


def _check_frame(m: MassFunction, a: Subset) -> None:
    if a.frame != m.frame:
        raise FrameMismatch(f"subset {a!r} is not over the mass function's frame")


def bel(m: MassFunction, a: Subset) -> float:
    _check_frame(m, a)
    return sum(v for b, v in m.focal if b.issubset(a))


def pl(m: MassFunction, a: Subset) -> float:
    _check_frame(m, a)
    return sum(v for b, v in m.focal if b.intersects(a))


def classify_mass(m: MassFunction) -> MassKind:
    bayesian = all(a.is_singleton for a, _ in m.focal)
    categorical = len(m.focal) == 1
    vacuous = categorical and m.focal[0][0] == m.frame.omega
    return MassKind(bayesian=bayesian, categorical=categorical, vacuous=vacuous)


# ---------- JSON ----------
def mass_to_json(m: MassFunction) -> Dict[str, Any]:
    return {"frame": list(m.frame.labels), "masses": {a.key: v for a, v in m.focal}}


def mass_from_json(doc: Mapping[str, Any]) -> MassFunction:
    frame = Frame(tuple(doc["frame"]))
    return make_mass(frame, [(frame.parse(k), v) for k, v in doc["masses"].items()])
