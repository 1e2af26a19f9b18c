# credex/utility.py
"""
The lambda-parameterised utility family and the pluggable utility contract.

A utility scores assigning metacluster A when the truth is B. Every utility
satisfies U(A, A) = 1 and A & B = {} => U(A, B) = 0.

    lambda > 0   (|A&B| / |A|B| * 1[B <= A]) ** (1/lambda)
    lambda < 0   (|A&B| / |A|B| * 1[A <= B]) ** (1/|lambda|)
    lambda = 0   1[A == B]
    lambda = inf 1[B <= A],   lambda = -inf 1[A <= B]

Subset indicators are non-strict; with strict ones U(A, A) would be 0.
"""
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, Literal, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from credex.belief import Frame, Subset
from credex.errors import EmptySubset, FrameMismatch, InputError, UtilityAxiomViolation
from credex.log import get_logger

log = get_logger("utility")

UtilityKind = Literal["underline", "point", "overline", "lower_limit", "upper_limit"]


class Utility(ABC):
    """Map 2^Omega x 2^Omega -> [0, 1]."""

    name: str = "utility"

    @abstractmethod
    def __call__(self, a: Subset, b: Subset) -> float:
        ...

    @property
    @abstractmethod
    def overline(self) -> bool:
        """True when the lambda-mistakeness dispatch picks the 'up' form."""

    def matrix(self, rows: Sequence[Subset], cols: Sequence[Subset]) -> np.ndarray:
        """U[i, j] = U(rows[i], cols[j])."""
        out = np.zeros((len(rows), len(cols)), dtype=float)
        for i, a in enumerate(rows):
            for j, b in enumerate(cols):
                out[i, j] = self(a, b)
        return out


def _check_pair(a: Subset, b: Subset) -> None:
    if a.is_empty or b.is_empty:
        raise EmptySubset("utility is only defined on non-empty subsets")
    if a.frame != b.frame:
        raise FrameMismatch("utility arguments are over different frames")


def parse_lambda(raw: Union[str, float, int]) -> float:
    """Accept ``"inf"``, ``"-inf"``, ``"+inf"`` or a decimal."""
    if isinstance(raw, (int, float)) and not isinstance(raw, bool):
        val = float(raw)
    else:
        s = str(raw).strip().lower().replace("−", "-")
        if s in ("inf", "+inf", "infinity", "+infinity"):
            return math.inf
        if s in ("-inf", "-infinity"):
            return -math.inf
        try:
            val = float(s)
        except ValueError:
            raise InputError(f"cannot parse lambda {raw!r}; expected a decimal, 'inf' or '-inf'") from None
    if math.isnan(val):
        raise InputError("lambda must not be NaN")
    return val


def parse_lambda_list(raw: Union[str, Iterable[Union[str, float]]]) -> Tuple[float, ...]:
    if isinstance(raw, str):
        parts = [p for p in raw.split(",") if p.strip()]
    else:
        parts = list(raw)
    if not parts:
        raise InputError("lambda list is empty")
    return tuple(parse_lambda(p) for p in parts)


def format_lambda(lam: float) -> str:
    if math.isinf(lam):
        return "inf" if lam > 0 else "-inf"
    if float(lam).is_integer():
        return str(int(lam))
    return repr(float(lam))


def lambda_tag(lam: float) -> str:
    """File-name friendly form: -inf -> neg_inf, -1 -> neg1, 0.5 -> 0p5."""
    s = format_lambda(lam)
    if s.startswith("-"):
        s = "neg" + ("_" if s == "-inf" else "") + s[1:]
    return s.replace(".", "p").replace("+", "")


@dataclass(frozen=True)
class UtilitySpec(Utility):
    lam: float

    def __post_init__(self):
        object.__setattr__(self, "lam", parse_lambda(self.lam))

    @property
    def name(self) -> str:  # type: ignore[override]
        return f"U^{format_lambda(self.lam)}"

    @property
    def kind(self) -> UtilityKind:
        if self.lam == -math.inf:
            return "lower_limit"
        if self.lam == math.inf:
            return "upper_limit"
        if self.lam < 0:
            return "underline"
        if self.lam > 0:
            return "overline"
        return "point"

    @property
    def overline(self) -> bool:
        return self.lam >= 0

    def __call__(self, a: Subset, b: Subset) -> float:
        _check_pair(a, b)
        kind = self.kind
        if kind == "point":
            return 1.0 if a.mask == b.mask else 0.0
        if kind == "upper_limit":
            return 1.0 if b.issubset(a) else 0.0
        if kind == "lower_limit":
            return 1.0 if a.issubset(b) else 0.0
        inside = b.issubset(a) if kind == "overline" else a.issubset(b)
        if not inside:
            return 0.0
        ratio = len(a & b) / len(a | b)
        if ratio == 1.0:
            return 1.0
        return ratio ** (1.0 / abs(self.lam))


def utility(spec: Utility, a: Subset, b: Subset) -> float:
    return spec(a, b)


@dataclass(frozen=True)
class CustomUtility(Utility):
    """Any callable satisfying the two utility axioms."""

    fn: Callable[[Subset, Subset], float]
    label: str = "custom"
    up: bool = True
    checked_on: Tuple[Subset, ...] = field(default=(), compare=False)

    def __post_init__(self):
        if self.checked_on:
            check_axioms(self, self.checked_on)

    @property
    def name(self) -> str:  # type: ignore[override]
        return self.label

    @property
    def overline(self) -> bool:
        return self.up

    def __call__(self, a: Subset, b: Subset) -> float:
        _check_pair(a, b)
        return float(self.fn(a, b))

    @classmethod
    def from_table(
        cls,
        frame: Frame,
        table: Mapping[Tuple[str, str], float],
        label: str = "table",
        up: bool = True,
        subsets: Optional[Sequence[Subset]] = None,
    ) -> "CustomUtility":
        """Pairs keyed by ``("w1|w2", "w1")``; missing pairs default to 1[A == B]."""
        parsed: Dict[Tuple[int, int], float] = {
            (frame.parse(ka).mask, frame.parse(kb).mask): float(v) for (ka, kb), v in table.items()
        }

        def _lookup(a: Subset, b: Subset) -> float:
            return parsed.get((a.mask, b.mask), 1.0 if a.mask == b.mask else 0.0)

        return cls(_lookup, label=label, up=up, checked_on=tuple(subsets or frame.all_subsets()))


def check_axioms(u: Utility, subsets: Sequence[Subset]) -> None:
    """Exhaustive scan over the given subsets; raises on the first violation."""
    for a in subsets:
        if u(a, a) != 1.0:
            raise UtilityAxiomViolation(f"{u.name}: U({a!r}, {a!r}) = {u(a, a)} != 1")
        for b in subsets:
            val = u(a, b)
            if not 0.0 <= val <= 1.0:
                raise UtilityAxiomViolation(f"{u.name}: U({a!r}, {b!r}) = {val} outside [0, 1]")
            if not a.intersects(b) and val != 0.0:
                raise UtilityAxiomViolation(f"{u.name}: disjoint pair {a!r}, {b!r} scores {val}")


UTILITY_REGISTRY: Dict[str, Utility] = {}


def register_utility(
    name: str,
    fn: Callable[[Subset, Subset], float],
    subsets: Sequence[Subset],
    up: bool = True,
) -> CustomUtility:
    u = CustomUtility(fn, label=name, up=up, checked_on=tuple(subsets))
    UTILITY_REGISTRY[name] = u
    log.info("Registered utility %s (checked on %d subsets)", name, len(subsets))
    return u


def resolve_utility(ref: Union[str, float, Utility]) -> Utility:
    """A registered name, a lambda value/string, or a ready utility."""
    if isinstance(ref, Utility):
        return ref
    if isinstance(ref, str) and ref in UTILITY_REGISTRY:
        return UTILITY_REGISTRY[ref]
    return UtilitySpec(parse_lambda(ref))
