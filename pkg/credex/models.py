# credex/models.py
"""
Pydantic models for everything that arrives from outside: config files, the
partition document on disk and the service request/response bodies.
"""
import math
from typing import Any, Dict, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from credex.utility import format_lambda, parse_lambda

FocalPolicy = Literal["all_nonempty_subsets", "singletons_plus_omega"]
EmitFormat = Literal["md", "csv", "json", "dot", "svg"]
LambdaValue = Union[str, float, int]


def _lambda(v: Any) -> float:
    return parse_lambda(v)


class SynthComponent(BaseModel):
    center: List[float] = Field(..., min_length=1)
    sigma: float = Field(..., gt=0)
    count: int = Field(..., ge=1)

    model_config = ConfigDict(extra="forbid")


class SynthConfig(BaseModel):
    """Isotropic Gaussian mixture plus optional fixed outlier points."""

    components: List[SynthComponent] = Field(..., min_length=1)
    outliers: List[List[float]] = Field(default_factory=list)
    seed: int = Field(default=0, ge=0, lt=2**64)
    feature_names: Optional[List[str]] = None

    model_config = ConfigDict(
        extra="forbid",
        json_schema_extra={
            "examples": [
                {
                    "components": [
                        {"center": [3, 5], "sigma": 1, "count": 100},
                        {"center": [5, 3], "sigma": 1, "count": 100},
                    ],
                    "outliers": [[2, 2], [6, 6]],
                    "seed": 7,
                }
            ]
        },
    )

    @model_validator(mode="after")
    def _same_dimension(self) -> "SynthConfig":
        dims = {len(c.center) for c in self.components} | {len(o) for o in self.outliers}
        if len(dims) != 1:
            raise ValueError(f"components and outliers disagree on dimension: {sorted(dims)}")
        if self.feature_names is not None and len(self.feature_names) != dims.pop():
            raise ValueError("feature_names length must match the dimension")
        return self

    @property
    def dimension(self) -> int:
        return len(self.components[0].center)


class EcmConfig(BaseModel):
    n_clusters: int = Field(..., ge=2, le=16)
    alpha: float = Field(default=1.0, ge=0)
    beta: float = Field(default=2.0, gt=1)
    max_iter: int = Field(default=100, ge=1)
    tol: float = Field(default=1e-6, gt=0)
    seed: int = Field(default=0, ge=0, lt=2**64)
    focal_policy: FocalPolicy = "all_nonempty_subsets"

    model_config = ConfigDict(
        extra="forbid",
        json_schema_extra={"examples": [{"n_clusters": 3, "focal_policy": "singletons_plus_omega", "seed": 7}]},
    )


class IemmConfig(BaseModel):
    lam: float = Field(default=0.0, alias="lambda")
    # None = derived from the sign of lambda; "up"/"down" overrides
    mode: Optional[Literal["up", "down"]] = None
    tie_break: Literal["lowest_dim_then_threshold"] = "lowest_dim_then_threshold"

    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    @field_validator("lam", mode="before")
    @classmethod
    def _parse_lambda(cls, v: Any) -> float:
        return _lambda(v)

    @property
    def overline(self) -> bool:
        if self.mode is not None:
            return self.mode == "up"
        return self.lam >= 0

    def label(self) -> str:
        return format_lambda(self.lam)


class RunConfig(BaseModel):
    """Config file accepted by every CLI subcommand (``--config``)."""

    input: Optional[str] = None
    data: Optional[str] = None
    out: Optional[str] = None
    preset: Optional[str] = None
    seed: Optional[int] = Field(default=None, ge=0, lt=2**64)
    synth: Optional[SynthConfig] = None
    ecm: Optional[EcmConfig] = None
    iemm: Optional[IemmConfig] = None
    lambdas: Optional[List[LambdaValue]] = None
    eval_lambdas: Optional[List[LambdaValue]] = None
    emit: List[EmitFormat] = Field(default_factory=lambda: ["json", "md"])

    model_config = ConfigDict(extra="forbid")

    @field_validator("lambdas", "eval_lambdas")
    @classmethod
    def _parse_lambdas(cls, v: Optional[List[LambdaValue]]) -> Optional[List[float]]:
        if v is None:
            return None
        if not v:
            raise ValueError("lambda list must not be empty")
        return [_lambda(x) for x in v]


class PartitionDocument(BaseModel):
    """On-disk credal partition; data rows may be embedded or supplied as CSV."""

    frame: List[str] = Field(..., min_length=1)
    focal_sets: List[str] = Field(..., min_length=1)
    masses: List[List[float]] = Field(..., min_length=1)
    centroids: Dict[str, List[float]] = Field(default_factory=dict)
    features: Optional[List[str]] = None
    rows: Optional[List[List[float]]] = None

    model_config = ConfigDict(
        extra="forbid",
        json_schema_extra={
            "examples": [
                {
                    "frame": ["w1", "w2"],
                    "focal_sets": ["w1", "w2", "w1|w2"],
                    "masses": [[0.7, 0.1, 0.2], [0.1, 0.8, 0.1]],
                    "centroids": {"w1": [3.0, 5.0], "w2": [5.0, 3.0]},
                    "features": ["x", "y"],
                    "rows": [[3.1, 4.9], [5.2, 2.8]],
                }
            ]
        },
    )

    @field_validator("masses", "rows")
    @classmethod
    def _finite(cls, v: Optional[List[List[float]]]) -> Optional[List[List[float]]]:
        if v is not None and any(not math.isfinite(x) for row in v for x in row):
            raise ValueError("values must be finite")
        return v


# ---------------------- service bodies ----------------------
class ExplainRequest(BaseModel):
    partition: PartitionDocument
    lambdas: List[LambdaValue] = Field(default_factory=lambda: ["0"], min_length=1)

    model_config = ConfigDict(extra="forbid")


class ExplainResponse(BaseModel):
    ok: bool = True
    trees: Dict[str, Dict[str, Any]] = Field(default_factory=dict)
    dnf: Dict[str, Dict[str, List[str]]] = Field(default_factory=dict)
    total_mistakeness: Dict[str, float] = Field(default_factory=dict)


class EvaluateRequest(BaseModel):
    partition: PartitionDocument
    train_lambdas: List[LambdaValue] = Field(..., min_length=1)
    eval_lambdas: Optional[List[LambdaValue]] = None

    model_config = ConfigDict(extra="forbid")


class EvaluateResponse(BaseModel):
    ok: bool = True
    train_lambdas: List[str]
    eval_lambdas: List[str]
    values: List[List[float]]
    bold: List[List[bool]]
