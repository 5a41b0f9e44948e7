from typing import Annotated, Any, Dict, List, Literal, Optional, Union
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

SCHEMA_VERSION = 1

# Define Pydantic models for distribution configuration
class UniformConfig(BaseModel):
    """Uniform distribution over {0,1}^n."""
    model_config = ConfigDict(extra="forbid")
    kind: Literal["uniform"] = "uniform"
    n: int = Field(gt=0)

class ProductConfig(BaseModel):
    """Independent bits, p[i] = Pr[x_i = 1]."""
    model_config = ConfigDict(extra="forbid")
    kind: Literal["product"] = "product"
    p: List[float] = Field(min_length=1)

    @field_validator("p")
    @classmethod
    def validate_probabilities(cls, p):
        for value in p:
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"probability {value} outside [0, 1]")
        return p

class TableConfig(BaseModel):
    """Explicit pmf keyed by bit strings; missing points have mass 0."""
    model_config = ConfigDict(extra="forbid")
    kind: Literal["table"] = "table"
    n: int = Field(gt=0, le=24)
    pmf: Dict[str, float]

class CoupledConfig(BaseModel):
    """Groups of positions forced equal; every other bit independent."""
    model_config = ConfigDict(extra="forbid")
    kind: Literal["coupled"] = "coupled"
    n: int = Field(gt=0)
    equal_groups: List[List[int]]
    group_p: Optional[List[float]] = None
    free_p: Optional[List[float]] = None

class InducedConfig(BaseModel):
    """Pushforward of a base distribution through the label-appending encoder."""
    model_config = ConfigDict(extra="forbid")
    kind: Literal["induced"] = "induced"
    base: "DistributionConfig"
    concept: str
    k: int = Field(ge=0)

DistributionConfig = Annotated[
    Union[UniformConfig, ProductConfig, TableConfig, CoupledConfig, InducedConfig],
    Field(discriminator="kind"),
]
InducedConfig.model_rebuild()

class OutputConfig(BaseModel):
    """Where a scenario report is persisted."""
    model_config = ConfigDict(extra="forbid")
    path: str
    format: Literal["json", "csv"] = "json"

class ScenarioConfig(BaseModel):
    """Complete scenario configuration; unset fields take scenario defaults."""
    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    schema_version: int = Field(SCHEMA_VERSION, alias="schema")
    scenario: str
    n: Optional[int] = Field(None, gt=0)
    l: Optional[int] = Field(None, ge=0)
    rho: Optional[int] = Field(None, ge=0)
    k: Optional[int] = Field(None, ge=0)
    m: Optional[int] = Field(None, ge=0)
    trials: Optional[int] = Field(None, gt=0)
    risk_samples: Optional[int] = Field(None, gt=0)
    epsilon: Optional[float] = None
    delta: Optional[float] = None
    alpha: Optional[float] = None
    hiding_bias: Optional[float] = None
    confidence: Optional[float] = None
    seed: int = Field(0, ge=0, lt=2**64)
    mode: Optional[Literal["exact", "mc"]] = None
    learner: Optional[str] = None
    c1: Optional[str] = None
    c2: Optional[str] = None
    target: Optional[str] = None
    p: Optional[List[float]] = None
    long_n: Optional[int] = Field(None, gt=0)
    long_l: Optional[int] = Field(None, gt=0)
    long_rho: Optional[int] = Field(None, ge=0)
    long_m: Optional[int] = Field(None, ge=0)
    distribution: Optional[DistributionConfig] = None
    output: Optional[OutputConfig] = None

    @model_validator(mode="after")
    def validate_schema_version(self):
        """Only one schema version exists."""
        if self.schema_version != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema {self.schema_version}; expected {SCHEMA_VERSION}")
        return self

    def echo(self) -> Dict[str, Any]:
        """Config as recorded in reports (output location excluded)."""
        return self.model_dump(mode="json", by_alias=True, exclude_none=True, exclude={"output"})

class ClaimedBound(BaseModel):
    """A bound from the theory, the tolerance allowed, and the outcome."""
    bound: float
    relation: Literal[">=", "<=", ">", "<", "=="]
    tolerance: float = 0.0
    citation: str
    passed: bool

class ScenarioReport(BaseModel):
    """Per-experiment record."""
    scenario: str
    seed: int
    config: Dict[str, Any]
    measured: Dict[str, float]
    claimed: Dict[str, ClaimedBound]
    info: Dict[str, Any] = Field(default_factory=dict)
    passed: bool
    runtime_ms: Optional[float] = None
    tool_version: str

    @model_validator(mode="after")
    def validate_claims_measured(self):
        """Every claimed bound refers to a measured quantity."""
        missing = [name for name in self.claimed if name not in self.measured]
        if missing:
            raise ValueError(f"claims without measurements: {missing}")
        return self
