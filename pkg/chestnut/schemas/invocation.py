from dataclasses import dataclass
from typing import Any, Dict, Optional

from pydantic import BaseModel, Field

from .qos import RawDelayComponents, RawJitterFactors


@dataclass
class InvocationRecord:
    """One user calling one service on one covering server at one timestamp."""
    uid: int
    eid: int
    sid: int
    t: int
    delay: RawDelayComponents
    jitter: RawJitterFactors


class ColumnBounds(BaseModel):
    min: float
    max: float
    constant: bool = False


class RunManifest(BaseModel):
    dataset: str = "chestnut"
    seed: int
    config: Dict[str, Any]
    counts: Dict[str, int] = Field(default_factory=dict)
    normalization: Dict[str, ColumnBounds] = Field(default_factory=dict)
    dropped_rows: Dict[str, int] = Field(default_factory=dict)
    filtered_vehicles: Dict[str, int] = Field(default_factory=dict)
    perturbation_bounds: Optional[ColumnBounds] = None
