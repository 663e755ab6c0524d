from typing import Tuple

from pydantic import BaseModel, ConfigDict, Field

from .geo import GeoPoint


class EdgeServer(BaseModel):
    """Base-station-sited server with coverage radius and ordinal supply levels."""
    model_config = ConfigDict(frozen=True)

    id: int = Field(ge=0)
    pos: GeoPoint
    radius_m: int = Field(gt=0)
    supply_c: int = Field(ge=1)
    supply_s: int = Field(ge=1)
    supply_b: int = Field(ge=1)

    @property
    def supply(self) -> Tuple[int, int, int]:
        return (self.supply_c, self.supply_s, self.supply_b)


class ServiceSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    sid: int = Field(ge=0)
    pref_c: int = Field(ge=1)
    pref_s: int = Field(ge=1)
    pref_b: int = Field(ge=1)

    @property
    def prefs(self) -> Tuple[int, int, int]:
        return (self.pref_c, self.pref_s, self.pref_b)
