from dataclasses import dataclass, field
from typing import Generic, List, TypeVar

from pydantic import BaseModel, ConfigDict, Field

from .geo import GeoPoint

T = TypeVar("T")


class RawGpsRecord(BaseModel):
    """One GPS fix of one vehicle, restricted to the fields the generator uses."""
    model_config = ConfigDict(frozen=True)

    vehicle_id: str
    gps_time: float
    pos: GeoPoint
    speed_kmh: float = Field(ge=0)
    direction_deg: float = Field(ge=0, lt=360)


class RawStationRecord(BaseModel):
    model_config = ConfigDict(frozen=True)

    pos: GeoPoint


class GpsLogFormat(BaseModel):
    """Column layout of a delimited GPS log."""
    vehicle: int = 0
    time: int = 1
    lon: int = 2
    lat: int = 3
    speed: int = 4
    direction: int = 5
    delimiter: str = ","
    has_header: bool = False
    time_format: str = "epoch"

    @property
    def width(self) -> int:
        return max(self.vehicle, self.time, self.lon, self.lat, self.speed, self.direction) + 1


@dataclass
class ParseReport(Generic[T]):
    """Parsed records plus the count of rows that were dropped."""
    records: List[T] = field(default_factory=list)
    dropped: int = 0
    total_rows: int = 0
    duplicates: int = 0
