from pydantic import BaseModel, ConfigDict, field_validator

SPEED_OF_LIGHT = 3e8
METERS_PER_DEGREE = 111_320.0
EARTH_RADIUS_M = 6_371_000.0


class GeoPoint(BaseModel):
    """Longitude/latitude pair in decimal degrees."""
    model_config = ConfigDict(frozen=True)

    lon: float
    lat: float

    @field_validator("lon")
    @classmethod
    def normalize_lon(cls, v: float) -> float:
        if -180.0 <= v <= 180.0:
            return v
        return ((v + 180.0) % 360.0) - 180.0

    @field_validator("lat")
    @classmethod
    def check_lat(cls, v: float) -> float:
        if not -90.0 <= v <= 90.0:
            raise ValueError(f"latitude {v} outside [-90, 90]")
        return v

