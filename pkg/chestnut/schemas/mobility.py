from pydantic import BaseModel, ConfigDict, Field

from .geo import GeoPoint


class UserSnapshot(BaseModel):
    """Position of one user at one system timestamp."""
    model_config = ConfigDict(frozen=True)

    uid: int = Field(ge=0)
    t: int = Field(ge=0)
    pos: GeoPoint
    speed_kmh: float = Field(ge=0)
    direction_deg: float


class ActivityProfile(BaseModel):
    """Ranking tuple (tau, D, sum omega, sum nu) of one aligned vehicle."""
    model_config = ConfigDict(frozen=True)

    tau: int = Field(ge=1)
    D: float = Field(ge=0)
    sum_omega: int = Field(ge=0)
    sum_nu: int = Field(ge=0)

    def rank_key(self):
        return (self.tau, self.D, self.sum_omega, self.sum_nu)
