from .entities import EdgeServer, ServiceSpec
from .geo import GeoPoint
from .invocation import ColumnBounds, InvocationRecord, RunManifest
from .load import DemandTotals, LoadState
from .mobility import ActivityProfile, UserSnapshot
from .qos import RawDelayComponents, RawJitterFactors
from .trace import GpsLogFormat, ParseReport, RawGpsRecord, RawStationRecord

__all__ = [
    "ActivityProfile",
    "ColumnBounds",
    "DemandTotals",
    "EdgeServer",
    "GeoPoint",
    "GpsLogFormat",
    "InvocationRecord",
    "LoadState",
    "ParseReport",
    "RawDelayComponents",
    "RawGpsRecord",
    "RawJitterFactors",
    "RawStationRecord",
    "RunManifest",
    "ServiceSpec",
    "UserSnapshot",
]
