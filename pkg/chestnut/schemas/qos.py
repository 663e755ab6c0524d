from dataclasses import dataclass


@dataclass(frozen=True)
class RawDelayComponents:
    """Unnormalized response-time parts of one invocation."""
    pg_req: float
    uplink: float
    queueing: float
    processing: float
    downlink: float


@dataclass(frozen=True)
class RawJitterFactors:
    trend: float
    dist_ratio: float
    dir_change: float
    bw_ratio: float
    speed_kmh: float
