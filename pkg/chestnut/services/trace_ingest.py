"""
Readers for taxi-style GPS logs and base-station lists, plus synthetic
substitutes with the same shape for runs without licensed data.
"""
import csv
import io
import logging
import math
from datetime import datetime, timezone
from pathlib import Path
from typing import BinaryIO, Iterable, Iterator, List, Sequence, Tuple, Union

import numpy as np

from ..core.config import SimConfig
from ..core.errors import ErrorHandler, TraceFormatError
from ..core.rng import substream
from ..schemas.geo import METERS_PER_DEGREE, GeoPoint
from ..schemas.trace import GpsLogFormat, ParseReport, RawGpsRecord, RawStationRecord

logger = logging.getLogger(__name__)

Source = Union[str, Path, BinaryIO]

MAX_MALFORMED_SHARE = 0.5
REPORT_INTERVALS_S = (10, 15, 30, 60)
# 2008-02-20 00:00:00 UTC, a day in the range of the public Shanghai taxi logs
SYNTH_EPOCH = 1_203_465_600
HOTSPOT_COUNT = 4


def gps_format_from_config(cfg: SimConfig) -> GpsLogFormat:
    return GpsLogFormat(
        vehicle=cfg.gps_col_vehicle,
        time=cfg.gps_col_time,
        lon=cfg.gps_col_lon,
        lat=cfg.gps_col_lat,
        speed=cfg.gps_col_speed,
        direction=cfg.gps_col_direction,
        has_header=cfg.gps_has_header,
        time_format=cfg.gps_time_format,
    )


def _rows(source: Source, delimiter: str) -> Iterator[List[str]]:
    """Stream delimited rows from a path or a binary stream."""
    if isinstance(source, (str, Path)):
        with open(source, "rb") as f:
            yield from _rows(f, delimiter)
        return
    text = io.TextIOWrapper(source, encoding="utf-8", errors="replace", newline="")
    try:
        yield from csv.reader(text, delimiter=delimiter)
    finally:
        text.detach()


def _parse_time(value: str, time_format: str) -> float:
    value = value.strip()
    if time_format == "epoch":
        return float(value)
    return datetime.strptime(value, time_format).replace(tzinfo=timezone.utc).timestamp()


def _finite(value: str) -> float:
    x = float(value)
    if not math.isfinite(x):
        raise ValueError(f"non-finite value: {value}")
    return x


def _check_malformed(report: ParseReport, what: str) -> None:
    if report.total_rows and report.dropped / report.total_rows > MAX_MALFORMED_SHARE:
        raise TraceFormatError(
            message=f"{what}: {report.dropped} of {report.total_rows} rows malformed",
            error_code=f"{what}_malformed",
            details={"dropped": report.dropped, "total_rows": report.total_rows},
        )
    if report.dropped:
        logger.warning(f"{what}: dropped {report.dropped} of {report.total_rows} rows")


def parse_gps_record(row: Sequence[str], fmt: GpsLogFormat) -> RawGpsRecord:
    """Parse one row; raises ValueError/IndexError on malformed input."""
    if len(row) < fmt.width:
        raise IndexError(f"expected at least {fmt.width} fields, got {len(row)}")
    lon = _finite(row[fmt.lon])
    lat = _finite(row[fmt.lat])
    if not (-180.0 <= lon <= 180.0 and -90.0 <= lat <= 90.0):
        raise ValueError(f"coordinate out of range: ({lon}, {lat})")
    speed = _finite(row[fmt.speed])
    if speed < 0:
        raise ValueError(f"negative speed: {speed}")
    vehicle_id = row[fmt.vehicle].strip()
    if not vehicle_id:
        raise ValueError("empty vehicle id")
    return RawGpsRecord(
        vehicle_id=vehicle_id,
        gps_time=_parse_time(row[fmt.time], fmt.time_format),
        pos=GeoPoint(lon=lon, lat=lat),
        speed_kmh=speed,
        direction_deg=_finite(row[fmt.direction]) % 360.0,
    )


def parse_gps_log(source: Source, fmt: GpsLogFormat = GpsLogFormat()) -> ParseReport[RawGpsRecord]:
    """Parse a GPS log into records sorted by (vehicle_id, gps_time).

    Malformed rows are dropped and counted; more than half malformed is a
    format error. Unreadable sources raise OSError.
    """
    report: ParseReport[RawGpsRecord] = ParseReport()
    with ErrorHandler("parse_gps_log", "trace_ingest"):
        rows = _rows(source, fmt.delimiter)
        if fmt.has_header:
            next(rows, None)
        for row in rows:
            if not row or all(not cell.strip() for cell in row):
                continue
            report.total_rows += 1
            try:
                report.records.append(parse_gps_record(row, fmt))
            except (ValueError, IndexError):
                report.dropped += 1
        _check_malformed(report, "gps_log")
        report.records.sort(key=lambda r: (r.vehicle_id, r.gps_time))
    return report


def parse_stations(source: Source, lon_col: int = 0, lat_col: int = 1, has_header: bool = False,
                   delimiter: str = ",") -> ParseReport[RawStationRecord]:
    """Parse a station list, dropping invalid rows and collapsing duplicate coordinates."""
    report: ParseReport[RawStationRecord] = ParseReport()
    seen = set()
    with ErrorHandler("parse_stations", "trace_ingest"):
        rows = _rows(source, delimiter)
        if has_header:
            next(rows, None)
        for row in rows:
            if not row or all(not cell.strip() for cell in row):
                continue
            report.total_rows += 1
            try:
                lon = _finite(row[lon_col])
                lat = _finite(row[lat_col])
                if not (-180.0 <= lon <= 180.0 and -90.0 <= lat <= 90.0):
                    raise ValueError(f"coordinate out of range: ({lon}, {lat})")
            except (ValueError, IndexError):
                report.dropped += 1
                continue
            if (lon, lat) in seen:
                report.duplicates += 1
                continue
            seen.add((lon, lat))
            report.records.append(RawStationRecord(pos=GeoPoint(lon=lon, lat=lat)))
        _check_malformed(report, "stations")
    return report


def write_gps_log(records: Iterable[RawGpsRecord], target: Union[str, Path]) -> None:
    """Write records in the default column layout (epoch seconds)."""
    with open(target, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        for r in records:
            writer.writerow([r.vehicle_id, repr(r.gps_time), repr(r.pos.lon), repr(r.pos.lat),
                             repr(r.speed_kmh), repr(r.direction_deg)])


def write_stations(records: Iterable[RawStationRecord], target: Union[str, Path]) -> None:
    with open(target, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        for r in records:
            writer.writerow([repr(r.pos.lon), repr(r.pos.lat)])


# --- Synthetic substitutes ---

def hotspot_centers(cfg: SimConfig, seed: int) -> np.ndarray:
    """Shared dense areas for synthetic stations and vehicle waypoints, shape (n, 2) lon/lat."""
    rng = substream(seed, "hotspots")
    lon_span = cfg.lambda_max - cfg.lambda_min
    lat_span = cfg.phi_max - cfg.phi_min
    lons = cfg.lambda_min + lon_span * rng.uniform(0.2, 0.8, HOTSPOT_COUNT)
    lats = cfg.phi_min + lat_span * rng.uniform(0.2, 0.8, HOTSPOT_COUNT)
    return np.column_stack([lons, lats])


def _hotspot_scale(cfg: SimConfig) -> float:
    return 0.08 * min(cfg.lambda_max - cfg.lambda_min, cfg.phi_max - cfg.phi_min)


def _waypoint(rng: np.random.Generator, cfg: SimConfig, hotspots: np.ndarray) -> Tuple[float, float]:
    if rng.random() < 0.8:
        center = hotspots[rng.integers(len(hotspots))]
        lon, lat = center + rng.normal(0.0, _hotspot_scale(cfg), 2)
    else:
        lon = rng.uniform(cfg.lambda_min, cfg.lambda_max)
        lat = rng.uniform(cfg.phi_min, cfg.phi_max)
    return (float(np.clip(lon, cfg.lambda_min, cfg.lambda_max)),
            float(np.clip(lat, cfg.phi_min, cfg.phi_max)))


def _synth_vehicle(cfg: SimConfig, seed: int, index: int, hotspots: np.ndarray) -> List[RawGpsRecord]:
    rng = substream(seed, "trace", index)
    vehicle_id = f"{index:05d}"
    interval = int(rng.choice(REPORT_INTERVALS_S))
    start = SYNTH_EPOCH + int(rng.integers(0, 3600))
    duration = rng.uniform(0.5, 1.2) * cfg.t_max
    parker = rng.random() < 0.2
    cruise_kmh = rng.uniform(15.0, 60.0)

    lon, lat = _waypoint(rng, cfg, hotspots)
    target = _waypoint(rng, cfg, hotspots)
    direction = 0.0
    dwell_left = 0.0
    silent_left = 0.0
    records: List[RawGpsRecord] = []

    elapsed = 0.0
    while elapsed <= duration:
        if dwell_left > 0:
            speed = 0.0
            dwell_left -= interval
        else:
            speed = cruise_kmh * rng.uniform(0.8, 1.2)
            step_m = speed / 3.6 * interval
            east_m = (target[0] - lon) * METERS_PER_DEGREE * math.cos(math.radians(lat))
            north_m = (target[1] - lat) * METERS_PER_DEGREE
            remaining = math.hypot(east_m, north_m)
            if remaining > 0:
                direction = math.degrees(math.atan2(east_m, north_m)) % 360.0
            if remaining <= step_m:
                lon, lat = target
                target = _waypoint(rng, cfg, hotspots)
                if rng.random() < 0.5:
                    dwell_left = rng.uniform(150.0, 400.0) if parker else rng.uniform(10.0, 40.0)
            else:
                frac = step_m / remaining
                lon += (target[0] - lon) * frac
                lat += (target[1] - lat) * frac
        lon = round(float(np.clip(lon, cfg.lambda_min, cfg.lambda_max)), 6)
        lat = round(float(np.clip(lat, cfg.phi_min, cfg.phi_max)), 6)

        if silent_left > 0:
            silent_left -= interval
        elif rng.random() < 0.01:
            silent_left = rng.uniform(60.0, 150.0)
        else:
            records.append(RawGpsRecord(
                vehicle_id=vehicle_id,
                gps_time=float(start + elapsed),
                pos=GeoPoint(lon=lon, lat=lat),
                speed_kmh=round(speed, 1),
                direction_deg=float(round(direction) % 360),
            ))
        elapsed += interval
    return records


def synth_traces(cfg: SimConfig, n_vehicles: int, seed: int) -> List[RawGpsRecord]:
    """Random-waypoint trajectories with dwell periods and uneven report intervals.

    Output is sorted by (vehicle_id, gps_time) and depends only on (cfg, n_vehicles, seed).
    """
    if n_vehicles <= 0:
        return []
    hotspots = hotspot_centers(cfg, seed)
    records: List[RawGpsRecord] = []
    for index in range(n_vehicles):
        records.extend(_synth_vehicle(cfg, seed, index, hotspots))
    logger.info(f"Synthesized {len(records)} GPS records for {n_vehicles} vehicles")
    return records


def synth_stations(cfg: SimConfig, n_stations: int, seed: int) -> List[RawStationRecord]:
    """Base stations clustered around the same hotspots as synth_traces.

    A share of stations lands outside the bounding box on purpose.
    """
    if n_stations <= 0:
        return []
    rng = substream(seed, "stations")
    hotspots = hotspot_centers(cfg, seed)
    lon_pad = 0.1 * (cfg.lambda_max - cfg.lambda_min)
    lat_pad = 0.1 * (cfg.phi_max - cfg.phi_min)
    stations: List[RawStationRecord] = []
    seen = set()
    for _ in range(n_stations):
        if rng.random() < 0.85:
            center = hotspots[rng.integers(len(hotspots))]
            lon, lat = center + rng.normal(0.0, 1.25 * _hotspot_scale(cfg), 2)
        else:
            lon = rng.uniform(cfg.lambda_min - lon_pad, cfg.lambda_max + lon_pad)
            lat = rng.uniform(cfg.phi_min - lat_pad, cfg.phi_max + lat_pad)
        key = (round(float(lon), 6), round(float(lat), 6))
        if key in seen:
            continue
        seen.add(key)
        stations.append(RawStationRecord(pos=GeoPoint(lon=key[0], lat=key[1])))
    return stations
