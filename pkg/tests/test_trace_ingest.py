import io

import pytest

from chestnut.core.errors import TraceFormatError
from chestnut.schemas.trace import GpsLogFormat
from chestnut.services.trace_ingest import (
    parse_gps_log,
    parse_stations,
    synth_stations,
    synth_traces,
    write_gps_log,
    write_stations,
)


def _stream(text: str) -> io.BytesIO:
    return io.BytesIO(text.encode("utf-8"))


@pytest.mark.unit
def test_parse_gps_log_sorts_and_counts_malformed():
    log = (
        "b,200,121.40,31.20,10,90\n"
        "a,100,121.41,31.21,0,370\n"
        "\n"
        "a,50,121.42,31.22,5,45\n"
        "a,60,200.0,31.22,5,45\n"
        "a,70,121.42,31.22,-1,45\n"
    )
    report = parse_gps_log(_stream(log))
    assert report.total_rows == 5
    assert report.dropped == 2
    assert [(r.vehicle_id, r.gps_time) for r in report.records] == [("a", 50.0), ("a", 100.0), ("b", 200.0)]
    assert report.records[1].direction_deg == pytest.approx(10.0)


@pytest.mark.unit
def test_mostly_malformed_log_is_a_format_error():
    log = "a,1,121.4,31.2,0,0\nbad\nworse,x\n"
    with pytest.raises(TraceFormatError) as exc:
        parse_gps_log(_stream(log))
    assert exc.value.error_code == "gps_log_malformed"
    assert exc.value.details == {"dropped": 2, "total_rows": 3}


@pytest.mark.unit
def test_wall_clock_times_and_custom_columns():
    fmt = GpsLogFormat(vehicle=0, time=1, lon=3, lat=2, speed=4, direction=5,
                       has_header=True, time_format="%Y-%m-%d %H:%M:%S")
    log = "id,time,lat,lon,speed,dir\n7,2008-02-20 00:00:30,31.2,121.4,12,180\n"
    report = parse_gps_log(_stream(log), fmt)
    record = report.records[0]
    assert record.gps_time == 1_203_465_630.0
    assert (record.pos.lon, record.pos.lat) == (121.4, 31.2)


@pytest.mark.unit
def test_missing_file_raises_os_error(tmp_path):
    with pytest.raises(OSError):
        parse_gps_log(tmp_path / "absent.csv")


@pytest.mark.unit
def test_stations_drop_invalid_and_collapse_duplicates():
    report = parse_stations(_stream("121.4,31.2\n121.4,31.2\nfoo,bar\n121.5,31.3\n"))
    assert len(report.records) == 2
    assert report.duplicates == 1
    assert report.dropped == 1


@pytest.mark.unit
def test_written_files_parse_back_losslessly(cfg, tmp_path):
    records = synth_traces(cfg, 3, seed=11)
    stations = synth_stations(cfg, 20, seed=11)
    write_gps_log(records, tmp_path / "gps.csv")
    write_stations(stations, tmp_path / "stations.csv")
    assert parse_gps_log(tmp_path / "gps.csv").records == records
    assert parse_stations(tmp_path / "stations.csv").records == stations


@pytest.mark.unit
def test_synthetic_traces_are_deterministic_and_inside_region(cfg):
    first = synth_traces(cfg, 10, seed=3)
    assert first == synth_traces(cfg, 10, seed=3)
    assert first != synth_traces(cfg, 10, seed=4)
    assert all(cfg.contains(r.pos.lon, r.pos.lat) for r in first)
    assert all(0 <= r.direction_deg < 360 and r.speed_kmh >= 0 for r in first)
    assert len({r.vehicle_id for r in first}) == 10
    keys = [(r.vehicle_id, r.gps_time) for r in first]
    assert keys == sorted(keys)


@pytest.mark.unit
def test_synthetic_stations_include_some_outside_region(cfg):
    stations = synth_stations(cfg, 600, seed=3)
    inside = [s for s in stations if cfg.contains(s.pos.lon, s.pos.lat)]
    assert 0 < len(inside) < len(stations)
    assert len({(s.pos.lon, s.pos.lat) for s in stations}) == len(stations)


@pytest.mark.unit
@pytest.mark.edge_cases
def test_zero_vehicles_or_stations(cfg):
    assert synth_traces(cfg, 0, seed=1) == []
    assert synth_stations(cfg, 0, seed=1) == []
