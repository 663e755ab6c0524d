import pandas as pd
import pytest

from chestnut.services.stats import StatisticsService, emit_stats


def _frames(users=None, invocations=None):
    users = users if users is not None else pd.DataFrame(columns=["id", "timestamp", "lon", "lat", "speed",
                                                                  "direction"])
    servers = pd.DataFrame({"id": [0], "lon": [121.4], "lat": [31.2], "radius": [1000],
                            "computing": [1], "storage": [2], "bandwidth": [3]})
    services = pd.DataFrame({"sid": [0], "computing": [1], "storage": [1], "bandwidth": [1]})
    loads = pd.DataFrame({"timestamp": [0, 1, 2], "eid": [0, 0, 0], "computing_load": [10.0, 20.0, 30.0],
                          "storage_load": [10.0] * 3, "bandwidth_load": [10.0] * 3})
    invocations = invocations if invocations is not None else pd.DataFrame(
        columns=["uid", "eid", "sid", "timestamp", "rt", "nj"])
    components = pd.DataFrame(columns=["dist_ratio", "dir_change", "speed", "trend", "bw_ratio"])
    return dict(users=users, servers=servers, services=services, loads=loads,
                invocations=invocations, components=components)


@pytest.mark.unit
def test_intervals_and_counts():
    users = pd.DataFrame({"id": [0, 0, 0, 1, 1], "timestamp": [0, 1, 2, 0, 2],
                          "lon": [121.4] * 5, "lat": [31.2] * 5, "speed": [0.0] * 5, "direction": [0.0] * 5})
    service = StatisticsService(**_frames(users=users))
    intervals = service.timestamp_intervals()
    assert intervals.to_dict("list") == {"interval": [1, 2], "count": [2, 1]}
    counts = service.timestamp_counts()
    assert counts.to_dict("list") == {"timestamps": [2, 3], "users": [1, 1]}
    coverage = service.server_coverage()
    assert coverage["users"].tolist() == [2, 1, 2]


@pytest.mark.unit
@pytest.mark.edge_cases
def test_empty_record_set_gives_header_only_tables(tmp_path):
    service = StatisticsService(**_frames())
    tables = service.write(tmp_path / "stats")
    assert tables["rt_histogram.csv"].empty
    assert tables["correlations.csv"].empty
    assert (tmp_path / "stats" / "rt_histogram.csv").read_text().strip() == "bin_low,bin_high,count"
    assert (tmp_path / "stats" / "correlations.csv").read_text().strip() == "target,factor,spearman,n"


@pytest.mark.unit
def test_histogram_bins():
    hist = StatisticsService.histogram(pd.Series([0.01, 0.04, 0.05, 0.26]), 0.05)
    assert hist["count"].tolist() == [2, 1, 1]
    assert hist["bin_low"].tolist() == [0.0, 0.05, 0.25]


@pytest.mark.integration
def test_recompute_from_disk_is_identical(desk_run):
    _, _, out_dir = desk_run
    before = {p.name: p.read_bytes() for p in (out_dir / "stats").iterdir()}
    emit_stats(out_dir)
    after = {p.name: p.read_bytes() for p in (out_dir / "stats").iterdir()}
    assert before == after
