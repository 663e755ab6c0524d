import csv
import json

import numpy as np
import pandas as pd
import pytest

from chestnut.core.config import InvocationMode, load_config
from chestnut.core.errors import ConfigurationError, SelectionError
from chestnut.schemas.entities import EdgeServer, ServiceSpec
from chestnut.schemas.geo import GeoPoint
from chestnut.schemas.mobility import UserSnapshot
from chestnut.services import export
from chestnut.services.coverage import CoverageIndex
from chestnut.services.pipeline import assign_invocations, load_inputs, run
from chestnut.services.validation import validate_output

from .conftest import DESK_OVERRIDES

OUTPUT_FILES = [
    export.SERVERS_FILE, export.SERVICES_FILE, export.USERS_FILE, export.LOADS_FILE,
    export.INVOCATIONS_FILE, export.COMPONENTS_FILE, export.MANIFEST_FILE,
    "stats/timestamp_counts.csv", "stats/timestamp_intervals.csv", "stats/server_coverage.csv",
    "stats/rt_histogram.csv", "stats/nj_histogram.csv", "stats/correlations.csv",
    "stats/user_points.csv", "stats/server_points.csv",
]


def _header(path):
    with open(path, newline="", encoding="utf-8") as f:
        return next(csv.reader(f))


def _servers():
    return [
        EdgeServer(id=0, pos=GeoPoint(lon=121.40, lat=31.20), radius_m=1000, supply_c=1, supply_s=1, supply_b=1),
        EdgeServer(id=1, pos=GeoPoint(lon=121.50, lat=31.30), radius_m=1000, supply_c=2, supply_s=2, supply_b=2),
    ]


def _services(n):
    return [ServiceSpec(sid=i, pref_c=1, pref_s=2, pref_b=3) for i in range(n)]


def _snap(uid, lon, lat, t=0):
    return UserSnapshot(uid=uid, t=t, pos=GeoPoint(lon=lon, lat=lat), speed_kmh=10.0, direction_deg=0.0)


@pytest.mark.unit
def test_assign_full_mode_on_single_server():
    cfg = load_config(n_s=6, invocation_mode=InvocationMode.FULL)
    calls = assign_invocations([_snap(0, 121.40, 31.20, t=4)], CoverageIndex(_servers()), _services(6), cfg,
                               np.random.default_rng(0))
    assert calls == [(0, 0, sid, 4) for sid in range(6)]


@pytest.mark.unit
@pytest.mark.edge_cases
def test_assign_skips_uncovered_snapshots():
    cfg = load_config(n_s=6)
    calls = assign_invocations([_snap(0, 121.30, 31.10)], CoverageIndex(_servers()), _services(6), cfg,
                               np.random.default_rng(0))
    assert calls == []


@pytest.mark.unit
def test_assign_sampled_mode_draws_distinct_services():
    cfg = load_config(n_s=6, services_per_snapshot=3)
    snaps = [_snap(uid, 121.40, 31.20) for uid in range(4)] + [_snap(9, 121.50, 31.30)]
    calls = assign_invocations(snaps, CoverageIndex(_servers()), _services(6), cfg, np.random.default_rng(1))
    assert len(calls) == 15
    for uid in (0, 1, 2, 3, 9):
        sids = [sid for u, _, sid, _ in calls if u == uid]
        assert len(set(sids)) == 3
    assert {eid for u, eid, _, _ in calls if u == 9} == {1}
    assert {eid for u, eid, _, _ in calls if u != 9} == {0}


@pytest.mark.unit
@pytest.mark.edge_cases
def test_inputs_need_both_files(tmp_path):
    with pytest.raises(ConfigurationError) as exc:
        load_inputs(load_config(), gps_path=tmp_path / "gps.csv")
    assert exc.value.error_code == "inputs_incomplete"


@pytest.mark.integration
def test_run_emits_every_file_with_schema_headers(desk_run):
    _, _, out_dir = desk_run
    for name in OUTPUT_FILES:
        assert (out_dir / name).is_file(), name
    assert _header(out_dir / "servers.csv") == ["id", "lon", "lat", "radius", "computing", "storage", "bandwidth"]
    assert _header(out_dir / "services.csv") == ["sid", "computing", "storage", "bandwidth"]
    assert _header(out_dir / "users.csv") == ["id", "timestamp", "lon", "lat", "speed", "direction"]
    assert _header(out_dir / "loads.csv") == ["timestamp", "eid", "computing_load", "storage_load",
                                              "bandwidth_load"]
    assert _header(out_dir / "invocations.csv") == ["uid", "eid", "sid", "timestamp", "rt", "nj"]


@pytest.mark.integration
def test_manifest_counts_match_files(desk_run):
    cfg, manifest, out_dir = desk_run
    assert manifest.dataset == "chestnut"
    assert manifest.seed == cfg.seed
    for key, name in export.COUNTED_FILES.items():
        assert manifest.counts[key] == len(pd.read_csv(out_dir / name)), key
    assert manifest.counts["users"] == cfg.n_u
    assert manifest.counts["services"] == cfg.n_s
    assert manifest.counts["loads"] == manifest.counts["servers"] * (cfg.max_timestamp + 1)
    assert manifest.counts["invocations"] > 0
    on_disk = json.loads((out_dir / "manifest.json").read_text())
    assert on_disk["counts"] == manifest.counts
    assert set(on_disk["normalization"]) >= {"uplink", "queueing", "processing", "downlink",
                                              "delay_sum", "jitter_sum"}


@pytest.mark.integration
def test_fresh_run_validates_cleanly(desk_run):
    _, _, out_dir = desk_run
    result = validate_output(out_dir)
    assert result.get_error_messages() == []
    assert result.violations == 0
    assert result.checks > 10


@pytest.mark.integration
def test_selected_users_satisfy_filters(desk_run):
    cfg, _, out_dir = desk_run
    users = pd.read_csv(out_dir / "users.csv")
    assert sorted(users["id"].unique()) == list(range(cfg.n_u))
    assert users.groupby("id").size().min() >= cfg.c_min
    assert users["timestamp"].max() <= cfg.max_timestamp


@pytest.mark.integration
def test_value_ranges(desk_run):
    cfg, _, out_dir = desk_run
    loads = pd.read_csv(out_dir / "loads.csv")
    values = loads[["computing_load", "storage_load", "bandwidth_load"]].to_numpy()
    assert values.min() >= 100 * cfg.rho_min and values.max() <= 100 * cfg.rho_max
    comp = pd.read_csv(out_dir / "components.csv")
    multiplier = 1 + comp["delta_edge"] + comp["delta_time"]
    assert multiplier.min() >= 1.0 and multiplier.max() <= 1.4 + 1e-12
    assert comp["delta_edge"].min() == 0.0
    assert comp["delta_edge"].max() == pytest.approx(0.2)
    inv = pd.read_csv(out_dir / "invocations.csv")
    assert (inv["rt"] > 0).all() and (inv["nj"] > 0).all()
    assert not inv.duplicated(["uid", "eid", "sid", "timestamp"]).any()


@pytest.mark.integration
def test_interval_histogram_mode_is_one(desk_run):
    _, _, out_dir = desk_run
    intervals = pd.read_csv(out_dir / "stats" / "timestamp_intervals.csv")
    assert intervals.loc[intervals["count"].idxmax(), "interval"] == 1
    counts = pd.read_csv(out_dir / "stats" / "timestamp_counts.csv")
    assert counts["timestamps"].max() <= desk_run[0].max_timestamp + 1


@pytest.mark.integration
@pytest.mark.slow
def test_same_seed_gives_byte_identical_outputs(desk_run, tmp_path):
    cfg, _, out_dir = desk_run
    again = tmp_path / "again"
    run(load_config(out_dir=again, spill_threshold=97, **DESK_OVERRIDES))
    for name in OUTPUT_FILES:
        if name == export.MANIFEST_FILE:
            continue
        assert (again / name).read_bytes() == (out_dir / name).read_bytes(), name
    first = json.loads((out_dir / export.MANIFEST_FILE).read_text())
    second = json.loads((again / export.MANIFEST_FILE).read_text())
    # the config block echoes the spill threshold
    first.pop("config")
    assert second.pop("config")["spill_threshold"] == 97
    assert first == second


@pytest.mark.integration
@pytest.mark.slow
def test_different_seed_changes_outputs(desk_run, tmp_path):
    _, _, out_dir = desk_run
    other = tmp_path / "other"
    run(load_config(out_dir=other, **{**DESK_OVERRIDES, "seed": DESK_OVERRIDES["seed"] + 1}))
    assert (other / "invocations.csv").read_bytes() != (out_dir / "invocations.csv").read_bytes()


@pytest.mark.integration
@pytest.mark.edge_cases
def test_selection_error_leaves_no_output(tmp_path):
    out_dir = tmp_path / "out"
    cfg = load_config(out_dir=out_dir, **{**DESK_OVERRIDES, "n_u": 1000})
    with pytest.raises(SelectionError):
        run(cfg)
    assert not out_dir.exists()
    assert list(tmp_path.iterdir()) == []


@pytest.mark.integration
@pytest.mark.edge_cases
def test_existing_output_needs_force(tmp_path):
    out_dir = tmp_path / "out"
    out_dir.mkdir()
    (out_dir / "keep.txt").write_text("x")
    cfg = load_config(out_dir=out_dir, **{**DESK_OVERRIDES, "n_vehicles": 30, "n_u": 5})
    with pytest.raises(ConfigurationError) as exc:
        run(cfg)
    assert exc.value.error_code == "out_dir_not_empty"
    assert (out_dir / "keep.txt").exists()

    run(cfg, force=True)
    assert not (out_dir / "keep.txt").exists()
    assert (out_dir / "manifest.json").is_file()


@pytest.mark.integration
@pytest.mark.slow
def test_correlation_signs(tmp_path):
    out_dir = tmp_path / "corr"
    cfg = load_config(out_dir=out_dir, **{**DESK_OVERRIDES, "n_vehicles": 80, "n_u": 40,
                                          "services_per_snapshot": 4})
    manifest = run(cfg)
    assert manifest.counts["invocations"] >= 5000
    table = pd.read_csv(out_dir / "stats" / "correlations.csv").set_index(["target", "factor"])["spearman"]
    assert table[("rt", "pref_sum")] > 0.05
    assert table[("rt", "load_mean")] > 0.05
    assert table[("rt", "supply_sum")] < -0.05
    assert table[("nj", "dist_ratio")] > 0.05
    assert table[("nj", "speed")] > 0.05
    assert table[("nj", "dir_change")] > 0.05

    result = validate_output(out_dir)
    assert result.is_valid(), result.get_error_messages()
    assert result.violations == 0

    comp = pd.read_csv(out_dir / export.COMPONENTS_FILE)
    for col in ("uplink", "queueing", "processing", "downlink", "dist_ratio", "dir_change", "bw_ratio", "speed"):
        bounds = manifest.normalization[col]
        assert bounds.min <= bounds.max
        assert comp[col].min() == pytest.approx(bounds.min, rel=1e-9, abs=1e-12)
        assert comp[col].max() == pytest.approx(bounds.max, rel=1e-9, abs=1e-12)
    for key in ("delay_sum", "jitter_sum"):
        assert manifest.normalization[key].min <= manifest.normalization[key].max

    spread = np.tanh(2.0)
    for col, base in (("sd", cfg.theta_rt), ("nj_base", cfg.theta_nj)):
        assert comp[col].min() >= (1 - spread) * base - 1e-9
        assert comp[col].max() <= (1 + spread) * base + 1e-9
    multiplier = 1.0 + comp["delta_edge"] + comp["delta_time"]
    assert multiplier.min() >= 1.0 - 1e-12
    assert multiplier.max() <= 1.4 + 1e-12
    assert table[("nj", "trend")] > 0
