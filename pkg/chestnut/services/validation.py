from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Union
import csv
import logging
import math

import numpy as np
import pandas as pd

from ..schemas.geo import EARTH_RADIUS_M
from ..schemas.invocation import RunManifest
from . import export
from .geo import haversine_many

logger = logging.getLogger(__name__)

# Float slack for values that went through CSV formatting
ROUNDING_TOL = 1e-6
PERCENT_TOL = 0.005


@dataclass
class ValidationError:
    """Validation error details"""
    field: str
    message: str
    code: str
    count: int = 1


class ValidationResult:
    """Result of validation operation"""

    def __init__(self, errors: List[ValidationError] = None):
        self.errors = errors or []
        self.checks = 0

    def add_error(self, field: str, message: str, code: str, count: int = 1):
        self.errors.append(ValidationError(field, message, code, count))

    def check(self, ok: bool, field: str, message: str, code: str, count: int = 1) -> bool:
        """Record one check; failing checks become errors."""
        self.checks += 1
        if not ok:
            self.add_error(field, message, code, count)
        return ok

    def is_valid(self) -> bool:
        return len(self.errors) == 0

    def get_errors(self) -> List[ValidationError]:
        return self.errors

    def get_error_messages(self) -> List[str]:
        return [error.message for error in self.errors]

    @property
    def violations(self) -> int:
        return sum(error.count for error in self.errors)


class DatasetValidator:
    """Re-checks the invariants of a generated output directory."""

    def __init__(self, out_dir: Union[str, Path]):
        self.out_dir = Path(out_dir)
        self.result = ValidationResult()
        self.manifest: Optional[RunManifest] = None
        self.frames: Dict[str, pd.DataFrame] = {}

    @property
    def config(self) -> Dict[str, Any]:
        return self.manifest.config if self.manifest else {}

    def validate(self) -> ValidationResult:
        self.result = ValidationResult()
        manifest_path = self.out_dir / export.MANIFEST_FILE
        if not self.result.check(manifest_path.is_file(), "manifest", f"Missing {manifest_path}",
                                 "manifest_missing"):
            return self.result
        self.manifest = export.read_manifest(manifest_path)

        self.validate_headers()
        if not self.result.is_valid():
            return self.result
        self.frames = {name: pd.read_csv(self.out_dir / name) for name in export.HEADERS}

        self.validate_counts()
        self.validate_users()
        self.validate_loads()
        self.validate_invocations()
        self.validate_components()
        logger.info(
            f"Validated {self.out_dir}: {self.result.checks} checks, {self.result.violations} violations"
        )
        return self.result

    def validate_headers(self) -> None:
        for name, columns in export.HEADERS.items():
            path = self.out_dir / name
            if not self.result.check(path.is_file(), name, f"Missing {name}", "file_missing"):
                continue
            with open(path, "r", encoding="utf-8", newline="") as f:
                header = next(csv.reader(f), [])
            self.result.check(header == columns, name, f"{name} header {header} != {columns}", "header_mismatch")

    def validate_counts(self) -> None:
        for key, name in export.COUNTED_FILES.items():
            expected = self.manifest.counts.get(key)
            actual = len(self.frames[name])
            self.result.check(expected == actual, name, f"manifest {key}={expected}, {name} has {actual} rows",
                              "count_mismatch")
        users = self.frames[export.USERS_FILE]
        self.result.check(users["id"].nunique() == self.manifest.counts.get("users"), "users",
                          "manifest user count differs from distinct user ids", "count_mismatch")

    def validate_users(self) -> None:
        users = self.frames[export.USERS_FILE]
        max_ts = math.floor(self.config.get("t_max", 3600) / self.config.get("delta_t", 30))
        late = int((users["timestamp"] > max_ts).sum())
        self.result.check(late == 0, "users.timestamp", f"{late} snapshots beyond timestamp {max_ts}",
                          "timestamp_out_of_range", late)
        dup = int(users.duplicated(["id", "timestamp"]).sum())
        self.result.check(dup == 0, "users", f"{dup} duplicate (id, timestamp) snapshots", "duplicate_snapshot", dup)
        per_user = users.groupby("id").size()
        short = int((per_user < self.config.get("c_min", 1)).sum())
        self.result.check(short == 0, "users", f"{short} users below c_min timestamps", "c_min_violation", short)

        limit = self.config.get("s", 3)
        runs = self.longest_stationary_runs(users, self.config.get("stationary_epsilon", 0.0))
        parked = int((runs > limit).sum())
        self.result.check(parked == 0, "users", f"{parked} users stay in place for more than {limit} snapshots",
                          "stationary_run_exceeded", parked)

    @staticmethod
    def longest_stationary_runs(users: pd.DataFrame, epsilon: float = 0.0) -> pd.Series:
        """Longest run of consecutive same-position snapshots, per user id."""
        if users.empty:
            return pd.Series(dtype=int)
        ordered = users.sort_values(["id", "timestamp"]).reset_index(drop=True)
        same = (
            ordered["id"].eq(ordered["id"].shift())
            & ordered["lon"].diff().abs().le(epsilon)
            & ordered["lat"].diff().abs().le(epsilon)
        )
        run_id = (~same).cumsum()
        lengths = ordered.groupby(["id", run_id]).size()
        return lengths.groupby(level=0).max()

    def validate_loads(self) -> None:
        loads = self.frames[export.LOADS_FILE]
        lo = self.config.get("rho_min", 0.01) * 100.0 - PERCENT_TOL
        hi = self.config.get("rho_max", 0.99) * 100.0 + PERCENT_TOL
        values = loads[export.LOAD_COLUMNS[2:]].to_numpy(dtype=float)
        bad = int(((values < lo) | (values > hi)).any(axis=1).sum())
        self.result.check(bad == 0, "loads", f"{bad} load rows outside the clamp range", "load_out_of_range", bad)

    def validate_invocations(self) -> None:
        inv = self.frames[export.INVOCATIONS_FILE]
        if inv.empty:
            return
        dup = int(inv.duplicated(["uid", "eid", "sid", "timestamp"]).sum())
        self.result.check(dup == 0, "invocations", f"{dup} duplicate invocation keys", "duplicate_invocation", dup)

        nonpos = int(((inv["rt"] <= 0) | (inv["nj"] <= 0)).sum())
        self.result.check(nonpos == 0, "invocations", f"{nonpos} non-positive QoS values", "non_positive_qos", nonpos)

        users = self.frames[export.USERS_FILE].rename(columns={"id": "uid"})
        servers = self.frames[export.SERVERS_FILE].rename(
            columns={"id": "eid", "lon": "s_lon", "lat": "s_lat"})
        merged = inv.merge(users[["uid", "timestamp", "lon", "lat"]], on=["uid", "timestamp"], how="left") \
                    .merge(servers[["eid", "s_lon", "s_lat", "radius"]], on="eid", how="left")
        orphans = int(merged[["lon", "s_lon"]].isna().any(axis=1).sum())
        self.result.check(orphans == 0, "invocations", f"{orphans} invocations without a user snapshot or server",
                          "dangling_reference", orphans)
        merged = merged.dropna(subset=["lon", "s_lon"])
        d = haversine_many(merged["lon"].to_numpy(), merged["lat"].to_numpy(),
                           merged["s_lon"].to_numpy(), merged["s_lat"].to_numpy(),
                           self.config.get("earth_radius_m", EARTH_RADIUS_M))
        uncovered = int((d > merged["radius"].to_numpy() + ROUNDING_TOL).sum())
        self.result.check(uncovered == 0, "invocations", f"{uncovered} invocations on non-covering servers",
                          "coverage_violation", uncovered)

    def validate_components(self) -> None:
        inv = self.frames[export.INVOCATIONS_FILE]
        comp = self.frames[export.COMPONENTS_FILE]
        if not self.result.check(len(comp) == len(inv), "components",
                                 f"components has {len(comp)} rows, invocations {len(inv)}", "count_mismatch"):
            return
        if comp.empty:
            return
        spread = np.tanh(2.0)
        for column, base_key, default in (("sd", "theta_rt", 1.6), ("nj_base", "theta_nj", 160.0)):
            base = self.config.get(base_key, default)
            values = comp[column].to_numpy(dtype=float)
            lo, hi = (1.0 - spread) * base, (1.0 + spread) * base
            bad = int(((values < lo - ROUNDING_TOL) | (values > hi + ROUNDING_TOL)).sum())
            self.result.check(bad == 0, f"components.{column}", f"{bad} values outside [{lo:.6f}, {hi:.6f}]",
                              "squash_out_of_range", bad)

        multiplier = 1.0 + comp["delta_edge"].to_numpy() + comp["delta_time"].to_numpy()
        bad = int(((multiplier < 1.0 - ROUNDING_TOL) | (multiplier > 1.4 + ROUNDING_TOL)).sum())
        self.result.check(bad == 0, "components", f"{bad} multipliers outside [1, 1.4]",
                          "multiplier_out_of_range", bad)

        for qos, base in (("rt", "rt_base"), ("nj", "nj_base")):
            expected = comp[base].to_numpy() * multiplier
            off = int((np.abs(inv[qos].to_numpy() - expected) > ROUNDING_TOL * np.maximum(1.0, expected)).sum())
            self.result.check(off == 0, f"invocations.{qos}", f"{off} values differ from {base} * multiplier",
                              "qos_mismatch", off)


def validate_output(out_dir: Union[str, Path]) -> ValidationResult:
    return DatasetValidator(out_dir).validate()
