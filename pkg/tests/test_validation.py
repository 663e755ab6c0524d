import shutil

import pandas as pd
import pytest

from chestnut.services.validation import DatasetValidator, validate_output


def _users(rows):
    return pd.DataFrame(rows, columns=["id", "timestamp", "lon", "lat"])


@pytest.mark.unit
def test_longest_stationary_runs_per_user():
    users = _users([
        (0, 0, 121.1, 31.2), (0, 1, 121.1, 31.2), (0, 2, 121.1, 31.2), (0, 3, 121.2, 31.2),
        (1, 0, 121.1, 31.2), (1, 1, 121.3, 31.2),
    ])
    runs = DatasetValidator.longest_stationary_runs(users)
    assert runs.to_dict() == {0: 3, 1: 1}
    assert DatasetValidator.longest_stationary_runs(users, epsilon=0.25).to_dict() == {0: 4, 1: 2}


@pytest.mark.unit
@pytest.mark.edge_cases
def test_runs_do_not_join_across_users():
    users = _users([(0, 0, 121.1, 31.2), (1, 0, 121.1, 31.2), (1, 1, 121.1, 31.2)])
    assert DatasetValidator.longest_stationary_runs(users).to_dict() == {0: 1, 1: 2}
    assert DatasetValidator.longest_stationary_runs(_users([])).empty


@pytest.mark.integration
def test_parked_user_fails_validation(desk_run, tmp_path):
    cfg, _, out_dir = desk_run
    copy = tmp_path / "edited"
    shutil.copytree(out_dir, copy)
    users = pd.read_csv(copy / "users.csv")
    first = users.index[users["id"] == 0][: cfg.s + 1]
    for col in ("lon", "lat"):
        users.loc[first, col] = users.loc[first[0], col]
    users.to_csv(copy / "users.csv", index=False, lineterminator="\n")

    result = validate_output(copy)
    codes = {error.code for error in result.get_errors()}
    assert "stationary_run_exceeded" in codes
    assert "stationary_run_exceeded" not in {error.code for error in validate_output(out_dir).get_errors()}
