import csv

import pytest

from agency_count.core.errors import ContractViolationError
from agency_count.datasets.models import SceneDataset
from agency_count.evalkit import SWEEP_PRESETS, sweep
from agency_count.evalkit.sweep import SWEEP_KEYS, SweepCell, SweepResult

pytestmark = pytest.mark.unit


@pytest.fixture
def quick_settings(tiny_settings):
    return tiny_settings.with_value("train.epochs", 0)


@pytest.mark.parametrize(
    "param, length",
    [
        ("beta", 7),
        ("lambda_c", 7),
        ("tau", 7),
        ("lambda_m", 5),
        ("lambda_u", 8),
        ("distribution", 2),
        ("attn_layers", 3),
    ],
)
def test_presets(param, length):
    assert len(SWEEP_PRESETS[param]) == length
    assert param in SWEEP_KEYS


def test_table_layout():
    result = SweepResult(
        param="beta",
        cells=[
            SweepCell("beta", 0.5, 0, mae=1.234, mse=2.0),
            SweepCell("beta", 1.0, 0, status="failed", message="boom"),
        ],
    )
    assert result.table_markdown().splitlines() == [
        "| beta | 0.5 | 1.0 |",
        "|---|---|---|",
        "| MAE | 1.23 | failed |",
        "| MSE | 2.00 | failed |",
    ]


def test_single_value_sweep(quick_settings, tiny_dataset, tmp_path):
    result = sweep("beta", [0.5], quick_settings, tiny_dataset, out_dir=tmp_path)

    assert [c.value for c in result.cells] == [0.5]
    assert result.cells[0].status == "ok"
    assert result.cells[0].mae >= 0.0
    assert (tmp_path / "table.md").read_text().startswith("| beta | 0.5 |")
    with (tmp_path / "results.csv").open(newline="") as handle:
        rows = list(csv.DictReader(handle))
    assert len(rows) == 1
    assert rows[0]["param"] == "beta"


def test_string_values_are_coerced(quick_settings, tiny_dataset):
    result = sweep("tau", ["0.2"], quick_settings, tiny_dataset)
    assert result.cells[0].value == 0.2


def test_failing_value_is_recorded_not_raised(quick_settings, tiny_dataset):
    result = sweep("tau", [-1.0, 0.1], quick_settings, tiny_dataset)
    assert [c.status for c in result.cells] == ["failed", "ok"]
    assert result.cells[0].mae is None
    assert result.cells[0].message


def test_distribution_sweep(quick_settings, tiny_dataset):
    result = sweep("distribution", None, quick_settings, tiny_dataset)
    assert [c.value for c in result.cells] == ["laplace", "normal"]


@pytest.mark.parametrize(
    "param, values",
    [("gamma", [1.0]), ("beta", [])],
)
def test_bad_requests(quick_settings, tiny_dataset, param, values):
    with pytest.raises(ContractViolationError):
        sweep(param, values, quick_settings, tiny_dataset)


def test_needs_test_split(quick_settings, tiny_dataset):
    dataset = SceneDataset(samples=tiny_dataset.labeled + tiny_dataset.unlabeled)
    with pytest.raises(ContractViolationError):
        sweep("beta", [1.0], quick_settings, dataset)


def test_beta_preset_sweep_fills_seven_columns(quick_settings, tiny_dataset, tmp_path):
    result = sweep("beta", None, quick_settings, tiny_dataset, out_dir=tmp_path)

    assert [c.value for c in result.cells] == [0.0, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0]
    header, rule, mae, mse = (tmp_path / "table.md").read_text().splitlines()
    assert header.count("|") == 9
    assert rule == "|---|" + "---|" * 7
    assert "failed" not in mae + mse


def test_attn_layers_values_are_integers(quick_settings, tiny_dataset):
    result = sweep("attn_layers", ["0", 2], quick_settings, tiny_dataset)
    assert [c.value for c in result.cells] == [0, 2]
    assert all(c.status == "ok" for c in result.cells)
