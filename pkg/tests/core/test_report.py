# tests/core/test_report.py
import math

import pytest
import torch

from agency_count.core.metrics import count_metrics
from agency_count.core.errors import ContractViolationError
from agency_count.core.report import LossReport

pytestmark = pytest.mark.unit


def test_add_records_raw_and_weighted():
    report = LossReport()
    report.add("L_ND", torch.tensor(2.0))
    report.add("L_m", 0.5, weight=0.1)
    assert report["L_ND"] == 2.0
    assert report.weighted["L_m"] == pytest.approx(0.05)
    assert "L_m" in report and "L_C" not in report


def test_non_finite_terms_are_named():
    report = LossReport()
    report.add("L_ND", 1.0)
    report.add("L_C", float("nan"), weight=0.01)
    report.add("L_m", float("inf"))
    assert report.non_finite_terms() == ["L_C", "L_m"]


def test_mean_skips_missing_terms():
    a, b = LossReport(), LossReport()
    a.add("L", 1.0)
    a.add("L_C", 4.0, weight=0.5)
    b.add("L", 3.0)
    mean = LossReport.mean([a, b])
    assert mean["L"] == 2.0
    assert mean["L_C"] == 4.0
    assert mean.weighted["L_C"] == 2.0


def test_merged_prefixes_other_terms():
    a, b = LossReport(), LossReport()
    a.add("L", 1.0)
    b.add("L", 2.0, weight=3.0)
    merged = a.merged(b, prefix="u.")
    assert merged.terms == {"L": 1.0, "u.L": 2.0}
    assert merged.weighted == {"u.L": 6.0}


@pytest.mark.parametrize(
    "gt, pred, mae, mse",
    [
        ([10, 10], [11, 9], 1.0, 1.0),
        ([5, 5], [5, 8], 1.5, math.sqrt(4.5)),
        ([3], [3], 0.0, 0.0),
    ],
)
def test_count_metrics(gt, pred, mae, mse):
    got_mae, got_mse = count_metrics(gt, pred)
    assert got_mae == pytest.approx(mae)
    assert got_mse == pytest.approx(mse, abs=1e-4)


@pytest.mark.parametrize("gt, pred", [([], []), ([1, 2], [1])])
def test_count_metrics_rejects_bad_input(gt, pred):
    with pytest.raises(ContractViolationError):
        count_metrics(gt, pred)
