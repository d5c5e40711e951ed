"""Unit tests for convergence tables and slope fits."""

import math

import numpy as np
import pytest

from experiments.convergence import ConvergenceRow, ConvergenceTable, fit_slope

EPSILONS = np.array([0.2, 0.1, 0.05, 0.025])


def _table(**kwargs):
    rows = [ConvergenceRow(eps, {"sup_error": 2.0 * eps**0.5, "final_error": eps}) for eps in (0.05, 0.2, 0.1)]
    return ConvergenceTable("wellprepared", rows, **kwargs)


def test_fit_slope_recovers_power_law():
    """Test that an exact power law is fitted with a vanishing confidence band."""
    fit = fit_slope(EPSILONS, 3.0 * EPSILONS**1.5)
    assert fit.slope == pytest.approx(1.5)
    assert fit.intercept == pytest.approx(math.log(3.0))
    assert fit.half_width == pytest.approx(0.0, abs=1e-10)
    assert fit.points == 4


def test_fit_slope_with_two_points_has_infinite_band():
    fit = fit_slope(EPSILONS[:2], EPSILONS[:2] ** 2)
    assert fit.slope == pytest.approx(2.0)
    assert math.isinf(fit.half_width)


def test_fit_slope_band_covers_noisy_slope():
    rng = np.random.default_rng(0)
    errors = EPSILONS**0.75 * np.exp(0.05 * rng.standard_normal(EPSILONS.size))
    fit = fit_slope(EPSILONS, errors)
    assert fit.half_width > 0
    assert fit.lower < fit.slope


@pytest.mark.parametrize(
    "epsilons,errors",
    [([0.1], [1.0]), ([0.1, 0.05], [1.0, 0.0]), ([0.1, 0.05], [1.0, -2.0])],
)
def test_fit_slope_rejects_invalid_input(epsilons, errors):
    with pytest.raises(ValueError):
        fit_slope(np.array(epsilons), np.array(errors))


def test_table_sorts_by_decreasing_epsilon():
    table = _table()
    np.testing.assert_array_equal(table.epsilons, [0.2, 0.1, 0.05])
    assert table.metric_names == ["sup_error", "final_error"]
    assert table.is_monotone("sup_error")
    assert table.fit("sup_error").slope == pytest.approx(0.5)


def test_table_rejects_duplicate_epsilons():
    rows = [ConvergenceRow(0.1, {"sup_error": 1.0}), ConvergenceRow(0.1, {"sup_error": 0.5})]
    with pytest.raises(ValueError, match="Duplicate"):
        ConvergenceTable("wellprepared", rows)


def test_table_rejects_non_finite_metrics():
    rows = [ConvergenceRow(0.1, {"sup_error": math.nan})]
    with pytest.raises(ValueError, match="Non-finite"):
        ConvergenceTable("wellprepared", rows)


def test_is_monotone_detects_growth():
    rows = [ConvergenceRow(0.2, {"sup_error": 1.0}), ConvergenceRow(0.1, {"sup_error": 1.5})]
    assert not ConvergenceTable("illprepared", rows).is_monotone("sup_error")


def test_table_csv(tmp_path):
    """Test the CSV header and the row order."""
    path = _table().to_csv(tmp_path / "wellprepared.csv")

    lines = path.read_text().splitlines()

    assert lines[0] == "epsilon,sup_error,final_error"
    assert [line.split(",")[0] for line in lines[1:]] == ["0.2", "0.1", "0.05"]


def test_table_dict_round_trip():
    table = _table(predicted={"sup_error": 0.5}, notes={"nu": 0.25})

    data = table.to_dict()
    restored = ConvergenceTable.from_dict(data)

    assert data["fits"]["sup_error"]["slope"] == pytest.approx(0.5)
    assert restored.predicted == {"sup_error": 0.5}
    assert restored.notes == {"nu": 0.25}
    np.testing.assert_array_equal(restored.column("final_error"), table.column("final_error"))


def test_table_json_and_svg(tmp_path):
    """Test that the JSON summary and the log-log plot are written."""
    table = _table()

    json_path = table.to_json(tmp_path / "wellprepared.json")
    svg_path = table.plot_svg(tmp_path / "wellprepared.svg")

    assert '"name": "wellprepared"' in json_path.read_text()
    assert "<svg" in svg_path.read_text()
