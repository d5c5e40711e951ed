"""Convergence tables over an epsilon sweep and their log-log slope fits."""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
from scipy import stats

logger = logging.getLogger(__name__)

CONFIDENCE = 0.95


@dataclass(frozen=True)
class SlopeFit:
    """Least-squares fit of ``log error = slope * log epsilon + intercept``."""

    slope: float
    intercept: float
    half_width: float
    points: int

    @property
    def lower(self) -> float:
        return self.slope - self.half_width

    def to_dict(self) -> dict[str, float]:
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "half_width": self.half_width,
            "points": self.points,
        }


def fit_slope(epsilons: np.ndarray, errors: np.ndarray) -> SlopeFit:
    """Fit a power law, with the half-width of its 95% confidence band.

    The half-width is infinite with fewer than three points.

    Raises:
        ValueError: If fewer than two points are given or an error is not positive
    """
    x = np.log(np.asarray(epsilons, dtype=float))
    y_raw = np.asarray(errors, dtype=float)
    if x.size < 2:
        raise ValueError("A slope needs at least two epsilons")
    if np.any(y_raw <= 0):
        raise ValueError("Errors must be positive for a log-log fit")
    result = stats.linregress(x, np.log(y_raw))
    if x.size > 2:
        half_width = float(stats.t.ppf(0.5 + CONFIDENCE / 2, x.size - 2) * result.stderr)
    else:
        half_width = math.inf
    return SlopeFit(float(result.slope), float(result.intercept), half_width, int(x.size))


@dataclass(frozen=True)
class ConvergenceRow:
    epsilon: float
    metrics: dict[str, float]


@dataclass
class ConvergenceTable:
    """Error metrics per epsilon, sorted by decreasing epsilon.

    ``predicted`` maps metric names to the exponent the error is expected
    to decay with; ``notes`` carries per-run scalars such as the initial
    basis-swap residual.
    """

    name: str
    rows: list[ConvergenceRow]
    predicted: dict[str, float] = field(default_factory=dict)
    notes: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.rows = sorted(self.rows, key=lambda row: row.epsilon, reverse=True)
        eps = [row.epsilon for row in self.rows]
        if len(set(eps)) != len(eps):
            raise ValueError(f"Duplicate epsilons in {self.name}: {eps}")
        for row in self.rows:
            bad = [k for k, v in row.metrics.items() if not math.isfinite(v)]
            if bad:
                raise ValueError(f"Non-finite {', '.join(bad)} at epsilon={row.epsilon}")

    @property
    def epsilons(self) -> np.ndarray:
        return np.array([row.epsilon for row in self.rows])

    @property
    def metric_names(self) -> list[str]:
        names: list[str] = []
        for row in self.rows:
            names.extend(k for k in row.metrics if k not in names)
        return names

    def column(self, name: str) -> np.ndarray:
        return np.array([row.metrics[name] for row in self.rows])

    def fit(self, name: str) -> SlopeFit:
        return fit_slope(self.epsilons, self.column(name))

    def fits(self) -> dict[str, SlopeFit]:
        out = {}
        for name in self.metric_names:
            values = self.column(name)
            if len(self.rows) >= 2 and np.all(values > 0):
                out[name] = self.fit(name)
        return out

    def is_monotone(self, name: str) -> bool:
        """True if the metric strictly decreases along with epsilon."""
        values = self.column(name)
        return bool(np.all(np.diff(values) < 0))

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "rows": [{"epsilon": row.epsilon, **row.metrics} for row in self.rows],
            "fits": {name: fit.to_dict() for name, fit in self.fits().items()},
            "predicted": self.predicted,
            "notes": self.notes,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> ConvergenceTable:
        rows = [
            ConvergenceRow(row["epsilon"], {k: v for k, v in row.items() if k != "epsilon"})
            for row in data["rows"]
        ]
        return cls(data["name"], rows, dict(data.get("predicted", {})), dict(data.get("notes", {})))

    def to_json(self, path: Path) -> Path:
        path = Path(path)
        path.write_text(json.dumps(self.to_dict(), indent=2))
        return path

    def to_csv(self, path: Path) -> Path:
        names = self.metric_names
        path = Path(path)
        with path.open("w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["epsilon", *names])
            for row in self.rows:
                writer.writerow([repr(row.epsilon), *(repr(row.metrics.get(n, math.nan)) for n in names)])
        return path

    def plot_svg(self, path: Path, metrics: list[str] | None = None) -> Path:
        """Log-log plot of the metrics against epsilon with their fitted lines."""
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        fits = self.fits()
        eps = self.epsilons
        fig, ax = plt.subplots(figsize=(7, 6))
        for name in metrics or list(fits):
            fit = fits[name]
            ax.loglog(eps, self.column(name), "o", mfc="w", label=f"{name} $O(\\varepsilon^{{{fit.slope:.2f}}})$")
            ax.loglog(eps, np.exp(fit.slope * np.log(eps) + fit.intercept), "k--", lw=0.5)
        ax.grid(True)
        ax.set_xlabel(r"$\varepsilon$")
        ax.set_ylabel("error")
        ax.set_title(self.name)
        ax.legend(loc="lower right")
        path = Path(path)
        fig.savefig(path, format="svg", bbox_inches="tight")
        plt.close(fig)
        logger.info("Wrote %s", path)
        return path
