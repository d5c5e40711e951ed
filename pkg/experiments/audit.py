"""Eigenvalue audit: pinching bounds, root identities and gap slopes."""

from __future__ import annotations

import csv
import itertools
import json
import logging
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from experiments.convergence import SlopeFit, fit_slope
from solver.spectral_core import WaveIndex
from solver.wave_modes import index_spectrum, mode_gap_report

logger = logging.getLogger(__name__)

DEFAULT_ETAS = (1e-1, 1e-2, 1e-3)
SLOPE_INDEX = WaveIndex(1, 0, 1)
SLOPE_ETAS = tuple(10.0 ** (-e) for e in np.arange(1.0, 3.01, 0.5))
EXPECTED_SLOPES = {"aw_freq_gap": 2.0, "gw_freq_gap": 3.0, "aw_vec_gap": 1.0, "gw_vec_gap": 1.0}
SLOPE_TOLERANCE = 0.05
ROUNDOFF = 1e-12
IDENTITY_TOLERANCE = 1e-10

GAP_COLUMNS = (
    "kx",
    "ky",
    "kz",
    "eta",
    "omega_a",
    "omega_aw",
    "omega_gw",
    "aw_square_gap",
    "vieta_sum",
    "vieta_product",
    "passed",
)


def audit_index(index: WaveIndex, eta: float) -> dict[str, Any]:
    """Check one index at one eta.

    ``0 <= omega_aw^2 - |k|^2 <= eta^2`` always; where the internal branch
    exists also ``0 <= omega_gw <= eta`` and the relative residuals of
    ``omega_gw^2 + omega_aw^2 = |k|^2 + eta^2`` and
    ``omega_gw^2 omega_aw^2 = eta^2 |kh|^2``.
    """
    spec = index_spectrum(index, eta)
    k2, kh2 = float(spec.k2), float(spec.kh2)
    gap = float(spec.aw_square_gap)
    omega_aw = float(spec.omega_aw)
    omega_gw = float(spec.omega_gw)
    passed = -ROUNDOFF * k2 <= gap <= eta**2 * (1 + ROUNDOFF) + ROUNDOFF * k2
    vieta_sum = vieta_product = 0.0
    if not index.horizontal_is_zero:
        passed = passed and 0.0 <= omega_gw <= eta * (1 + ROUNDOFF)
        scale = k2 + eta**2
        vieta_sum = abs(omega_gw**2 + omega_aw**2 - scale) / scale
        if eta > 0:
            vieta_product = abs(omega_gw**2 * omega_aw**2 - eta**2 * kh2) / (eta**2 * kh2)
        passed = passed and vieta_sum <= IDENTITY_TOLERANCE and vieta_product <= IDENTITY_TOLERANCE
    return {
        "kx": index.kx,
        "ky": index.ky,
        "kz": index.kz,
        "eta": eta,
        "omega_a": float(spec.omega_a),
        "omega_aw": omega_aw,
        "omega_gw": omega_gw,
        "aw_square_gap": gap,
        "vieta_sum": vieta_sum,
        "vieta_product": vieta_product,
        "passed": bool(passed),
    }


def gap_slopes(index: WaveIndex = SLOPE_INDEX, etas: Sequence[float] = SLOPE_ETAS) -> dict[str, SlopeFit]:
    """Log-log slopes of the four gaps of ``mode_gap_report`` against eta."""
    reports = [mode_gap_report(index, eta) for eta in etas]
    return {
        name: fit_slope(np.asarray(etas), np.array([getattr(r, name) for r in reports]))
        for name in EXPECTED_SLOPES
    }


@dataclass
class AuditReport:
    rows: list[dict[str, Any]]
    slopes: dict[str, SlopeFit] = field(default_factory=dict)

    @property
    def failures(self) -> list[dict[str, Any]]:
        return [row for row in self.rows if not row["passed"]]

    @property
    def slope_failures(self) -> list[str]:
        return [
            name
            for name, fit in self.slopes.items()
            if abs(fit.slope - EXPECTED_SLOPES[name]) > SLOPE_TOLERANCE
        ]

    @property
    def passed(self) -> bool:
        return not self.failures and not self.slope_failures

    def to_csv(self, path: Path) -> Path:
        path = Path(path)
        with path.open("w", newline="") as handle:
            writer = csv.DictWriter(handle, fieldnames=GAP_COLUMNS)
            writer.writeheader()
            for row in self.rows:
                writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
        return path

    def to_json(self, path: Path) -> Path:
        path = Path(path)
        summary = {
            "indices_checked": len(self.rows),
            "failures": len(self.failures),
            "slopes": {name: fit.to_dict() for name, fit in self.slopes.items()},
            "expected_slopes": EXPECTED_SLOPES,
            "slope_failures": self.slope_failures,
            "passed": self.passed,
        }
        path.write_text(json.dumps(summary, indent=2))
        return path


def experiment_eigen_audit(
    index_range: int = 8,
    etas: Sequence[float] = DEFAULT_ETAS,
    slope_index: WaveIndex = SLOPE_INDEX,
    slope_etas: Sequence[float] = SLOPE_ETAS,
) -> AuditReport:
    """Audit every non-zero index with ``0 <= kx, ky, kz <= index_range`` at each eta.

    Frequencies depend on ``kx^2 + ky^2`` and ``kz^2`` only, so the
    non-negative octant covers every admissible index.
    """
    rows = []
    for kx, ky, kz, eta in itertools.product(
        range(index_range + 1), range(index_range + 1), range(index_range + 1), etas
    ):
        index = WaveIndex(kx, ky, kz)
        if index.is_zero:
            continue
        rows.append(audit_index(index, float(eta)))
    slopes = gap_slopes(slope_index, slope_etas) if len(slope_etas) >= 2 else {}
    report = AuditReport(rows, slopes)
    logger.info(
        "Audited %d (index, eta) pairs: %d failures, slope failures %s",
        len(rows),
        len(report.failures),
        report.slope_failures or "none",
    )
    return report
