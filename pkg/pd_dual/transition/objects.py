from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from scipy import stats

from pd_dual.common.config import DEFAULT_SETTINGS, Settings


@dataclass
class DensityEval:
    """
    A truncated evaluation of the transition density p(t, x, y).

    Args:
        value (`float`):
            The truncated partial sum.
        truncation_order (`int`):
            Last index kept (n_max or m_max).
        tail_estimate (`float`):
            Non-negative size estimate of the dropped terms; loose, see `tail_mass`.
        form (`str`):
            "mixture" or "spectral".
        tail_mass (`float`, optional):
            Mass of the dropped mixture weights (mixture form) or of the
            dropped eigenvalue factors (spectral form).
    """

    value: float
    truncation_order: int
    tail_estimate: float
    form: str
    tail_mass: float = 0.0

    def __post_init__(self):
        if self.form not in ("mixture", "spectral"):
            raise ValueError(f"Unknown density form: {self.form}. Available forms are: `mixture`, `spectral`")
        if self.tail_estimate < 0:
            raise ValueError(f"Tail estimate must be non-negative, got {self.tail_estimate}")

    def to_json(self) -> Dict[str, Any]:
        return {
            "form": self.form,
            "value": self.value,
            "truncation_order": self.truncation_order,
            "tail_estimate": self.tail_estimate,
            "tail_mass": self.tail_mass,
            "tail_bound": "loose",
        }


@dataclass
class MCReport:
    """
    Monte-Carlo estimate against an exact value.

    For mean comparisons `estimate` is the sample mean and the verdict is
    |z| <= z_threshold. For χ² comparisons `estimate` is the statistic,
    `exact_value` its degrees of freedom, `std_error` sqrt(2 df), and the
    verdict is p_value > p_floor.

    Args:
        name (`str`):
            What was checked.
        exact_value (`float`):
            Exact side of the comparison.
        estimate (`float`):
            Monte-Carlo side.
        std_error (`float`):
            Standard error of the estimate.
        trials (`int`):
            Number of Monte-Carlo trials actually used.
        z_score (`float`):
            (estimate - exact_value) / std_error.
        passed (`bool`):
            The verdict.
        p_value (`float`, optional):
            Two-sided p-value of the comparison.
        cells (`List[Dict[str, Any]]`, optional):
            Per-cell statistics of a χ² comparison.
        details (`Dict[str, Any]`, optional):
            Anything else worth reporting.
    """

    name: str
    exact_value: float
    estimate: float
    std_error: float
    trials: int
    z_score: float
    passed: bool
    p_value: Optional[float] = None
    cells: List[Dict[str, Any]] = field(default_factory=list)
    details: Dict[str, Any] = field(default_factory=dict)

    @staticmethod
    def from_moments(
        name: str,
        exact_value: float,
        total: float,
        total_squares: float,
        trials: int,
        settings: Settings = DEFAULT_SETTINGS,
    ) -> MCReport:
        """
        Build a mean comparison from the running sums Σ v and Σ v².
        """
        if trials < 1:
            raise ValueError(f"Need at least one trial, got {trials}")
        mean = total / trials
        variance = max(total_squares - trials * mean * mean, 0.0) / max(trials - 1, 1)
        std_error = math.sqrt(variance / trials)
        gap = mean - exact_value
        if abs(gap) <= 1e-12 * max(1.0, abs(exact_value)):
            # agreement at roundoff level
            z_score = 0.0
        elif std_error > 0:
            z_score = gap / std_error
        else:
            z_score = math.copysign(math.inf, gap)
        return MCReport(
            name=name,
            exact_value=float(exact_value),
            estimate=float(mean),
            std_error=std_error,
            trials=trials,
            z_score=float(z_score),
            passed=abs(z_score) <= settings.z_threshold,
            p_value=float(2 * stats.norm.sf(abs(z_score))),
        )

    @staticmethod
    def from_samples(
        name: str, exact_value: float, values: Sequence[float], settings: Settings = DEFAULT_SETTINGS
    ) -> MCReport:
        values = np.asarray(values, dtype=float)
        return MCReport.from_moments(
            name, exact_value, float(values.sum()), float((values**2).sum()), len(values), settings
        )

    @staticmethod
    def from_counts(
        name: str,
        labels: Sequence[str],
        observed: Sequence[float],
        probabilities: Sequence[float],
        settings: Settings = DEFAULT_SETTINGS,
        min_expected: float = 5.0,
    ) -> MCReport:
        """
        χ² goodness of fit of observed cell counts against exact cell
        probabilities; cells expecting fewer than `min_expected` hits are
        pooled into one.
        """
        observed = np.asarray(observed, dtype=float)
        probabilities = np.asarray(probabilities, dtype=float)
        trials = int(observed.sum())
        if trials < 1:
            raise ValueError(f"Nothing was observed for {name}")
        expected = trials * probabilities / probabilities.sum()
        cells = [
            {"cell": label, "observed": int(o), "expected": float(e)}
            for label, o, e in zip(labels, observed, expected)
        ]
        small = expected < min_expected
        if small.any() and (~small).any():
            observed = np.append(observed[~small], observed[small].sum())
            expected = np.append(expected[~small], expected[small].sum())
        df = len(observed) - 1
        if df < 1:
            return MCReport(name, 0.0, 0.0, 0.0, trials, 0.0, True, 1.0, cells)
        statistic, p_value = stats.chisquare(observed, expected)
        std_error = math.sqrt(2 * df)
        return MCReport(
            name=name,
            exact_value=float(df),
            estimate=float(statistic),
            std_error=std_error,
            trials=trials,
            z_score=float((statistic - df) / std_error),
            passed=bool(p_value > settings.p_floor),
            p_value=float(p_value),
            cells=cells,
            details={"pooled_cells": int(small.sum()) if (~small).any() else 0},
        )

    @staticmethod
    def merge_moments(parts: Sequence[Sequence[float]]) -> List[float]:
        """
        Pool (Σ v, Σ v², count) triples of independent shards.
        """
        return [float(sum(p[0] for p in parts)), float(sum(p[1] for p in parts)), int(sum(p[2] for p in parts))]

    def to_json(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "exact_value": self.exact_value,
            "estimate": self.estimate,
            "std_error": self.std_error,
            "trials": self.trials,
            "z_score": self.z_score,
            "p_value": self.p_value,
            "pass": self.passed,
            "details": self.details,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json())


@dataclass
class BonferroniSummary:
    """
    Family-wise verdict over a grid of reports: each p-value is compared with
    family_alpha / tests.
    """

    tests: int
    family_alpha: float
    per_test_alpha: float
    min_p_value: float
    failures: List[str]

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_json(self) -> Dict[str, Any]:
        return {
            "tests": self.tests,
            "family_alpha": self.family_alpha,
            "per_test_alpha": self.per_test_alpha,
            "min_p_value": self.min_p_value,
            "failures": self.failures,
            "pass": self.passed,
        }
