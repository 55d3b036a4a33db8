"""Abstract operation-time model and empirical work counters.

The time model assigns unit costs to addition, multiplication, division,
comparison and record loading, and derives from them the cost of one
parallel inner product and of one full search iteration.  The counters
tally what the simulator actually did so that iteration counts can be
turned into scaling reports.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import stats

__all__ = [
    "CostModel",
    "DEFAULT_COST_MODEL",
    "OpCounters",
    "ScalingReport",
    "inner_product_time",
    "gdct_iteration_time",
    "scaling_report",
]


@dataclass(frozen=True)
class CostModel:
    """Unit times for scalar operations.

    Constraints: multiplication costs at least 25 additions, division
    costs twice a multiplication, comparison is negligible next to an
    addition, and loading a stored record is free.
    """

    t_a: float = 1.0
    t_m: float = 25.0
    t_d: float = 50.0
    t_c: float = 0.04
    t_l: float = 0.0

    def __post_init__(self) -> None:
        if min(self.t_a, self.t_m, self.t_d, self.t_c, self.t_l) < 0:
            raise ValueError("cost units must be nonnegative")
        if self.t_m < 25.0 * self.t_a:
            raise ValueError("multiplication must cost at least 25 additions")
        if not math.isclose(self.t_d, 2.0 * self.t_m, rel_tol=1e-12):
            raise ValueError("division must cost twice a multiplication")
        if self.t_c > self.t_a / 25.0:
            raise ValueError("comparison must be negligible (<= t_a/25)")
        if self.t_l != 0.0:
            raise ValueError("record load time is modeled as zero")


DEFAULT_COST_MODEL = CostModel()


def _ceil_log2(n: int) -> int:
    if n < 1:
        raise ValueError(f"size must be a positive integer, got {n}")
    return (n - 1).bit_length()


def inner_product_time(n: int, model: CostModel = DEFAULT_COST_MODEL) -> float:
    """Time of one length-n inner product on the parallel adder tree:
    one multiplication stage plus ceil(log2 n) addition stages."""
    return model.t_m + _ceil_log2(n) * model.t_a


def gdct_iteration_time(n: int, model: CostModel = DEFAULT_COST_MODEL) -> float:
    """Time of one search iteration: load/unload, inner-product oracle and
    its inverse (each one squaring multiplication on top of the inner
    product), and the two threshold comparisons."""
    return 2.0 * model.t_l + 2.0 * (inner_product_time(n, model) + model.t_m) + 2.0 * model.t_c


# Model sanity at import: the stated inequalities hold even for an index
# register of 100 bits.
assert inner_product_time(2**100, DEFAULT_COST_MODEL) <= 5.0 * DEFAULT_COST_MODEL.t_m
assert gdct_iteration_time(2**100, DEFAULT_COST_MODEL) <= 13.0 * DEFAULT_COST_MODEL.t_m


class OpCounters:
    """Thread-safe tally of simulator work.

    inner_products   fresh coefficient evaluations (cache misses)
    predicate_evals  raw window checks, cached or not
    gdct_iterations  search iterations applied
    measurements     register observations
    """

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self.inner_products = 0
        self.predicate_evals = 0
        self.gdct_iterations = 0
        self.measurements = 0

    def add_inner_products(self, k: int) -> None:
        with self._lock:
            self.inner_products += k

    def add_predicate_evals(self, k: int) -> None:
        with self._lock:
            self.predicate_evals += k

    def add_iterations(self, k: int) -> None:
        with self._lock:
            self.gdct_iterations += k

    def add_measurements(self, k: int) -> None:
        with self._lock:
            self.measurements += k

    def snapshot(self) -> dict[str, int]:
        with self._lock:
            return {
                "inner_products": self.inner_products,
                "predicate_evals": self.predicate_evals,
                "gdct_iterations": self.gdct_iterations,
                "measurements": self.measurements,
            }


@dataclass
class ScalingReport:
    """Log-log fit of mean iteration counts against problem size."""

    sizes: list[int]
    means: list[float]
    exponent: float
    ci_low: float
    ci_high: float
    prefactor: float
    claimed_exponent: float
    tolerance: float
    passed: bool
    bound_ratio: float = field(default=float("nan"))

    def rows(self) -> list[tuple[int, float]]:
        return list(zip(self.sizes, self.means))


def scaling_report(
    trials: Sequence[tuple[int, int, float]],
    claimed_exponent: float,
    tolerance: float = 0.1,
) -> ScalingReport:
    """Fit mean iterations against size on a log-log scale.

    ``trials`` holds (size, solution_count, iterations) records; the
    solution count must be constant across the set.  Returns the fitted
    exponent with a 95% confidence interval and a pass flag for
    ``|exponent - claimed| <= tolerance``.
    """
    if not trials:
        raise ValueError("no trials supplied")
    t_values = {t for _, t, _ in trials}
    if len(t_values) != 1:
        raise ValueError(f"solution count must be fixed across trials, got {sorted(t_values)}")
    (t_fixed,) = t_values

    by_size: dict[int, list[float]] = {}
    for size, _, iters in trials:
        by_size.setdefault(int(size), []).append(float(iters))
    if len(by_size) < 3:
        raise ValueError(f"need at least 3 distinct sizes, got {len(by_size)}")

    sizes = sorted(by_size)
    means = [float(np.mean(by_size[s])) for s in sizes]
    x = np.log(np.asarray(sizes, dtype=np.float64))
    y = np.log(np.asarray(means, dtype=np.float64))

    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    dof = len(x) - 2
    sxx = float(np.sum((x - x.mean()) ** 2))
    if dof > 0 and sxx > 0:
        se = math.sqrt(float(np.sum(resid**2)) / dof / sxx)
        half = float(stats.t.ppf(0.975, dof)) * se
    else:
        half = float("inf") if sxx > 0 else 0.0
    bound_ratio = max(
        m / (s / t_fixed) ** claimed_exponent for s, m in zip(sizes, means)
    )

    exponent = float(slope)
    return ScalingReport(
        sizes=sizes,
        means=means,
        exponent=exponent,
        ci_low=exponent - half,
        ci_high=exponent + half,
        prefactor=float(np.exp(intercept)),
        claimed_exponent=claimed_exponent,
        tolerance=tolerance,
        passed=abs(exponent - claimed_exponent) <= tolerance,
        bound_ratio=float(bound_ratio),
    )
