"""Amplitude-level simulation of the two-oracle search iteration.

Only the index register is simulated, as a real-valued amplitude vector.
The composed oracle chain (load record, compute squared inner product,
threshold-mark, uncompute) returns every work register to its input
state and leaves nothing behind except a sign on the index amplitude,
so the ancillas factor out of the dynamics exactly and the iteration
reduces to: flip the sign of in-window indices, then invert every
amplitude about the mean.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .costs import OpCounters

__all__ = [
    "WINDOW_REL_SLACK",
    "ThresholdWindow",
    "CoefficientCache",
    "MarkPredicate",
    "coefficient_cache",
    "g_entry_cache",
    "value_cache",
    "AmplitudeState",
    "uniform_state",
    "apply_phase_oracle",
    "apply_diffusion",
    "gdct_iterate",
    "success_probability",
    "measure",
    "sample",
]


# Window bounds come from residual-energy bookkeeping whose floating-point
# path differs from the coefficients'; a value that equals a bound in real
# arithmetic can land an ulp past it.  Membership therefore honors the
# inclusive bounds up to this relative slack.
WINDOW_REL_SLACK = 1e-9


@dataclass(frozen=True)
class ThresholdWindow:
    """Inclusive acceptance interval for squared coefficient values."""

    alpha: float
    beta: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.alpha <= self.beta):
            raise ValueError(f"window requires 0 <= alpha <= beta, got ({self.alpha}, {self.beta})")

    def contains(self, squared: float) -> bool:
        return (
            squared >= self.alpha * (1.0 - WINDOW_REL_SLACK)
            and squared <= self.beta * (1.0 + WINDOW_REL_SLACK)
        )


class CoefficientCache:
    """Lazy per-index coefficient values shared between search windows.

    Values are computed on first request, either one index at a time or
    in bulk when a full marking pass needs them.  Fresh computations are
    what the counters book as inner products; repeat lookups are cache
    hits and cost nothing.
    """

    def __init__(
        self,
        dim: int,
        compute_one: Callable[[int], float],
        compute_all: Callable[[], np.ndarray],
        counters: Optional[OpCounters] = None,
    ) -> None:
        if dim < 1:
            raise ValueError(f"domain size must be positive, got {dim}")
        self.dim = dim
        self._compute_one = compute_one
        self._compute_all = compute_all
        self._values = np.full(dim, np.nan)
        self._known = np.zeros(dim, dtype=bool)
        self._all_known = False
        self.counters = counters
        self.fresh = 0

    def value(self, i: int) -> float:
        if not self._known[i]:
            self._values[i] = self._compute_one(i)
            self._known[i] = True
            self.fresh += 1
            if self.counters is not None:
                self.counters.add_inner_products(1)
        return float(self._values[i])

    def values(self) -> np.ndarray:
        if not self._all_known:
            missing = int(self.dim - np.count_nonzero(self._known))
            if missing:
                # keep values already handed out; fill only the gaps
                self._values = np.where(self._known, self._values, self._compute_all())
                self._known[:] = True
                self.fresh += missing
                if self.counters is not None:
                    self.counters.add_inner_products(missing)
            self._all_known = True
        return self._values


def coefficient_cache(
    d: np.ndarray, f: np.ndarray, counters: Optional[OpCounters] = None
) -> CoefficientCache:
    """Cache over the 1-D transform components: value(i) = row i of d dot f."""
    f = np.asarray(f, dtype=np.float64)
    n = d.shape[0]
    if f.shape != (n,):
        raise ValueError(f"signal length {f.shape} does not match transform size {n}")
    return CoefficientCache(
        n,
        compute_one=lambda i: float(d[i] @ f),
        compute_all=lambda: d @ f,
        counters=counters,
    )


def g_entry_cache(
    d: np.ndarray, m: np.ndarray, counters: Optional[OpCounters] = None
) -> CoefficientCache:
    """Cache over the column-pass matrix entries, row-major flattened.

    Flat index k maps to (i, j) = divmod(k, n) and the value is row i of
    the transform dotted with column j of the input.
    """
    m = np.asarray(m, dtype=np.float64)
    n = d.shape[0]
    if m.shape != (n, n):
        raise ValueError(f"input shape {m.shape} does not match transform size {n}")

    def one(k: int) -> float:
        i, j = divmod(k, n)
        return float(d[i] @ m[:, j])

    return CoefficientCache(
        n * n,
        compute_one=one,
        compute_all=lambda: (d @ m).ravel(),
        counters=counters,
    )


def value_cache(values: np.ndarray, counters: Optional[OpCounters] = None) -> CoefficientCache:
    """Cache over a precomputed value array (synthetic searches, tests)."""
    values = np.asarray(values, dtype=np.float64)
    return CoefficientCache(
        values.size,
        compute_one=lambda i: float(values[i]),
        compute_all=lambda: values.copy(),
        counters=counters,
    )


class MarkPredicate:
    """Marking function over register indices: 1 iff the squared cached
    value at the index lies inside the threshold window (inclusive)."""

    def __init__(self, cache: CoefficientCache, window: ThresholdWindow) -> None:
        self.cache = cache
        self.window = window

    @property
    def dim(self) -> int:
        return self.cache.dim

    def value(self, i: int) -> float:
        return self.cache.value(i)

    def is_marked(self, i: int) -> bool:
        if self.cache.counters is not None:
            self.cache.counters.add_predicate_evals(1)
        v = self.cache.value(i)
        return self.window.contains(v * v)

    def marked_mask(self) -> np.ndarray:
        if self.cache.counters is not None:
            self.cache.counters.add_predicate_evals(self.dim)
        sq = np.square(self.cache.values())
        lo = self.window.alpha * (1.0 - WINDOW_REL_SLACK)
        hi = self.window.beta * (1.0 + WINDOW_REL_SLACK)
        return (sq >= lo) & (sq <= hi)

    def marked_count(self) -> int:
        return int(np.count_nonzero(self.marked_mask()))


@dataclass
class AmplitudeState:
    """Real amplitude vector over the index register, unit norm."""

    amplitudes: np.ndarray

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def norm_squared(self) -> float:
        a = self.amplitudes
        return float(a @ a)

    def probabilities(self) -> np.ndarray:
        return np.square(self.amplitudes)


def uniform_state(dim: int) -> AmplitudeState:
    """Equal superposition over dim indices."""
    if dim < 1:
        raise ValueError(f"dimension must be positive, got {dim}")
    return AmplitudeState(np.full(dim, 1.0 / math.sqrt(dim)))


def apply_phase_oracle(state: AmplitudeState, predicate: MarkPredicate) -> AmplitudeState:
    """Negate the amplitude of every marked index."""
    if predicate.dim != state.dim:
        raise ValueError(f"predicate domain {predicate.dim} does not match state dim {state.dim}")
    a = state.amplitudes.copy()
    mask = predicate.marked_mask()
    a[mask] = -a[mask]
    return AmplitudeState(a)


def apply_diffusion(state: AmplitudeState) -> AmplitudeState:
    """Invert every amplitude about the mean: a[i] <- 2*mean - a[i]."""
    a = state.amplitudes
    return AmplitudeState(2.0 * a.mean() - a)


def gdct_iterate(state: AmplitudeState, predicate: MarkPredicate, j: int) -> AmplitudeState:
    """Apply j iterations of (diffusion after phase oracle)."""
    if j < 0:
        raise ValueError(f"iteration count must be nonnegative, got {j}")
    if predicate.dim != state.dim:
        raise ValueError(f"predicate domain {predicate.dim} does not match state dim {state.dim}")
    if j == 0:
        return AmplitudeState(state.amplitudes.copy())
    mask = predicate.marked_mask()
    a = state.amplitudes.copy()
    if predicate.cache.counters is not None:
        predicate.cache.counters.add_iterations(j)
    for _ in range(j):
        a[mask] = -a[mask]
        np.subtract(2.0 * a.mean(), a, out=a)
    return AmplitudeState(a)


def success_probability(m: int, t: int, j: int) -> float:
    """Closed-form marked-set probability after j iterations.

    With t of m indices marked and rotation angle
    theta = 2*arcsin(sqrt(t/m)), the probability of observing a marked
    index is sin^2((2j+1) * theta/2).  Returns 0 for t = 0.
    """
    if m < 1:
        raise ValueError(f"domain size must be positive, got {m}")
    if not 0 <= t <= m:
        raise ValueError(f"solution count {t} outside [0, {m}]")
    if j < 0:
        raise ValueError(f"iteration count must be nonnegative, got {j}")
    if t == 0:
        return 0.0
    half_theta = math.asin(math.sqrt(t / m))
    return math.sin((2 * j + 1) * half_theta) ** 2


def measure(state: AmplitudeState, rng) -> int:
    """Observe the register: one uniform draw, inverse-CDF over squared
    amplitudes.  The state itself is left untouched; callers discard it
    after measuring, which is what collapse means here."""
    cdf = np.cumsum(state.probabilities())
    u = rng.random() * cdf[-1]
    idx = int(np.searchsorted(cdf, u, side="right"))
    return min(idx, state.dim - 1)


def sample(state: AmplitudeState, n: int, rng) -> np.ndarray:
    """Draw n independent measurement outcomes (n draws from rng)."""
    cdf = np.cumsum(state.probabilities())
    u = rng.random_batch(n) * cdf[-1]
    idx = np.searchsorted(cdf, u, side="right")
    return np.minimum(idx, state.dim - 1)
