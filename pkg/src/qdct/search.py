"""Search loop for an unknown number of marked indices.

The schedule starts with a single-iteration budget and grows it
geometrically (factor 6/5) up to sqrt(M); each round picks an iteration
count uniformly below the current budget, runs the amplitude iteration
from the uniform state, measures, and verifies the outcome classically.
This finds a marked index in O(sqrt(M/t)) iterations without knowing t,
and handles t = 0 by exhausting a bounded number of rounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .amplitude import MarkPredicate, gdct_iterate, measure, uniform_state
from .costs import OpCounters

__all__ = [
    "SeededRng",
    "derive_seed",
    "SearchConfig",
    "SearchOutcome",
    "boyer_find",
    "expected_iterations_bound",
]

_MASK64 = (1 << 64) - 1


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def derive_seed(master: int, *parts: int) -> int:
    """Mix a master seed with integer labels into a new 64-bit seed.

    Pure integer arithmetic, stable across platforms and sessions, so
    per-block and per-phase streams are reproducible from the master
    seed alone.
    """
    x = _splitmix64(master & _MASK64)
    for p in parts:
        x = _splitmix64(x ^ (int(p) & _MASK64))
    return x


class SeededRng:
    """Deterministic random stream with an explicit draw counter.

    The same seed and the same sequence of calls always produce the same
    values; ``position`` counts logical draws for reporting.
    """

    def __init__(self, seed: int) -> None:
        self.seed = int(seed)
        self.position = 0
        self._gen = np.random.Generator(np.random.PCG64(self.seed & _MASK64))

    def random(self) -> float:
        self.position += 1
        return float(self._gen.random())

    def random_batch(self, n: int) -> np.ndarray:
        self.position += n
        return self._gen.random(n)

    def integers(self, upper: int) -> int:
        """Uniform integer in {0, ..., upper-1}."""
        self.position += 1
        return int(self._gen.integers(upper))

    def spawn(self, *keys: int) -> "SeededRng":
        """Independent stream derived from this stream's seed and keys."""
        return SeededRng(derive_seed(self.seed, *keys))


@dataclass(frozen=True)
class SearchConfig:
    """Schedule parameters.

    lam         budget growth factor, strictly between 1 and 4/3
    m_cap       budget ceiling; defaults to sqrt(M) of the search domain
    max_rounds  unsuccessful rounds before giving up; defaults to the
                rounds needed to reach the cap plus 30 rounds at the cap
                (false-negative probability below 1e-9 when any solution
                exists)
    rng_seed    seed used when no stream is passed to the search
    """

    lam: float = 6.0 / 5.0
    m_cap: Optional[float] = None
    max_rounds: Optional[int] = None
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if not (1.0 < self.lam < 4.0 / 3.0):
            raise ValueError(f"growth factor must lie strictly in (1, 4/3), got {self.lam}")
        if self.m_cap is not None and self.m_cap < 1.0:
            raise ValueError(f"budget cap must be >= 1, got {self.m_cap}")
        if self.max_rounds is not None and self.max_rounds < 1:
            raise ValueError(f"max_rounds must be positive, got {self.max_rounds}")

    def resolved_cap(self, domain_size: int) -> float:
        return self.m_cap if self.m_cap is not None else math.sqrt(domain_size)

    def resolved_max_rounds(self, cap: float) -> int:
        if self.max_rounds is not None:
            return self.max_rounds
        ramp = math.ceil(math.log(cap) / math.log(self.lam)) if cap > 1.0 else 0
        return ramp + 30


@dataclass
class SearchOutcome:
    """Result of one search: the measured index (flat), its coefficient
    value, and the work done."""

    found: bool
    index: int
    value: float
    rounds: int
    total_iterations: int
    oracle_calls: int


def boyer_find(
    predicate: MarkPredicate,
    domain_size: int,
    cfg: SearchConfig,
    rng: Optional[SeededRng] = None,
    counters: Optional[OpCounters] = None,
) -> SearchOutcome:
    """Search for any index the predicate marks.

    Each round: draw j uniformly from {0, ..., ceil(m)-1}, run j
    iterations from the uniform state, measure, verify.  On failure grow
    m by the configured factor up to the cap.  Returns found=False after
    max_rounds unsuccessful rounds (the t = 0 exit).
    """
    if domain_size < 1:
        raise ValueError(f"domain size must be positive, got {domain_size}")
    if predicate.dim != domain_size:
        raise ValueError(
            f"predicate domain {predicate.dim} does not match search domain {domain_size}"
        )
    if rng is None:
        rng = SeededRng(cfg.rng_seed)

    cap = cfg.resolved_cap(domain_size)
    max_rounds = cfg.resolved_max_rounds(cap)
    fresh_before = predicate.cache.fresh

    m = 1.0
    total_iterations = 0
    for round_no in range(1, max_rounds + 1):
        j = rng.integers(math.ceil(m))
        state = gdct_iterate(uniform_state(domain_size), predicate, j)
        total_iterations += j
        outcome = measure(state, rng)
        if counters is not None:
            counters.add_measurements(1)
        if predicate.is_marked(outcome):
            return SearchOutcome(
                found=True,
                index=outcome,
                value=predicate.value(outcome),
                rounds=round_no,
                total_iterations=total_iterations,
                oracle_calls=predicate.cache.fresh - fresh_before,
            )
        m = min(cfg.lam * m, cap)
    return SearchOutcome(
        found=False,
        index=-1,
        value=float("nan"),
        rounds=max_rounds,
        total_iterations=total_iterations,
        oracle_calls=predicate.cache.fresh - fresh_before,
    )


def expected_iterations_bound(domain_size: int, t: int) -> float:
    """Analytic sqrt(M/t) comparison value for iteration-count scaling.

    The empirical constant in front is fitted by the scaling report and
    is expected to stay below 9/2.
    """
    if domain_size < 1:
        raise ValueError(f"domain size must be positive, got {domain_size}")
    if not 1 <= t <= domain_size:
        raise ValueError(f"solution count {t} outside [1, {domain_size}]")
    return math.sqrt(domain_size / t)
