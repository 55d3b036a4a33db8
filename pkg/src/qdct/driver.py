"""Adaptive coefficient selection for 1-D vectors and 2-D matrices.

The selection loop keeps a residual-energy ledger: the threshold window
for the next search is (residual / unaccepted-slot-count, residual), so
by pigeonhole the window always contains at least one unaccepted
coefficient while any residual remains.  Each accepted coefficient is
subtracted from the residual and the loop stops once the residual falls
below the requested fraction of total energy.  Repeated hits on an
already-accepted index are tolerated up to a limit; past the limit, or
when a search comes back empty-handed, the run exits to the classical
transform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .amplitude import (
    CoefficientCache,
    MarkPredicate,
    ThresholdWindow,
    coefficient_cache,
    g_entry_cache,
)
from .costs import OpCounters
from .search import SearchConfig, SearchOutcome, SeededRng, boyer_find
from .transform import build_dct_matrix, energy

__all__ = [
    "EnergyLedger",
    "RoundRecord",
    "SparseCoefficients",
    "RunReport",
    "subroutine1",
    "subroutine2",
    "decode_index",
    "qdct1",
    "qdct2",
    "round_to_sig",
]


def round_to_sig(x: float, digits: int) -> float:
    """Round to the given number of significant decimal digits."""
    if x == 0.0 or not math.isfinite(x):
        return x
    return round(x, digits - 1 - math.floor(math.log10(abs(x))))


@dataclass
class EnergyLedger:
    """Residual-energy bookkeeping for one selection run.

    ``sig_digits`` optionally rounds each accepted squared value to that
    many significant decimal digits before subtracting, which reproduces
    truncated printed arithmetic; by default the subtraction is exact.
    """

    total_energy: float
    slots: int
    epsilon: float
    n_max_repetition: int
    sig_digits: Optional[int] = None
    delta_e: float = field(init=False)
    n_solutions: int = field(init=False, default=0)
    repeat_counts: dict[int, int] = field(init=False, default_factory=dict)

    def __post_init__(self) -> None:
        if self.total_energy < 0:
            raise ValueError("total energy must be nonnegative")
        if self.epsilon <= 0:
            raise ValueError("threshold must be positive")
        if self.n_max_repetition < 1:
            raise ValueError("repetition limit must be at least 1")
        self.delta_e = self.total_energy

    def alpha(self) -> float:
        return self.delta_e / (self.slots - self.n_solutions)

    def beta(self) -> float:
        return self.delta_e

    def window(self) -> ThresholdWindow:
        return ThresholdWindow(self.alpha(), self.beta())

    def ratio(self) -> float:
        return self.delta_e / self.total_energy

    def count(self, index: int) -> int:
        return self.repeat_counts.get(index, 0)

    def accept(self, index: int, value: float) -> None:
        squared = value * value
        if self.sig_digits is not None:
            squared = round_to_sig(squared, self.sig_digits)
        self.delta_e = max(0.0, self.delta_e - squared)
        self.n_solutions += 1
        self.repeat_counts[index] = 1

    def repeat(self, index: int) -> None:
        self.repeat_counts[index] += 1


@dataclass
class RoundRecord:
    """One driver round: the window searched and what came of it."""

    round_no: int
    phase: int
    alpha: float
    beta: float
    found: bool
    index: object
    value: float
    outcome: str  # accepted | repeat | repeat-limit | exhausted
    delta_e: float
    ratio: float
    search_rounds: int
    iterations: int


@dataclass
class SparseCoefficients:
    """Accepted (index, value) pairs over a 1-D or 2-D coefficient grid."""

    shape: tuple[int, ...]
    entries: list[tuple]

    def densify(self) -> np.ndarray:
        out = np.zeros(self.shape)
        for index, value in self.entries:
            out[index] = value
        return out

    def energy(self) -> float:
        return float(sum(v * v for _, v in self.entries))

    def indices(self) -> list:
        return [index for index, _ in self.entries]


@dataclass
class RunReport:
    """Outcome of one selection run."""

    accepted: SparseCoefficients
    fell_back: bool
    rounds: int
    oracle_calls: int
    final_ratio: float
    total_iterations: int
    trace: list[RoundRecord] = field(default_factory=list)


def subroutine1(
    f: np.ndarray,
    d: np.ndarray,
    window: ThresholdWindow,
    cfg: SearchConfig,
    rng: Optional[SeededRng] = None,
    *,
    cache: Optional[CoefficientCache] = None,
    counters: Optional[OpCounters] = None,
) -> SearchOutcome:
    """Find one index whose squared 1-D coefficient lies in the window.

    The readout value on a found outcome is the coefficient itself,
    evaluated classically at the measured index.
    """
    f = np.asarray(f, dtype=np.float64)
    if cache is None:
        cache = coefficient_cache(d, f, counters)
    return boyer_find(MarkPredicate(cache, window), f.shape[0], cfg, rng, counters)


def subroutine2(
    m: np.ndarray,
    d: np.ndarray,
    window: ThresholdWindow,
    cfg: SearchConfig,
    rng: Optional[SeededRng] = None,
    *,
    cache: Optional[CoefficientCache] = None,
    counters: Optional[OpCounters] = None,
) -> SearchOutcome:
    """Find one entry of the column-pass matrix whose square lies in the
    window, searching the n*n flat index domain.

    The flat outcome index decodes as (i, j) = divmod(index, n) and the
    value is row i of the transform dotted with column j of the input;
    use :func:`decode_index`.  The default budget cap sqrt(n*n) = n is
    the 2-D schedule's ceiling.
    """
    m = np.asarray(m, dtype=np.float64)
    n = d.shape[0]
    if m.shape != (n, n):
        raise ValueError(f"input shape {m.shape} does not match transform size {n}")
    if cache is None:
        cache = g_entry_cache(d, m, counters)
    return boyer_find(MarkPredicate(cache, window), n * n, cfg, rng, counters)


def decode_index(flat: int, n: int) -> tuple[int, int]:
    """Map a flat search-domain index to its (row, col) pair."""
    return divmod(flat, n)


def _select(
    cache: CoefficientCache,
    slots: int,
    total_energy: float,
    epsilon: float,
    n_max_repetition: int,
    cfg: SearchConfig,
    rng: SeededRng,
    counters: Optional[OpCounters],
    sig_digits: Optional[int],
    phase: int,
    decode: Callable[[int], object],
) -> tuple[EnergyLedger, list[tuple[int, float]], bool, list[RoundRecord], int, int]:
    """Run the selection loop over one coefficient domain."""
    ledger = EnergyLedger(total_energy, slots, epsilon, n_max_repetition, sig_digits)
    accepted: list[tuple[int, float]] = []
    trace: list[RoundRecord] = []
    rounds = 0
    iterations = 0
    fell_back = False

    while ledger.ratio() >= epsilon:
        if ledger.n_solutions >= slots:
            # Every slot accepted; any residual is floating-point dust.
            ledger.delta_e = 0.0
            break
        window = ledger.window()
        out = boyer_find(MarkPredicate(cache, window), slots, cfg, rng, counters)
        rounds += 1
        iterations += out.total_iterations
        if not out.found:
            fell_back = True
            outcome = "exhausted"
        else:
            seen = ledger.count(out.index)
            if seen == 0:
                ledger.accept(out.index, out.value)
                accepted.append((out.index, out.value))
                outcome = "accepted"
            elif seen < n_max_repetition:
                ledger.repeat(out.index)
                outcome = "repeat"
            else:
                fell_back = True
                outcome = "repeat-limit"
        trace.append(
            RoundRecord(
                round_no=rounds,
                phase=phase,
                alpha=window.alpha,
                beta=window.beta,
                found=out.found,
                index=decode(out.index) if out.found else None,
                value=out.value,
                outcome=outcome,
                delta_e=ledger.delta_e,
                ratio=ledger.ratio(),
                search_rounds=out.rounds,
                iterations=out.total_iterations,
            )
        )
        if fell_back:
            break

    return ledger, accepted, fell_back, trace, rounds, iterations


def _empty_report(shape: tuple[int, ...]) -> RunReport:
    return RunReport(
        accepted=SparseCoefficients(shape=shape, entries=[]),
        fell_back=False,
        rounds=0,
        oracle_calls=0,
        final_ratio=0.0,
        total_iterations=0,
    )


def qdct1(
    f: np.ndarray,
    epsilon: float,
    n_max_repetition: int = 10,
    cfg: Optional[SearchConfig] = None,
    rng: Optional[SeededRng] = None,
    *,
    d: Optional[np.ndarray] = None,
    sig_digits: Optional[int] = None,
    counters: Optional[OpCounters] = None,
) -> RunReport:
    """Select the large 1-D coefficients of f by repeated window search.

    Stops once the residual energy drops below ``epsilon`` of the total.
    A search that exhausts its rounds, or an index re-measured past the
    repetition limit, aborts to the classical transform: the report then
    carries every coefficient and ``fell_back`` is set.
    """
    f = np.asarray(f, dtype=np.float64)
    if f.ndim != 1 or f.size < 1:
        raise ValueError(f"expected a nonempty 1-D signal, got shape {f.shape}")
    if epsilon <= 0:
        raise ValueError("threshold must be positive")
    n = f.shape[0]
    if d is None:
        d = build_dct_matrix(n)
    if cfg is None:
        cfg = SearchConfig()
    if rng is None:
        rng = SeededRng(cfg.rng_seed)

    total = energy(f)
    if total == 0.0:
        return _empty_report((n,))

    cache = coefficient_cache(d, f, counters)
    ledger, accepted, fell_back, trace, rounds, iterations = _select(
        cache, n, total, epsilon, n_max_repetition, cfg, rng, counters,
        sig_digits, phase=1, decode=lambda k: k,
    )

    if fell_back:
        # classical completion: one clean full transform, not the cache
        values = d @ f
        entries = [(i, float(values[i])) for i in range(n)]
        final_ratio = 0.0
    else:
        entries = [(i, v) for i, v in accepted]
        final_ratio = max(0.0, ledger.ratio())

    return RunReport(
        accepted=SparseCoefficients(shape=(n,), entries=entries),
        fell_back=fell_back,
        rounds=rounds,
        oracle_calls=cache.fresh,
        final_ratio=final_ratio,
        total_iterations=iterations,
        trace=trace,
    )


def qdct2(
    m: np.ndarray,
    epsilon: float,
    n_max_repetition: int = 10,
    cfg: Optional[SearchConfig] = None,
    rng: Optional[SeededRng] = None,
    *,
    d: Optional[np.ndarray] = None,
    exact_intermediate: bool = False,
    counters: Optional[OpCounters] = None,
) -> RunReport:
    """Select the large 2-D coefficients of an n-by-n matrix.

    Two passes of the same selection loop: first over the entries of the
    column transform G = D @ m, then over the entries of C = G @ D.T
    built from the sparse G of the first pass.  Each pass gets half of
    the residual budget so the composed run retains at least a
    (1 - epsilon) energy fraction of the input.  Per-pass random streams
    are derived from the given stream's seed, keeping a shorter first
    pass from shifting the second pass's draws.

    ``exact_intermediate`` feeds the exact G into the second pass
    instead of the sparse one, for attributing reconstruction error to
    one pass or the other.
    """
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.size < 1:
        raise ValueError(f"expected a nonempty square matrix, got shape {m.shape}")
    if epsilon <= 0:
        raise ValueError("threshold must be positive")
    n = m.shape[0]
    if d is None:
        d = build_dct_matrix(n)
    if cfg is None:
        cfg = SearchConfig()
    if rng is None:
        rng = SeededRng(cfg.rng_seed)

    total = energy(m)
    if total == 0.0:
        return _empty_report((n, n))

    phase_eps = epsilon / 2.0
    slots = n * n

    # Pass 1: entries of G = D @ m.
    cache1 = g_entry_cache(d, m, counters)
    ledger1, acc1, fb1, trace1, rounds1, iters1 = _select(
        cache1, slots, total, phase_eps, n_max_repetition, cfg, rng.spawn(1),
        counters, None, phase=1, decode=lambda k: decode_index(k, n),
    )

    if fb1 or exact_intermediate:
        g_sparse = d @ m
    else:
        g_sparse = np.zeros((n, n))
        for k, v in acc1:
            g_sparse[decode_index(k, n)] = v

    # Pass 2: entries of C = g_sparse @ D.T, searched through the
    # transpose so the same column-pass machinery applies:
    # C.T = D @ g_sparse.T.
    total2 = energy(g_sparse)
    if total2 == 0.0:
        return RunReport(
            accepted=SparseCoefficients(shape=(n, n), entries=[]),
            fell_back=fb1,
            rounds=rounds1,
            oracle_calls=cache1.fresh,
            final_ratio=0.0,
            total_iterations=iters1,
            trace=trace1,
        )

    cache2 = g_entry_cache(d, g_sparse.T, counters)
    ledger2, acc2, fb2, trace2, rounds2, iters2 = _select(
        cache2, slots, total2, phase_eps, n_max_repetition, cfg, rng.spawn(2),
        counters, None, phase=2,
        decode=lambda k: tuple(reversed(decode_index(k, n))),
    )

    if fb2:
        c_full = g_sparse @ d.T
        entries = [((p, q), float(c_full[p, q])) for p in range(n) for q in range(n)]
        final_ratio = 0.0
    else:
        entries = []
        for k, v in acc2:
            q, p = decode_index(k, n)
            entries.append(((p, q), v))
        final_ratio = max(0.0, ledger2.ratio())

    return RunReport(
        accepted=SparseCoefficients(shape=(n, n), entries=entries),
        fell_back=fb1 or fb2,
        rounds=rounds1 + rounds2,
        oracle_calls=cache1.fresh + cache2.fresh,
        final_ratio=final_ratio,
        total_iterations=iters1 + iters2,
        trace=trace1 + trace2,
    )
