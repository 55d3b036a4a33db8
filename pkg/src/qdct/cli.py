"""Command-line front end.

Subcommands: transform vectors/matrices, replay the built-in
coefficient-selection walkthrough, compress/decompress PGM images, and
run seeded scaling benchmarks.  Report-producing commands also render a
figure next to their text output unless asked not to.

Exit codes:
  0  success
  2  usage error (bad flags, missing/empty input data)
  3  input parse or format error
  4  verification mismatch
  5  quantum-sim compression fell back on every block
  6  I/O error
"""

from __future__ import annotations

import argparse
import hashlib
import json
import re
import sys
import time
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .amplitude import ThresholdWindow, coefficient_cache, g_entry_cache
from .costs import scaling_report
from .driver import RunReport, qdct1, subroutine1, subroutine2
from .images import (
    ContainerError,
    PgmError,
    compress,
    decompress,
    parse_container,
    parse_mode,
    psnr,
    read_pgm,
    serialize_container,
    write_pgm,
)
from .search import SearchConfig, SeededRng, derive_seed
from .transform import build_dct_matrix, dct1d, dct2d, energy, idct1d, idct2d

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_VERIFY = 4
EXIT_FALLBACK = 5
EXIT_IO = 6

_EXIT_CODE_HELP = """exit codes:
  0  success
  2  usage error (bad flags, missing/empty input data)
  3  input parse or format error
  4  verification mismatch (--verify)
  5  quantum-sim compression fell back on every block
  6  I/O error
"""

# First eight gray values of the walkthrough's source row.
DEMO_VECTOR = (156.0, 159.0, 158.0, 155.0, 158.0, 156.0, 159.0, 158.0)
# Seed whose measurement trace accepts indices 0, 6, 7 in that order;
# any seed is valid, this one reproduces the full checkpoint table.
DEFAULT_DEMO_SEED = 34
DEFAULT_EPSILON = 2.0e-5

_DEMO_COEFF_SQ = (1.9814e5, 0.51531, 1.5063, 0.95824, 3.125, 2.5846, 2.7437, 4.4418)


class ParseFailure(Exception):
    """Input text that could not be parsed; carries line/column."""

    def __init__(self, message: str, line: int, column: int) -> None:
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class UsageFailure(Exception):
    pass


def fmt(v: float) -> str:
    if v == float("inf"):
        return "inf"
    return format(v, ".17g")


def _read_bytes(path: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc}") from exc


class OutputTracker:
    """Collects emitted files so a manifest can hash them afterwards."""

    def __init__(self) -> None:
        self.paths: list[Path] = []

    def write_bytes(self, path: str, data: bytes) -> None:
        p = Path(path)
        p.write_bytes(data)
        self.paths.append(p)

    def write_text(self, path: str, text: str) -> None:
        self.write_bytes(path, text.encode("utf-8"))

    def note(self, path) -> None:
        self.paths.append(Path(path))


def _emit(lines: list[str], out: Optional[str], tracker: OutputTracker) -> None:
    text = "\n".join(lines) + "\n"
    if out:
        tracker.write_text(out, text)
    else:
        sys.stdout.write(text)


def _figure_path(out: str) -> Path:
    p = Path(out)
    fig = p.with_suffix(".png")
    if fig == p:
        fig = p.with_name(p.name + ".fig.png")
    return fig


def _write_manifest(path: str, command: str, argv: Sequence[str], seed: Optional[int],
                    elapsed: float, tracker: OutputTracker) -> None:
    outputs = []
    for p in tracker.paths:
        data = p.read_bytes()
        outputs.append(
            {"path": str(p), "sha256": hashlib.sha256(data).hexdigest(), "bytes": len(data)}
        )
    doc = {
        "command": command,
        "argv": list(argv),
        "seed": seed,
        "elapsed_s": elapsed,
        "outputs": outputs,
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def _parse_numbers(text: str) -> list[list[float]]:
    """Whitespace-separated decimals, one row per nonempty line."""
    rows: list[list[float]] = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        row = []
        for match in re.finditer(r"\S+", line):
            tok = match.group()
            try:
                row.append(float(tok))
            except ValueError:
                raise ParseFailure(f"not a number: {tok!r}", line_no, match.start() + 1) from None
        if row:
            rows.append(row)
    return rows


# ---------------------------------------------------------------------------
# dct


def cmd_dct(args: argparse.Namespace, tracker: OutputTracker) -> int:
    text = _read_bytes(args.input).decode("utf-8", errors="replace")
    rows = _parse_numbers(text)
    if not rows:
        raise UsageFailure(f"no numeric data in {args.input}")

    if args.two_d:
        width = len(rows[0])
        for line_no, row in enumerate(rows, start=1):
            if len(row) != width:
                raise ParseFailure(f"row has {len(row)} entries, expected {width}", line_no, 1)
        m = np.asarray(rows)
        if m.shape[0] != m.shape[1]:
            raise ParseFailure(f"matrix must be square, got {m.shape[0]}x{m.shape[1]}", 1, 1)
        d = build_dct_matrix(m.shape[0])
        out = idct2d(m, d) if args.inverse else dct2d(m, d)
        lines = [" ".join(fmt(v) for v in row) for row in out]
    else:
        flat = [v for row in rows for v in row]
        f = np.asarray(flat)
        d = build_dct_matrix(f.size)
        out = idct1d(f, d) if args.inverse else dct1d(f, d)
        lines = [" ".join(fmt(v) for v in out)]

    _emit(lines, args.out, tracker)
    return EXIT_OK


# ---------------------------------------------------------------------------
# demo-example


def _check(name: str, expected: float, actual: Optional[float], rel: float = 1e-3):
    """One checkpoint row: pass/fail when a value is available, else skipped."""
    if actual is None:
        return (name, expected, actual, "skipped")
    scale = max(abs(expected), 1e-300)
    ok = abs(actual - expected) / scale <= rel
    return (name, expected, actual, "pass" if ok else "fail")


def demo_checkpoints(report: RunReport, coeff_sq: np.ndarray, total: float, epsilon: float):
    """Checkpoint table for the walkthrough verification.

    The residual and window values after the first acceptance are fixed
    by the arithmetic; the later ones depend on which of the four
    equally likely solutions the trace measures, so they are only
    checked when the accepted order is 0, 6, 7.
    """
    checks = []
    checks.append(_check("total_energy", 198151.0, total, rel=0.0))
    for i, expected in enumerate(_DEMO_COEFF_SQ):
        checks.append(_check(f"coeff_sq_{i}", expected, float(coeff_sq[i])))

    first = report.trace[0] if report.trace else None
    checks.append(_check("first_window_alpha", 24768.875,
                         first.alpha if first else None))
    checks.append(_check("first_window_beta", 198151.0,
                         first.beta if first else None))

    accepted_order = [i for i, _ in report.accepted.entries] if not report.fell_back else []
    first_accept = next((r for r in report.trace if r.outcome == "accepted"), None)
    checks.append(_check("first_accepted_index", 0.0,
                         float(first_accept.index) if first_accept else None, rel=0.0))
    checks.append(_check("delta_e_after_first", 11.0,
                         first_accept.delta_e if first_accept else None))
    checks.append(_check("second_window_alpha", 1.57143,
                         first_accept.delta_e / 7.0 if first_accept else None))

    follows_walkthrough = accepted_order[:3] == [0, 6, 7]
    acc_records = [r for r in report.trace if r.outcome == "accepted"]
    if follows_walkthrough and len(acc_records) >= 3:
        checks.append(_check("delta_e_after_second", 8.2563, acc_records[1].delta_e))
        checks.append(_check("third_window_alpha", 1.37605, acc_records[1].delta_e / 6.0))
        checks.append(_check("final_ratio", 1.92505e-5, acc_records[2].ratio))
    else:
        checks.append(_check("delta_e_after_second", 8.2563, None))
        checks.append(_check("third_window_alpha", 1.37605, None))
        checks.append(_check("final_ratio", 1.92505e-5, None))

    exit_ok = report.fell_back or report.final_ratio < epsilon
    checks.append(("ledger_exit", 0.0, 0.0 if exit_ok else 1.0, "pass" if exit_ok else "fail"))
    return checks, follows_walkthrough


def cmd_demo(args: argparse.Namespace, tracker: OutputTracker) -> int:
    f = np.asarray(DEMO_VECTOR)
    d = build_dct_matrix(8)
    coeff_sq = dct1d(f, d) ** 2
    total = energy(f)
    rng = SeededRng(args.seed)
    report = qdct1(f, args.epsilon, cfg=SearchConfig(), rng=rng, d=d, sig_digits=5)

    lines = [
        "record=qdct1-demo",
        f"seed={args.seed}",
        f"epsilon={fmt(args.epsilon)}",
        "vector=" + " ".join(fmt(v) for v in f),
        f"total_energy={fmt(total)}",
        "coeff_sq=" + " ".join(fmt(v) for v in coeff_sq),
    ]
    for rec in report.trace:
        lines.append(
            f"round={rec.round_no} alpha={fmt(rec.alpha)} beta={fmt(rec.beta)}"
            f" found={str(rec.found).lower()} index={rec.index}"
            f" value={fmt(rec.value)} outcome={rec.outcome}"
            f" delta_e={fmt(rec.delta_e)} ratio={fmt(rec.ratio)}"
            f" searches={rec.search_rounds} iterations={rec.iterations}"
        )
    lines.append(
        "accepted=" + ",".join(f"{i}:{fmt(v)}" for i, v in report.accepted.entries)
    )
    lines.append(f"accepted_count={len(report.accepted.entries)}")
    lines.append(f"fell_back={str(report.fell_back).lower()}")
    lines.append(f"final_ratio={fmt(report.final_ratio)}")
    lines.append(f"oracle_calls={report.oracle_calls}")
    lines.append(f"total_iterations={report.total_iterations}")

    failed = False
    if args.verify:
        checks, follows = demo_checkpoints(report, coeff_sq, total, args.epsilon)
        for name, expected, actual, status in checks:
            actual_s = fmt(actual) if actual is not None else "-"
            lines.append(f"check={name} expected={fmt(expected)} actual={actual_s} status={status}")
        lines.append(f"walkthrough_order={str(follows).lower()}")
        failed = any(status == "fail" for _, _, _, status in checks)
        lines.append(f"verify={'fail' if failed else 'pass'}")

    _emit(lines, args.out, tracker)
    if args.out and not args.no_figure:
        from .report import save_demo_figure

        fig = _figure_path(args.out)
        save_demo_figure(fig, coeff_sq, report, args.epsilon)
        tracker.note(fig)
    return EXIT_VERIFY if failed else EXIT_OK


# ---------------------------------------------------------------------------
# compress / decompress


def _compress_stats(container, img, recon) -> list[str]:
    total_slots = len(container.blocks) * container.block_size**2
    kept = sum(len(b.entries) for b in container.blocks)
    fallbacks = sum(1 for b in container.blocks if b.fell_back)
    ratios = [b.retained_ratio for b in container.blocks]
    lines = [
        "record=compress-stats",
        f"width={container.width} height={container.height} block={container.block_size}",
        f"epsilon={fmt(container.epsilon)} mode={container.mode} seed={container.seed}",
        f"blocks={len(container.blocks)}",
        f"coefficients_kept={kept}",
        f"kept_fraction={fmt(kept / total_slots)}",
        f"retained_ratio_min={fmt(min(ratios))}",
        f"retained_ratio_mean={fmt(float(np.mean(ratios)))}",
        f"fallback_blocks={fallbacks}",
        f"fallback_rate={fmt(fallbacks / len(container.blocks))}",
        f"oracle_calls={sum(b.oracle_calls for b in container.blocks)}",
        f"psnr={fmt(psnr(img, recon))}",
    ]
    for b in container.blocks:
        lines.append(
            f"block={b.row},{b.col} kept={len(b.entries)}"
            f" ratio={fmt(b.retained_ratio)} fallback={str(b.fell_back).lower()}"
        )
    return lines


def cmd_compress(args: argparse.Namespace, tracker: OutputTracker) -> int:
    img = read_pgm(_read_bytes(args.input))
    container = compress(
        img,
        epsilon=args.epsilon,
        mode=args.mode,
        master_seed=args.seed,
        block_size=args.block,
        jobs=args.jobs,
    )
    tracker.write_bytes(args.out, serialize_container(container))

    recon = decompress(container)
    stats = _compress_stats(container, img, recon)
    _emit(stats, args.stats_out, tracker)
    if args.stats_out and not args.no_figure:
        from .report import save_compress_figure

        fig = _figure_path(args.stats_out)
        save_compress_figure(fig, container)
        tracker.note(fig)

    if args.mode == "quantum-sim" and all(b.fell_back for b in container.blocks):
        return EXIT_FALLBACK
    return EXIT_OK


def cmd_decompress(args: argparse.Namespace, tracker: OutputTracker) -> int:
    container = parse_container(_read_bytes(args.input))
    img = decompress(container)
    tracker.write_bytes(args.out, write_pgm(img))

    lines = [
        "record=decompress-stats",
        f"width={container.width} height={container.height} block={container.block_size}",
        f"mode={container.mode}",
    ]
    if args.original:
        ref = read_pgm(_read_bytes(args.original))
        lines.append(f"psnr={fmt(psnr(ref, img))}")
    _emit(lines, args.stats_out, tracker)
    return EXIT_OK


# ---------------------------------------------------------------------------
# bench-scaling


def bench_trials_1d(sizes: list[int], trials: int, seed: int):
    """Seeded searches with exactly one in-window coefficient.

    A constant input concentrates all energy in component zero, so the
    window (M/2, 2M) marks exactly that one index; every trial runs the
    full search loop against a shared coefficient cache.  Each record
    carries the trial's oracle-query count (iterations plus the one
    readout ending every round) and the raw iteration count.
    """
    records = []
    cfg = SearchConfig()
    for m in sizes:
        d = build_dct_matrix(m)
        f = np.ones(m)
        cache = coefficient_cache(d, f)
        window = ThresholdWindow(m / 2.0, 2.0 * m)
        for trial in range(trials):
            rng = SeededRng(derive_seed(seed, m, trial))
            out = subroutine1(f, d, window, cfg, rng, cache=cache)
            records.append((m, 1, out.total_iterations + out.rounds, out.total_iterations))
        del d
    return records


def bench_trials_2d(sizes: list[int], trials: int, seed: int):
    """Column-pass searches over the n^2 domain with one marked entry.

    Doubling one column of a constant matrix gives a unique entry of
    squared value 4n; the window (3n, 5n) isolates it.
    """
    records = []
    cfg = SearchConfig()
    for n in sizes:
        d = build_dct_matrix(n)
        m = np.ones((n, n))
        m[:, 0] = 2.0
        cache = g_entry_cache(d, m)
        window = ThresholdWindow(3.0 * n, 5.0 * n)
        for trial in range(trials):
            rng = SeededRng(derive_seed(seed, n, trial))
            out = subroutine2(m, d, window, cfg, rng, cache=cache)
            records.append((n, 1, out.total_iterations + out.rounds, out.total_iterations))
    return records


def cmd_bench(args: argparse.Namespace, tracker: OutputTracker) -> int:
    sizes = args.sizes
    if args.two_d:
        records = bench_trials_2d(sizes, args.trials, args.seed)
        claimed = 1.0
        label = "matrix size n (domain n^2)"
    else:
        records = bench_trials_1d(sizes, args.trials, args.seed)
        claimed = 0.5
        label = "domain size M"

    rep = scaling_report([(s, t, q) for s, t, q, _ in records], claimed_exponent=claimed)
    raw_by_size: dict[int, list[int]] = {}
    for s, _, _, raw in records:
        raw_by_size.setdefault(s, []).append(raw)
    lines = [
        "record=scaling-bench",
        f"dimension={'2d' if args.two_d else '1d'}",
        f"seed={args.seed}",
        f"trials={args.trials}",
        "sizes=" + ",".join(str(s) for s in rep.sizes),
    ]
    for size, mean in rep.rows():
        raw_mean = float(np.mean(raw_by_size[size]))
        lines.append(
            f"size={size} t=1 mean_queries={fmt(mean)} mean_iterations={fmt(raw_mean)}"
        )
    lines += [
        f"exponent={fmt(rep.exponent)}",
        f"ci_low={fmt(rep.ci_low)}",
        f"ci_high={fmt(rep.ci_high)}",
        f"prefactor={fmt(rep.prefactor)}",
        f"bound_ratio={fmt(rep.bound_ratio)}",
        f"claimed_exponent={fmt(rep.claimed_exponent)}",
        f"tolerance={fmt(rep.tolerance)}",
        f"passed={str(rep.passed).lower()}",
    ]
    _emit(lines, args.out, tracker)
    if args.out and not args.no_figure:
        from .report import save_scaling_figure

        fig = _figure_path(args.out)
        save_scaling_figure(fig, rep, label)
        tracker.note(fig)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _sizes_arg(text: str) -> list[int]:
    try:
        sizes = [int(tok) for tok in text.split(",") if tok]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad size list {text!r}") from None
    return sizes


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qdct",
        description=__doc__.splitlines()[0],
        epilog=_EXIT_CODE_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dct", help="forward/inverse transform of a text vector or matrix",
                       epilog=_EXIT_CODE_HELP,
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("input", help="whitespace-separated decimal input file")
    p.add_argument("--two-d", action="store_true", help="treat input as a square matrix")
    p.add_argument("--inverse", action="store_true", help="apply the inverse transform")
    p.add_argument("--out", help="output file (default stdout)")
    p.add_argument("--manifest", help="write a JSON run manifest here")
    p.set_defaults(func=cmd_dct)

    p = sub.add_parser("demo-example",
                       help="run the built-in 8-point selection walkthrough",
                       epilog=_EXIT_CODE_HELP,
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--seed", type=int, default=DEFAULT_DEMO_SEED)
    p.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON)
    p.add_argument("--verify", action="store_true",
                   help="assert the walkthrough checkpoints; exit 4 on mismatch")
    p.add_argument("--out", help="write the trace record here (default stdout)")
    p.add_argument("--no-figure", action="store_true")
    p.add_argument("--manifest", help="write a JSON run manifest here")
    p.set_defaults(func=cmd_demo)

    p = sub.add_parser("compress", help="compress a PGM image",
                       epilog=_EXIT_CODE_HELP,
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("input", help="PGM (P5 or P2) image")
    p.add_argument("--out", required=True, help="container output path")
    p.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON)
    p.add_argument("--mode", default="quantum-sim", help="quantum-sim or topk:K")
    p.add_argument("--block", type=int, default=8, choices=(8, 16))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1, help="worker threads over blocks")
    p.add_argument("--stats-out", help="write the stats record here (default stdout)")
    p.add_argument("--no-figure", action="store_true")
    p.add_argument("--manifest", help="write a JSON run manifest here")
    p.set_defaults(func=cmd_compress)

    p = sub.add_parser("decompress", help="reconstruct a PGM image from a container",
                       epilog=_EXIT_CODE_HELP,
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("input", help="container file")
    p.add_argument("--out", required=True, help="PGM output path")
    p.add_argument("--original", help="reference PGM for a PSNR line")
    p.add_argument("--stats-out", help="write the stats record here (default stdout)")
    p.add_argument("--manifest", help="write a JSON run manifest here")
    p.set_defaults(func=cmd_decompress)

    p = sub.add_parser("bench-scaling", help="seeded Monte-Carlo iteration-count scaling",
                       epilog=_EXIT_CODE_HELP,
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--sizes", type=_sizes_arg, required=True,
                   help="comma-separated sizes, at least 3")
    p.add_argument("--trials", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--two-d", action="store_true",
                   help="sizes are matrix sizes n; search domain n^2")
    p.add_argument("--out", help="write the report record here (default stdout)")
    p.add_argument("--no-figure", action="store_true")
    p.add_argument("--manifest", help="write a JSON run manifest here")
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.command == "bench-scaling":
        if len(set(args.sizes)) < 3:
            parser.error("--sizes needs at least 3 distinct sizes")
        if any(s < 2 for s in args.sizes):
            parser.error("--sizes entries must be at least 2")
        if args.trials < 1:
            parser.error("--trials must be positive")
    if getattr(args, "epsilon", 1.0) <= 0:
        parser.error("--epsilon must be positive")
    if args.command == "compress":
        if args.jobs < 1:
            parser.error("--jobs must be positive")
        try:
            parse_mode(args.mode)
        except ValueError as exc:
            parser.error(str(exc))

    tracker = OutputTracker()
    started = time.monotonic()
    try:
        code = args.func(args, tracker)
    except UsageFailure as exc:
        print(f"qdct: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseFailure, PgmError, ContainerError, ValueError) as exc:
        print(f"qdct: parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except OSError as exc:
        print(f"qdct: i/o error: {exc}", file=sys.stderr)
        return EXIT_IO

    if getattr(args, "manifest", None):
        _write_manifest(
            args.manifest,
            args.command,
            argv,
            getattr(args, "seed", None),
            time.monotonic() - started,
            tracker,
        )
    return code


if __name__ == "__main__":
    raise SystemExit(main())
