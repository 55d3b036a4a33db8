"""Gray-image pipeline: PGM I/O, block tiling, per-block coefficient
selection, reconstruction, and quality metrics.

Images are 2-D uint8 numpy arrays (rows by columns).  The compressed
container is a line-oriented text format holding per-block sparse
coefficients; see :func:`serialize_container`.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .costs import OpCounters
from .driver import qdct2
from .search import SearchConfig, SeededRng, derive_seed
from .transform import build_dct_matrix, dct2d, energy, idct2d

__all__ = [
    "PgmError",
    "PgmFormatError",
    "PgmTruncatedError",
    "PgmRangeError",
    "ContainerError",
    "read_pgm",
    "write_pgm",
    "BlockGrid",
    "split_blocks",
    "merge_blocks",
    "BlockResult",
    "CompressedImage",
    "parse_mode",
    "compress",
    "decompress",
    "serialize_container",
    "parse_container",
    "psnr",
]


class PgmError(ValueError):
    """Base class for PGM problems."""


class PgmFormatError(PgmError):
    """Unsupported or malformed magic / header structure."""


class PgmTruncatedError(PgmError):
    """Payload shorter than the header promises."""


class PgmRangeError(PgmError):
    """Sample values outside the supported 8-bit range."""


class ContainerError(ValueError):
    """Malformed compressed-image container."""


def _pgm_tokens(data: bytes):
    """Yield whitespace-separated header tokens, skipping # comments."""
    i = 0
    n = len(data)
    while i < n:
        c = data[i]
        if c in b" \t\r\n":
            i += 1
            continue
        if c == ord("#"):
            while i < n and data[i] not in b"\r\n":
                i += 1
            continue
        j = i
        while j < n and data[j] not in b" \t\r\n":
            j += 1
        yield data[i:j], j
        i = j


def read_pgm(data: bytes) -> np.ndarray:
    """Parse a binary (P5) or ASCII (P2) PGM with maxval up to 255."""
    tokens = _pgm_tokens(data)

    def next_token(what: str) -> tuple[bytes, int]:
        try:
            return next(tokens)
        except StopIteration:
            raise PgmTruncatedError(f"input ended before {what}") from None

    magic, _ = next_token("magic")
    if magic not in (b"P5", b"P2"):
        raise PgmFormatError(f"unsupported magic {magic!r}; only P5 and P2 are handled")

    fields = []
    end = 0
    for name in ("width", "height", "maxval"):
        tok, end = next_token(name)
        try:
            fields.append(int(tok))
        except ValueError:
            raise PgmFormatError(f"non-numeric {name} field {tok!r}") from None
    width, height, maxval = fields
    if width < 1 or height < 1:
        raise PgmFormatError(f"bad dimensions {width}x{height}")
    if not 0 < maxval <= 255:
        raise PgmRangeError(f"maxval {maxval} outside (0, 255]")

    count = width * height
    if magic == b"P5":
        # Exactly one whitespace byte separates maxval from the payload.
        start = end + 1
        payload = data[start : start + count]
        if len(payload) < count:
            raise PgmTruncatedError(f"expected {count} pixel bytes, got {len(payload)}")
        pixels = np.frombuffer(payload, dtype=np.uint8).astype(np.uint8)
    else:
        values = []
        for _ in range(count):
            tok, _ = next_token("pixel value")
            try:
                values.append(int(tok))
            except ValueError:
                raise PgmFormatError(f"non-numeric pixel value {tok!r}") from None
        pixels = np.asarray(values, dtype=np.int64)
        if pixels.min(initial=0) < 0:
            raise PgmRangeError("negative pixel value")
    if pixels.max(initial=0) > maxval:
        raise PgmRangeError(f"pixel value exceeds declared maxval {maxval}")
    return pixels.reshape(height, width).astype(np.uint8)


def write_pgm(img: np.ndarray) -> bytes:
    """Encode as binary P5 with maxval 255; byte-exact round trip."""
    img = np.asarray(img)
    if img.ndim != 2 or img.size < 1:
        raise ValueError(f"expected a nonempty 2-D image, got shape {img.shape}")
    if img.dtype != np.uint8 and (img.min() < 0 or img.max() > 255):
        raise PgmRangeError("pixel values outside 0..255")
    height, width = img.shape
    header = f"P5\n{width} {height}\n255\n".encode("ascii")
    return header + img.astype(np.uint8).tobytes()


@dataclass
class BlockGrid:
    """Edge-padded tiling of an image into square blocks."""

    block_size: int
    image_shape: tuple[int, int]
    padded_shape: tuple[int, int]
    blocks: list[tuple[int, int, np.ndarray]]


def split_blocks(img: np.ndarray, block_size: int = 8) -> BlockGrid:
    """Tile the image into block_size squares, replicating the last row
    and column out to a full multiple."""
    if block_size < 1:
        raise ValueError(f"block size must be positive, got {block_size}")
    img = np.asarray(img)
    height, width = img.shape
    pad_h = (-height) % block_size
    pad_w = (-width) % block_size
    padded = np.pad(img.astype(np.float64), ((0, pad_h), (0, pad_w)), mode="edge")
    blocks = []
    for r in range(0, padded.shape[0], block_size):
        for c in range(0, padded.shape[1], block_size):
            blocks.append((r // block_size, c // block_size,
                           padded[r : r + block_size, c : c + block_size].copy()))
    return BlockGrid(
        block_size=block_size,
        image_shape=(height, width),
        padded_shape=padded.shape,
        blocks=blocks,
    )


def merge_blocks(grid: BlockGrid) -> np.ndarray:
    """Reassemble the padded plane and crop back to the original size."""
    out = np.zeros(grid.padded_shape)
    b = grid.block_size
    for br, bc, block in grid.blocks:
        out[br * b : (br + 1) * b, bc * b : (bc + 1) * b] = block
    h, w = grid.image_shape
    return out[:h, :w]


@dataclass
class BlockResult:
    """Sparse coefficients of one block plus selection statistics."""

    row: int
    col: int
    entries: list[tuple[tuple[int, int], float]]
    fell_back: bool = False
    retained_ratio: float = 1.0
    oracle_calls: int = 0


@dataclass
class CompressedImage:
    width: int
    height: int
    block_size: int
    epsilon: float
    mode: str
    seed: int
    blocks: list[BlockResult] = field(default_factory=list)


def parse_mode(mode: str) -> tuple[str, Optional[int]]:
    """Split a mode string into its kind and optional top-k parameter."""
    if mode == "quantum-sim":
        return "quantum-sim", None
    if mode.startswith("topk:"):
        try:
            k = int(mode.split(":", 1)[1])
        except ValueError:
            raise ValueError(f"bad top-k count in mode {mode!r}") from None
        if k < 1:
            raise ValueError(f"top-k count must be positive, got {k}")
        return "topk", k
    raise ValueError(f"unknown mode {mode!r}; expected quantum-sim or topk:K")


def _topk_entries(block: np.ndarray, d: np.ndarray, k: int) -> list[tuple[tuple[int, int], float]]:
    c = dct2d(block, d)
    n = c.shape[0]
    ranked = sorted(
        ((p, q) for p in range(n) for q in range(n)),
        key=lambda pq: (-abs(c[pq]), pq[0], pq[1]),
    )
    return [((p, q), float(c[p, q])) for p, q in ranked[: min(k, n * n)]]


def _compress_block(
    block: np.ndarray,
    br: int,
    bc: int,
    d: np.ndarray,
    epsilon: float,
    kind: str,
    k: Optional[int],
    cfg: SearchConfig,
    master_seed: int,
    counters: Optional[OpCounters],
) -> BlockResult:
    total = energy(block)
    if kind == "topk":
        entries = _topk_entries(block, d, k)
        kept = sum(v * v for _, v in entries)
        ratio = kept / total if total > 0 else 1.0
        return BlockResult(br, bc, entries, fell_back=False, retained_ratio=ratio)
    rng = SeededRng(derive_seed(master_seed, br, bc))
    report = qdct2(block, epsilon, cfg=cfg, rng=rng, d=d, counters=counters)
    kept = report.accepted.energy()
    ratio = kept / total if total > 0 else 1.0
    return BlockResult(
        br,
        bc,
        list(report.accepted.entries),
        fell_back=report.fell_back,
        retained_ratio=ratio,
        oracle_calls=report.oracle_calls,
    )


def compress(
    img: np.ndarray,
    epsilon: float,
    mode: str,
    cfg: Optional[SearchConfig] = None,
    master_seed: int = 0,
    block_size: int = 8,
    jobs: int = 1,
    counters: Optional[OpCounters] = None,
) -> CompressedImage:
    """Per-block coefficient selection over the whole image.

    Block random streams are derived from (master_seed, block_row,
    block_col), so the result is identical whether blocks are processed
    sequentially or in parallel (``jobs`` worker threads).
    """
    if epsilon <= 0:
        raise ValueError("threshold must be positive")
    kind, k = parse_mode(mode)
    if cfg is None:
        cfg = SearchConfig()
    grid = split_blocks(img, block_size)
    d = build_dct_matrix(block_size)

    def work(item):
        br, bc, block = item
        return _compress_block(block, br, bc, d, epsilon, kind, k, cfg, master_seed, counters)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(work, grid.blocks))
    else:
        results = [work(item) for item in grid.blocks]
    results.sort(key=lambda b: (b.row, b.col))

    height, width = grid.image_shape
    return CompressedImage(
        width=width,
        height=height,
        block_size=block_size,
        epsilon=epsilon,
        mode=mode,
        seed=master_seed,
        blocks=results,
    )


def decompress(c: CompressedImage) -> np.ndarray:
    """Inverse-transform every block and reassemble the image.

    Pixels are rounded to the nearest integer (ties away from zero) and
    clamped to 0..255; edge padding is cropped off.
    """
    b = c.block_size
    d = build_dct_matrix(b)
    pad_h = math.ceil(c.height / b) * b
    pad_w = math.ceil(c.width / b) * b
    plane = np.zeros((pad_h, pad_w))
    for blk in c.blocks:
        coeffs = np.zeros((b, b))
        for (p, q), v in blk.entries:
            if not (0 <= p < b and 0 <= q < b):
                raise ContainerError(f"coefficient index ({p}, {q}) outside block")
            coeffs[p, q] = v
        plane[blk.row * b : (blk.row + 1) * b, blk.col * b : (blk.col + 1) * b] = idct2d(coeffs, d)
    cropped = plane[: c.height, : c.width]
    return np.clip(np.floor(cropped + 0.5), 0, 255).astype(np.uint8)


def serialize_container(c: CompressedImage) -> bytes:
    """Text container: one header line
    ``QDCT1 <width> <height> <block> <epsilon> <mode> <seed>`` then per
    block ``B <row> <col> <count>`` followed by ``<p> <q> <value>``
    triples, one per line, values with 17 significant digits."""
    lines = [f"QDCT1 {c.width} {c.height} {c.block_size} {c.epsilon:.17g} {c.mode} {c.seed}"]
    for blk in c.blocks:
        lines.append(f"B {blk.row} {blk.col} {len(blk.entries)}")
        for (p, q), v in blk.entries:
            lines.append(f"{p} {q} {v:.17g}")
    return ("\n".join(lines) + "\n").encode("ascii")


def parse_container(data: bytes) -> CompressedImage:
    """Inverse of :func:`serialize_container`."""
    try:
        text = data.decode("ascii")
    except UnicodeDecodeError:
        raise ContainerError("container is not ASCII text") from None
    lines = [ln for ln in text.split("\n") if ln.strip()]
    if not lines:
        raise ContainerError("empty container")
    head = lines[0].split()
    if len(head) != 7 or head[0] != "QDCT1":
        raise ContainerError(f"bad container header {lines[0]!r}")
    try:
        width, height, block_size = int(head[1]), int(head[2]), int(head[3])
        epsilon = float(head[4])
        mode = head[5]
        seed = int(head[6])
    except ValueError:
        raise ContainerError(f"bad container header {lines[0]!r}") from None
    if width < 1 or height < 1 or block_size < 1:
        raise ContainerError(f"bad container dimensions {width}x{height} block {block_size}")

    blocks: list[BlockResult] = []
    i = 1
    while i < len(lines):
        parts = lines[i].split()
        if parts[0] != "B" or len(parts) != 4:
            raise ContainerError(f"expected block line, got {lines[i]!r}")
        try:
            row, col, count = int(parts[1]), int(parts[2]), int(parts[3])
        except ValueError:
            raise ContainerError(f"bad block line {lines[i]!r}") from None
        i += 1
        entries = []
        for _ in range(count):
            if i >= len(lines):
                raise ContainerError("container ends inside a block")
            triple = lines[i].split()
            if len(triple) != 3:
                raise ContainerError(f"bad coefficient line {lines[i]!r}")
            try:
                entries.append(((int(triple[0]), int(triple[1])), float(triple[2])))
            except ValueError:
                raise ContainerError(f"bad coefficient line {lines[i]!r}") from None
            i += 1
        blocks.append(BlockResult(row, col, entries))
    return CompressedImage(width, height, block_size, epsilon, mode, seed, blocks)


def psnr(a: np.ndarray, b: np.ndarray) -> float:
    """Peak signal-to-noise ratio in dB; +inf for identical images."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"image shapes differ: {a.shape} vs {b.shape}")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return float("inf")
    return 10.0 * math.log10(255.0**2 / mse)
