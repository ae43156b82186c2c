"""Scalar quantizers: uniform embedded codebooks and the two-description MDSQ.

The uniform quantizer is midrise over [-S, S) with clamping at the extreme
cells, so index streams at rate b are exactly the top bits of the rate-B
stream (embedded codebook).  The MDSQ couples a central quantizer with an
index-assignment matrix whose occupied cells form a diagonal band; the band
half-width ("spread") controls how much redundancy the two side indices share.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidConfigError, InvalidPairError, UnusedIndexError

__all__ = [
    "QuantizerSpec",
    "MdsqCodebook",
    "make_uniform_quantizer",
    "quantize",
    "dequantize",
    "demote_index",
    "mdsq_design",
    "mdsq_encode",
    "mdsq_decode_side",
    "mdsq_decode_central",
    "mdsq_mse",
    "codebook_to_bytes",
    "codebook_from_bytes",
]

MAX_UNIFORM_BITS = 16
MAX_SIDE_BITS = 8


@dataclass(frozen=True)
class QuantizerSpec:
    """Midrise uniform quantizer over [-scale, scale) at `bits` per sample."""

    bits: int
    scale: float
    delta: float

    def __post_init__(self) -> None:
        if not (1 <= self.bits <= MAX_UNIFORM_BITS):
            raise InvalidConfigError(f"bits must be in [1, {MAX_UNIFORM_BITS}], got {self.bits}")
        if not (self.scale > 0):
            raise InvalidConfigError(f"scale must be positive, got {self.scale}")

    @property
    def levels(self) -> int:
        return 1 << self.bits


def make_uniform_quantizer(scale: float, bits: int) -> QuantizerSpec:
    """Build the spec with step size 2*scale / 2**bits."""
    if not (scale > 0):
        raise InvalidConfigError(f"scale must be positive, got {scale}")
    if not (1 <= bits <= MAX_UNIFORM_BITS):
        raise InvalidConfigError(f"bits must be in [1, {MAX_UNIFORM_BITS}], got {bits}")
    return QuantizerSpec(bits=bits, scale=float(scale), delta=2.0 * float(scale) / (1 << bits))


def quantize(spec: QuantizerSpec, v):
    """Cell index of v: clamp(floor((v + S) / delta), 0, 2**bits - 1).

    Accepts scalars or arrays; out-of-range values map to the extreme cells.
    """
    idx = np.floor((np.asarray(v, dtype=float) + spec.scale) / spec.delta)
    idx = np.clip(idx, 0, spec.levels - 1).astype(np.int64)
    return int(idx) if np.isscalar(v) or np.ndim(v) == 0 else idx


def dequantize(spec: QuantizerSpec, idx):
    """Midpoint reconstruction -S + (idx + 0.5) * delta."""
    arr = np.asarray(idx, dtype=np.int64)
    if np.any(arr < 0) or np.any(arr >= spec.levels):
        raise InvalidConfigError(f"index out of range [0, {spec.levels}) for {spec.bits}-bit quantizer")
    out = -spec.scale + (arr + 0.5) * spec.delta
    return float(out) if np.ndim(idx) == 0 else out


def demote_index(idx, fine_bits: int, coarse_bits: int):
    """Drop the (fine_bits - coarse_bits) least significant bits of an index.

    Because the uniform codebook is embedded, the result equals quantizing the
    original value directly at coarse_bits.
    """
    if coarse_bits > fine_bits:
        raise InvalidConfigError(f"coarse rate {coarse_bits} exceeds fine rate {fine_bits}")
    arr = np.asarray(idx, dtype=np.int64)
    if np.any(arr < 0) or np.any(arr >= (1 << fine_bits)):
        raise InvalidConfigError(f"index out of range for {fine_bits}-bit quantizer")
    out = arr >> (fine_bits - coarse_bits)
    return int(out) if np.ndim(idx) == 0 else out


def _band_cells(side_levels: int, spread: int) -> list[tuple[int, int]]:
    """Occupied cells of the index matrix, ordered along the real line.

    Cells within |i - j| <= spread, swept anti-diagonal by anti-diagonal
    (increasing i + j, ties by row) so that consecutive central indices sit in
    neighbouring rows/columns and each side index covers a contiguous run of
    central cells.
    """
    cells = [
        (i, j)
        for i in range(side_levels)
        for j in range(max(0, i - spread), min(side_levels, i + spread + 1))
    ]
    cells.sort(key=lambda c: (c[0] + c[1], c[0]))
    return cells


@dataclass(frozen=True, eq=False)
class MdsqCodebook:
    """Central codebook plus the index-assignment band of a two-channel MDSQ."""

    side_bits: int
    spread: int
    scale: float
    ia_forward: tuple[tuple[int, int], ...]
    central_reproductions: np.ndarray
    side_reproductions_1: np.ndarray
    side_reproductions_2: np.ndarray
    ia_inverse: dict[tuple[int, int], int] = field(repr=False, default_factory=dict)

    def __post_init__(self) -> None:
        self.central_reproductions.setflags(write=False)
        self.side_reproductions_1.setflags(write=False)
        self.side_reproductions_2.setflags(write=False)
        if not self.ia_inverse:
            object.__setattr__(
                self, "ia_inverse", {cell: c for c, cell in enumerate(self.ia_forward)}
            )

    @property
    def central_levels(self) -> int:
        return len(self.ia_forward)

    @property
    def side_levels(self) -> int:
        return 1 << self.side_bits


def mdsq_design(
    side_bits: int,
    spread: int,
    scale: float,
    lloyd_iters: int = 20,
    samples: np.ndarray | None = None,
) -> MdsqCodebook:
    """Design the codebook: nested band, uniform seeding, Lloyd refinement.

    With lloyd_iters == 0 the central reproductions are the midpoints of a
    uniform partition of [-scale, scale] and each side reproduction is the
    mean of the central reproductions in its row/column.  With refinement
    enabled, `samples` drives fixed-count generalized-Lloyd rounds: repartition
    by nearest central reproduction, then recompute centroids.
    """
    if not (1 <= side_bits <= MAX_SIDE_BITS):
        raise InvalidConfigError(f"side_bits must be in [1, {MAX_SIDE_BITS}], got {side_bits}")
    levels = 1 << side_bits
    if not (0 <= spread < levels):
        raise InvalidConfigError(
            f"spread {spread} too large for {levels} side levels (band leaves the matrix)"
        )
    if not (scale > 0):
        raise InvalidConfigError(f"scale must be positive, got {scale}")
    if lloyd_iters > 0 and (samples is None or len(samples) == 0):
        raise InvalidConfigError("Lloyd refinement needs a nonempty sample set")

    cells = _band_cells(levels, spread)
    n_central = len(cells)
    step = 2.0 * scale / n_central
    central = -scale + (np.arange(n_central) + 0.5) * step

    rows = [[] for _ in range(levels)]
    cols = [[] for _ in range(levels)]
    for c, (i, j) in enumerate(cells):
        rows[i].append(c)
        cols[j].append(c)

    assign = None
    if lloyd_iters > 0:
        samples = np.asarray(samples, dtype=float).ravel()
        for _ in range(lloyd_iters):
            assign = _nearest_cell(central, samples)
            sums = np.bincount(assign, weights=samples, minlength=n_central)
            counts = np.bincount(assign, minlength=n_central)
            occupied = counts > 0
            central = central.copy()
            central[occupied] = sums[occupied] / counts[occupied]
        assign = _nearest_cell(central, samples)

    side1 = np.empty(levels)
    side2 = np.empty(levels)
    for s, (groups, out) in enumerate(((rows, side1), (cols, side2))):
        for i in range(levels):
            members = groups[i]
            if assign is not None:
                mask = np.isin(assign, members)
                if mask.any():
                    out[i] = samples[mask].mean()
                    continue
            out[i] = central[members].mean()

    return MdsqCodebook(
        side_bits=side_bits,
        spread=spread,
        scale=float(scale),
        ia_forward=tuple(cells),
        central_reproductions=central,
        side_reproductions_1=side1,
        side_reproductions_2=side2,
    )


def _nearest_cell(central: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Indices of the nearest central reproduction; ties go to the lower index."""
    bounds = 0.5 * (central[1:] + central[:-1])
    return np.searchsorted(bounds, v, side="left")


def mdsq_encode(cb: MdsqCodebook, v):
    """Map value(s) to the (i, j) side-index pair of the nearest central cell."""
    c = _nearest_cell(cb.central_reproductions, np.asarray(v, dtype=float))
    pairs = np.asarray(cb.ia_forward, dtype=np.int64)[c]
    if np.ndim(v) == 0:
        return int(pairs[0]), int(pairs[1])
    return pairs[:, 0], pairs[:, 1]


def mdsq_decode_side(cb: MdsqCodebook, idx: int, which: int) -> float:
    """Side reconstruction from one received index (which in {1, 2})."""
    if which not in (1, 2):
        raise InvalidConfigError(f"which must be 1 or 2, got {which}")
    if not (0 <= idx < cb.side_levels):
        raise UnusedIndexError(f"side index {idx} never used by the index assignment")
    table = cb.side_reproductions_1 if which == 1 else cb.side_reproductions_2
    return float(table[idx])


def mdsq_decode_central(cb: MdsqCodebook, i: int, j: int) -> float:
    """Central reconstruction from both indices; the pair must be occupied."""
    c = cb.ia_inverse.get((int(i), int(j)))
    if c is None:
        raise InvalidPairError(f"pair ({i}, {j}) is not an occupied cell")
    return float(cb.central_reproductions[c])


CODEBOOK_MAGIC = b"MDCB"
CODEBOOK_VERSION = 1


def codebook_to_bytes(cb: MdsqCodebook) -> bytes:
    """Versioned binary blob for embedding a codebook in experiment configs.

    Layout (big-endian): magic, version u8, side_bits u8, spread u16,
    central_levels u32, scale f64, then the central/side reproduction tables
    as f64 arrays.  The index assignment is canonical given (side_bits,
    spread) and is rebuilt on load.
    """
    head = struct.pack(
        ">4sBBHId", CODEBOOK_MAGIC, CODEBOOK_VERSION, cb.side_bits, cb.spread,
        cb.central_levels, cb.scale,
    )
    body = b"".join(
        np.asarray(a, dtype=">f8").tobytes()
        for a in (cb.central_reproductions, cb.side_reproductions_1, cb.side_reproductions_2)
    )
    return head + body


def codebook_from_bytes(blob: bytes) -> MdsqCodebook:
    """Inverse of ``codebook_to_bytes``; validates magic, version, and sizes."""
    head = struct.Struct(">4sBBHId")
    if len(blob) < head.size or blob[:4] != CODEBOOK_MAGIC:
        raise InvalidConfigError("not a codebook blob")
    magic, version, side_bits, spread, n_central, scale = head.unpack_from(blob)
    if version != CODEBOOK_VERSION:
        raise InvalidConfigError(f"unsupported codebook version {version}")
    if not (1 <= side_bits <= MAX_SIDE_BITS) or not (0 <= spread < (1 << side_bits)):
        raise InvalidConfigError("codebook geometry out of range")
    cells = _band_cells(1 << side_bits, spread)
    if len(cells) != n_central:
        raise InvalidConfigError("central level count does not match the band")
    levels = 1 << side_bits
    expected = head.size + 8 * (n_central + 2 * levels)
    if len(blob) != expected:
        raise InvalidConfigError("codebook blob has the wrong length")
    data = np.frombuffer(blob, dtype=">f8", offset=head.size).astype(float)
    return MdsqCodebook(
        side_bits=side_bits,
        spread=spread,
        scale=float(scale),
        ia_forward=tuple(cells),
        central_reproductions=data[:n_central].copy(),
        side_reproductions_1=data[n_central : n_central + levels].copy(),
        side_reproductions_2=data[n_central + levels :].copy(),
    )


def mdsq_mse(cb: MdsqCodebook, samples: np.ndarray) -> tuple[float, float, float]:
    """Empirical (central, side-1, side-2) mean squared errors over samples."""
    samples = np.asarray(samples, dtype=float).ravel()
    if samples.size == 0:
        raise InvalidConfigError("empty sample set")
    i_idx, j_idx = mdsq_encode(cb, samples)
    c = _nearest_cell(cb.central_reproductions, samples)
    central = float(np.mean((samples - cb.central_reproductions[c]) ** 2))
    side1 = float(np.mean((samples - cb.side_reproductions_1[i_idx]) ** 2))
    side2 = float(np.mean((samples - cb.side_reproductions_2[j_idx]) ** 2))
    return central, side1, side2
