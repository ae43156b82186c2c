"""Two-description codecs and their byte-exact wire format.

Three schemes turn a measurement vector into a pair of self-describing
packets:

* graded quantization (GQ): every measurement appears in both descriptions,
  half at a fine rate B and half at a coarse rate b, mirrored;
* split: each description carries half the measurements at full rate R
  (the b = 0 corner of GQ);
* MDSQ: each measurement is encoded once by a multiple-description scalar
  quantizer and the two side indices are routed to the two descriptions.

Payload indices are bit-packed MSB-first with no inter-field padding and the
stream is zero-padded to a byte boundary.  Headers are big-endian.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .errors import (
    BadMagicError,
    DimensionMismatchError,
    InvalidConfigError,
    MalformedHeaderError,
    TruncatedPayloadError,
    VersionMismatchError,
)
from .core import Measurements
from .quantizers import MdsqCodebook, make_uniform_quantizer, demote_index, dequantize, mdsq_encode, quantize

__all__ = [
    "Scheme",
    "Description",
    "DecoderInput",
    "DecoderGroup",
    "gq_encode",
    "split_encode",
    "mdsq_encode_vec",
    "serialize",
    "parse",
    "gq_central_merge",
    "gq_side_extract",
    "expected_payload_bits",
]

MAGIC = b"CSMD"
WIRE_VERSION = 1
_HEADER = struct.Struct(">4sBBBBIIBBHQfI")  # 36 bytes


class Scheme(IntEnum):
    GQ = 0
    SPLIT = 1
    MDSQ = 2


@dataclass(frozen=True)
class Description:
    """One packetized half of a description pair: header fields + payload."""

    scheme: Scheme
    desc_id: int
    n: int
    m: int
    fine_bits: int
    coarse_bits: int
    matrix_seed: int
    scale: float
    payload: bytes
    payload_bits: int

    def __post_init__(self) -> None:
        if self.desc_id not in (1, 2):
            raise InvalidConfigError(f"desc_id must be 1 or 2, got {self.desc_id}")
        if not (0 <= self.coarse_bits <= self.fine_bits):
            raise InvalidConfigError("description rates must satisfy B >= b >= 0")
        expected = expected_payload_bits(self.scheme, self.desc_id, self.m, self.fine_bits, self.coarse_bits)
        if self.payload_bits != expected:
            raise InvalidConfigError(
                f"payload_bits {self.payload_bits} inconsistent with layout (expected {expected})"
            )
        if len(self.payload) != _padded_len(self.payload_bits):
            raise InvalidConfigError("payload byte length does not match payload_bits")


def expected_payload_bits(scheme: Scheme, desc_id: int, m: int, fine_bits: int, coarse_bits: int) -> int:
    """Exact payload bit-length implied by the header fields."""
    fine_half = (m + 1) // 2
    coarse_half = m // 2
    if scheme == Scheme.GQ:
        if desc_id == 1:
            return fine_half * fine_bits + coarse_half * coarse_bits
        return fine_half * coarse_bits + coarse_half * fine_bits
    if scheme == Scheme.SPLIT:
        return (fine_half if desc_id == 1 else coarse_half) * fine_bits
    if scheme == Scheme.MDSQ:
        return m * fine_bits
    raise InvalidConfigError(f"unknown scheme {scheme}")


def _padded_len(bits: int) -> int:
    return (bits + 7) // 8


def _pack_bits(fields: list[tuple[int, int]]) -> tuple[bytes, int]:
    """Pack (value, width) fields MSB-first; zero-pad to a byte boundary."""
    acc = 0
    nbits = 0
    for value, width in fields:
        acc = (acc << width) | (int(value) & ((1 << width) - 1))
        nbits += width
    pad = (-nbits) % 8
    return (acc << pad).to_bytes(_padded_len(nbits), "big"), nbits


def _unpack_bits(payload: bytes, widths: list[int]) -> list[int]:
    """Inverse of ``_pack_bits`` for a known sequence of field widths."""
    total = sum(widths)
    acc = int.from_bytes(payload, "big")
    avail = len(payload) * 8
    out = []
    cursor = 0
    for width in widths:
        shift = avail - cursor - width
        out.append((acc >> shift) & ((1 << width) - 1))
        cursor += width
    # trailing pad bits must be zero for the format to be bijective
    if avail > total and acc & ((1 << (avail - total)) - 1):
        raise MalformedHeaderError("nonzero padding bits in payload")
    return out


def _effective_scale(y: np.ndarray, override: float | None) -> float:
    # scale travels as float32 on the wire; quantize with the rounded value so
    # encoder and decoder agree bit-exactly
    s = float(np.max(np.abs(y))) if override is None else float(override)
    if s <= 0.0:
        s = 1.0
    return float(np.float32(s))


def gq_encode(
    y: Measurements, fine_bits: int, coarse_bits: int, scale_override: float | None = None
) -> tuple[Description, Description]:
    """Encode under graded quantization with rates (B, b), mirrored halves.

    coarse_bits == 0 is allowed and degenerates to the split layout (the
    coarse group carries no bits at all).
    """
    if y.m < 2:
        raise InvalidConfigError(f"graded quantization needs m >= 2, got m={y.m}")
    if not (1 <= fine_bits <= 16):
        raise InvalidConfigError(f"fine rate must be in [1, 16], got {fine_bits}")
    if not (0 <= coarse_bits <= fine_bits):
        raise InvalidConfigError(f"coarse rate {coarse_bits} exceeds fine rate {fine_bits}")
    scale = _effective_scale(y.y, scale_override)
    spec = make_uniform_quantizer(scale, fine_bits)
    fine_idx = quantize(spec, y.y)
    coarse_idx = demote_index(fine_idx, fine_bits, coarse_bits) if coarse_bits else None
    half = (y.m + 1) // 2

    def build(desc_id: int) -> Description:
        if desc_id == 1:
            fields = [(int(v), fine_bits) for v in fine_idx[:half]]
            if coarse_bits:
                fields += [(int(v), coarse_bits) for v in coarse_idx[half:]]
        else:
            fields = [(int(v), coarse_bits) for v in coarse_idx[:half]] if coarse_bits else []
            fields += [(int(v), fine_bits) for v in fine_idx[half:]]
        payload, nbits = _pack_bits(fields)
        return Description(
            scheme=Scheme.GQ,
            desc_id=desc_id,
            n=y.n,
            m=y.m,
            fine_bits=fine_bits,
            coarse_bits=coarse_bits,
            matrix_seed=y.matrix_seed,
            scale=scale,
            payload=payload,
            payload_bits=nbits,
        )

    return build(1), build(2)


def split_encode(y: Measurements, rate: int, scale_override: float | None = None) -> tuple[Description, Description]:
    """Quantize everything at `rate` bits and split the vector in half."""
    if y.m < 2:
        raise InvalidConfigError(f"splitting needs m >= 2, got m={y.m}")
    if not (1 <= rate <= 16):
        raise InvalidConfigError(f"rate must be in [1, 16], got {rate}")
    scale = _effective_scale(y.y, scale_override)
    spec = make_uniform_quantizer(scale, rate)
    idx = quantize(spec, y.y)
    half = (y.m + 1) // 2

    def build(desc_id: int) -> Description:
        part = idx[:half] if desc_id == 1 else idx[half:]
        payload, nbits = _pack_bits([(int(v), rate) for v in part])
        return Description(
            scheme=Scheme.SPLIT,
            desc_id=desc_id,
            n=y.n,
            m=y.m,
            fine_bits=rate,
            coarse_bits=0,
            matrix_seed=y.matrix_seed,
            scale=scale,
            payload=payload,
            payload_bits=nbits,
        )

    return build(1), build(2)


def mdsq_encode_vec(y: Measurements, cb: MdsqCodebook) -> tuple[Description, Description]:
    """Encode each measurement with the MDSQ; description d carries index d."""
    i_idx, j_idx = mdsq_encode(cb, y.y)
    scale = float(np.float32(cb.scale))

    def build(desc_id: int, idx: np.ndarray) -> Description:
        payload, nbits = _pack_bits([(int(v), cb.side_bits) for v in idx])
        return Description(
            scheme=Scheme.MDSQ,
            desc_id=desc_id,
            n=y.n,
            m=y.m,
            fine_bits=cb.side_bits,
            coarse_bits=0,
            matrix_seed=y.matrix_seed,
            scale=scale,
            payload=payload,
            payload_bits=nbits,
        )

    return build(1, np.atleast_1d(i_idx)), build(2, np.atleast_1d(j_idx))


def serialize(d: Description) -> bytes:
    """Byte-exact encoding: header (36 bytes, big-endian) then payload."""
    header = _HEADER.pack(
        MAGIC,
        WIRE_VERSION,
        int(d.scheme),
        d.desc_id,
        0,
        d.n,
        d.m,
        d.fine_bits,
        d.coarse_bits,
        0,
        d.matrix_seed,
        d.scale,
        d.payload_bits,
    )
    return header + d.payload


def parse(buf: bytes) -> Description:
    """Parse and validate a serialized description.

    Raises BadMagicError, VersionMismatchError, TruncatedPayloadError, or
    MalformedHeaderError; never returns a structurally inconsistent value.
    """
    if len(buf) < 4:
        raise TruncatedPayloadError(f"buffer of {len(buf)} bytes is shorter than the magic")
    if buf[:4] != MAGIC:
        raise BadMagicError(f"bad magic {buf[:4]!r}")
    if len(buf) < _HEADER.size:
        raise TruncatedPayloadError(f"buffer of {len(buf)} bytes is shorter than the header")
    (
        _magic,
        version,
        scheme_raw,
        desc_id,
        flags,
        n,
        m,
        fine_bits,
        coarse_bits,
        reserved,
        matrix_seed,
        scale,
        payload_bits,
    ) = _HEADER.unpack_from(buf)
    if version != WIRE_VERSION:
        raise VersionMismatchError(f"unsupported wire version {version}")
    if flags != 0 or reserved != 0:
        raise MalformedHeaderError("nonzero flags/reserved field")
    try:
        scheme = Scheme(scheme_raw)
    except ValueError:
        raise MalformedHeaderError(f"unknown scheme byte {scheme_raw}") from None
    if desc_id not in (1, 2):
        raise MalformedHeaderError(f"desc_id must be 1 or 2, got {desc_id}")
    if n < 1 or m < 1:
        raise MalformedHeaderError(f"sizes must be positive, got n={n}, m={m}")
    if scheme in (Scheme.SPLIT, Scheme.MDSQ):
        if coarse_bits != 0:
            raise MalformedHeaderError(f"{scheme.name} descriptions must have b = 0")
        if m < 2 and scheme == Scheme.SPLIT:
            raise MalformedHeaderError("split descriptions need m >= 2")
    else:
        if m < 2:
            raise MalformedHeaderError("graded descriptions need m >= 2")
    if not (1 <= fine_bits <= 16) or coarse_bits > fine_bits:
        raise MalformedHeaderError(f"invalid rates B={fine_bits}, b={coarse_bits}")
    if scheme == Scheme.MDSQ and fine_bits > 8:
        raise MalformedHeaderError(f"MDSQ side rate must be <= 8, got {fine_bits}")
    if not math.isfinite(scale) or scale <= 0.0:
        raise MalformedHeaderError(f"scale must be finite and positive, got {scale}")
    expected = expected_payload_bits(scheme, desc_id, m, fine_bits, coarse_bits)
    if payload_bits != expected:
        raise MalformedHeaderError(
            f"declared payload of {payload_bits} bits, layout implies {expected}"
        )
    payload = buf[_HEADER.size :]
    if len(payload) < _padded_len(payload_bits):
        raise TruncatedPayloadError(
            f"payload truncated: {len(payload)} bytes for {payload_bits} declared bits"
        )
    if len(payload) > _padded_len(payload_bits):
        raise MalformedHeaderError("trailing bytes after the padded payload")
    if payload_bits % 8:
        tail = payload[-1] & ((1 << (8 - payload_bits % 8)) - 1)
        if tail:
            raise MalformedHeaderError("nonzero padding bits in payload")
    return Description(
        scheme=scheme,
        desc_id=desc_id,
        n=n,
        m=m,
        fine_bits=fine_bits,
        coarse_bits=coarse_bits,
        matrix_seed=matrix_seed,
        scale=float(scale),
        payload=payload,
        payload_bits=payload_bits,
    )


@dataclass(frozen=True, eq=False)
class DecoderGroup:
    """Measurement rows sharing one quantization step: indices, values, step."""

    indices: np.ndarray
    values: np.ndarray
    delta: float

    def __post_init__(self) -> None:
        self.indices.setflags(write=False)
        self.values.setflags(write=False)


@dataclass(frozen=True, eq=False)
class DecoderInput:
    """Dequantized measurement groups ready for reconstruction."""

    groups: tuple[DecoderGroup, ...]
    matrix_seed: int
    n: int
    m: int


def _payload_widths(d: Description) -> list[int]:
    half = (d.m + 1) // 2
    if d.scheme == Scheme.GQ:
        if d.desc_id == 1:
            return [d.fine_bits] * half + [d.coarse_bits] * (d.m - half)
        return [d.coarse_bits] * half + [d.fine_bits] * (d.m - half)
    if d.scheme == Scheme.SPLIT:
        return [d.fine_bits] * (half if d.desc_id == 1 else d.m - half)
    return [d.fine_bits] * d.m


def unpack_payload(d: Description) -> np.ndarray:
    """Quantizer indices carried by a description, in payload order."""
    widths = [w for w in _payload_widths(d) if w > 0]
    return np.asarray(_unpack_bits(d.payload, widths), dtype=np.int64)


def _check_pair(d1: Description, d2: Description) -> tuple[Description, Description]:
    if {d1.desc_id, d2.desc_id} != {1, 2}:
        raise InvalidConfigError("need one description with id 1 and one with id 2")
    a, b = (d1, d2) if d1.desc_id == 1 else (d2, d1)
    for field_name in ("scheme", "n", "m", "fine_bits", "coarse_bits", "matrix_seed", "scale"):
        if getattr(a, field_name) != getattr(b, field_name):
            raise DimensionMismatchError(f"descriptions disagree on {field_name}")
    return a, b


def gq_central_merge(d1: Description, d2: Description) -> DecoderInput:
    """Joint decoder input: every measurement at the finer of its two copies."""
    a, b = _check_pair(d1, d2)
    if a.scheme == Scheme.MDSQ:
        raise InvalidConfigError("MDSQ pairs decode through the codebook, not a merge")
    half = (a.m + 1) // 2
    spec = make_uniform_quantizer(a.scale, a.fine_bits)
    idx_a = unpack_payload(a)
    idx_b = unpack_payload(b)
    if a.scheme == Scheme.GQ:
        # desc1 leads with its fine half; desc2 ends with its fine half
        fine = np.concatenate([idx_a[:half], idx_b[-(a.m - half) :]])
    else:
        fine = np.concatenate([idx_a, idx_b])
    values = dequantize(spec, fine)
    group = DecoderGroup(indices=np.arange(a.m, dtype=np.int64), values=values, delta=spec.delta)
    return DecoderInput(groups=(group,), matrix_seed=a.matrix_seed, n=a.n, m=a.m)


def gq_side_extract(d: Description) -> DecoderInput:
    """Per-description decoder input: one group per quantization step."""
    if d.scheme == Scheme.MDSQ:
        raise InvalidConfigError("MDSQ side decoding goes through the codebook")
    half = (d.m + 1) // 2
    idx = unpack_payload(d)
    first = np.arange(0, half, dtype=np.int64)
    second = np.arange(half, d.m, dtype=np.int64)
    groups: list[DecoderGroup] = []
    if d.scheme == Scheme.SPLIT:
        spec = make_uniform_quantizer(d.scale, d.fine_bits)
        rows = first if d.desc_id == 1 else second
        groups.append(DecoderGroup(indices=rows, values=dequantize(spec, idx), delta=spec.delta))
    else:
        layout = [(first, d.fine_bits), (second, d.coarse_bits)]
        if d.desc_id == 2:
            layout = [(first, d.coarse_bits), (second, d.fine_bits)]
        cursor = 0
        for rows, bits in layout:
            if bits == 0:
                continue
            spec = make_uniform_quantizer(d.scale, bits)
            part = idx[cursor : cursor + len(rows)]
            cursor += len(rows)
            groups.append(DecoderGroup(indices=rows, values=dequantize(spec, part), delta=spec.delta))
    return DecoderInput(groups=tuple(groups), matrix_seed=d.matrix_seed, n=d.n, m=d.m)
