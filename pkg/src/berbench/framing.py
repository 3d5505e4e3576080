"""Bit-exact 2048 kbit/s framing and HDB3 line coding.

A frame is 32 timeslots of 8 bits; timeslot 0 alternates between the
frame alignment signal (FAS, bits 2-8 = 0011011) and a not-FAS octet
whose bit 2 is 1.  Sixteen frames form a check multiframe: bit 1 of the
FAS octets carries a 4-bit cyclic check (polynomial x^4 + x + 1) over a
2048-bit half, and bit 1 of the first six not-FAS octets carries the
multiframe alignment signal 001011.  Within a standalone multiframe each
half carries the check of the other half (computed with the check bits
zeroed), so every emitted multiframe is self-consistent on its own.

Remaining not-FAS bits are fixed (bit 3 = 0, spares = 1) to keep golden
streams stable.

The line code is alternate-mark-inversion with high-density substitution:
every run of four zeros becomes 000V or B00V such that successive
violation pulses alternate polarity, so the wire never carries four
consecutive empty symbols and stays DC balanced.
"""
from __future__ import annotations

import numpy as np

FRAME_BITS = 256
FRAMES_PER_MULTIFRAME = 16
MULTIFRAME_BITS = FRAME_BITS * FRAMES_PER_MULTIFRAME
PAYLOAD_SLOTS = 31
HALF_BITS = MULTIFRAME_BITS // 2

#: FAS bits 2-8.
FAS_PATTERN = (0, 0, 1, 1, 0, 1, 1)
#: Bit-1 sequence of the first six not-FAS octets in a check multiframe.
MULTIFRAME_ALIGNMENT = (0, 0, 1, 0, 1, 1)

#: Idle fill for unequipped payload timeslots in fractional operation.
IDLE_OCTET = 0x55


class FrameAlignmentError(Exception):
    """Frame alignment signal not found (loss of frame)."""


class LineCodeViolationError(Exception):
    """Ternary stream does not match any valid substitution pattern."""

    def __init__(self, position: int, message: str | None = None):
        self.position = int(position)
        super().__init__(message or f"line code violation at symbol {position}")


def _ts0_octets(crc4: bool) -> np.ndarray:
    ts0 = np.zeros((FRAMES_PER_MULTIFRAME, 8), dtype=np.uint8)
    # Not-FAS octet: [bit1, 1, 0, 1, 1, 1, 1, 1]; bit 3 = 0, spares = 1.
    ts0[1::2] = (1, 1, 0, 1, 1, 1, 1, 1)
    ts0[0::2, 1:] = FAS_PATTERN
    if crc4:
        ts0[0::2, 0] = 0  # check-bit placeholders
        ts0[1:12:2, 0] = MULTIFRAME_ALIGNMENT
        ts0[13::2, 0] = 1  # remote check-result bits, fixed to 1
    else:
        ts0[0::2, 0] = 1  # international bit, fixed when no check multiframe
    return ts0


_TS0_CRC = _ts0_octets(crc4=True)
_TS0_PLAIN = _ts0_octets(crc4=False)

# Check bits live in bit 1 of the FAS octets: frames 0,2,4,6 for the first
# half, 8,10,12,14 for the second.
_CHECK_POS_FIRST = np.array([f * FRAME_BITS for f in (0, 2, 4, 6)])
_CHECK_POS_SECOND = np.array([f * FRAME_BITS for f in (8, 10, 12, 14)])


def _residue_table() -> np.ndarray:
    # x^e mod x^4+x+1 for e = 0..14 (x is a primitive root, order 15),
    # as 4-bit values with bit 3 = x^3.
    vals = []
    v = 1
    for _ in range(15):
        vals.append(v)
        v <<= 1
        if v & 0x10:
            v ^= 0x13  # x^4 == x + 1
    return np.array(vals, dtype=np.uint8)


def _crc_contrib() -> np.ndarray:
    # Bit i of a half (first transmitted = highest degree) contributes
    # x^(HALF_BITS-1-i+4) mod g to the remainder of message*x^4.
    table = _residue_table()
    exps = (HALF_BITS - 1 + 4 - np.arange(HALF_BITS)) % 15
    residues = table[exps]
    shifts = np.array([3, 2, 1, 0], dtype=np.uint8)  # C1 = x^3 coefficient
    return ((residues[:, None] >> shifts[None, :]) & 1).astype(np.uint8)


_CRC_CONTRIB = _crc_contrib()


def crc4_check_bits(half_bits: np.ndarray) -> np.ndarray:
    """Remainder of (half * x^4) mod x^4+x+1 as 4 bits, C1 first."""
    half = np.asarray(half_bits, dtype=np.uint8)
    if half.shape[-1] != HALF_BITS:
        raise ValueError(f"a check half is {HALF_BITS} bits, got {half.shape[-1]}")
    return (half.astype(np.uint32) @ _CRC_CONTRIB.astype(np.uint32) & 1).astype(np.uint8)


def crc4_remainder(half_bits: np.ndarray) -> int:
    """The 4-bit remainder as an integer (bit 3 = first check bit)."""
    c = crc4_check_bits(half_bits)
    return int(c[0]) << 3 | int(c[1]) << 2 | int(c[2]) << 1 | int(c[3])


def build_multiframes(payload: np.ndarray, crc4: bool = True) -> np.ndarray:
    """Emit check multiframes for payload octets shaped (n, 16, 31).

    Returns the transmitted bit stream (n * 4096 bits, MSB of each octet
    first).  Each multiframe's two halves carry each other's check bits,
    computed over the half with its check bits zeroed.
    """
    payload = np.asarray(payload, dtype=np.uint8)
    if payload.ndim != 3 or payload.shape[1:] != (FRAMES_PER_MULTIFRAME, PAYLOAD_SLOTS):
        raise ValueError(
            f"payload must be shaped (n, {FRAMES_PER_MULTIFRAME}, {PAYLOAD_SLOTS}), "
            f"got {payload.shape}"
        )
    n = payload.shape[0]
    bits = np.empty((n, FRAMES_PER_MULTIFRAME, 32, 8), dtype=np.uint8)
    bits[:, :, 0, :] = _TS0_CRC if crc4 else _TS0_PLAIN
    bits[:, :, 1:, :] = np.unpackbits(payload[..., None], axis=3)
    flat = bits.reshape(n, MULTIFRAME_BITS)
    if crc4:
        # Both checks run over C-zeroed halves, so compute before writing.
        c_first = crc4_check_bits(flat[:, HALF_BITS:])
        c_second = crc4_check_bits(flat[:, :HALF_BITS])
        flat[:, _CHECK_POS_FIRST] = c_first
        flat[:, _CHECK_POS_SECOND] = c_second
    return flat.reshape(-1)


def g704_build_multiframe(payload: np.ndarray, crc4: bool = True) -> np.ndarray:
    """One multiframe from payload octets shaped (16, 31)."""
    payload = np.asarray(payload, dtype=np.uint8)
    if payload.shape != (FRAMES_PER_MULTIFRAME, PAYLOAD_SLOTS):
        raise ValueError(
            f"payload must be shaped ({FRAMES_PER_MULTIFRAME}, {PAYLOAD_SLOTS}), "
            f"got {payload.shape}"
        )
    return build_multiframes(payload[None], crc4=crc4)


def g704_align(stream: np.ndarray) -> tuple[int, np.ndarray]:
    """Locate frame alignment and extract payload octets.

    Candidates come from the standard confirmation rule: alignment signal
    found, bit 2 of the following frame is 1, and the signal repeats one
    frame later.  The frame phase is then chosen by majority vote of
    signal matches over the whole stream, so sparse corruption of a few
    alignment octets cannot slip the alignment by a frame.  Returns (bit
    offset of the first frame in phase, payload octets shaped
    (frames, 31)).  Raises FrameAlignmentError when no alignment exists.
    """
    s = np.ascontiguousarray(stream, dtype=np.uint8)
    n = len(s)
    if n < 3 * FRAME_BITS:
        raise FrameAlignmentError(f"stream of {n} bits is shorter than three frames")
    fas_at = np.ones(n - 7, dtype=bool)
    for j, bit in enumerate(FAS_PATTERN):
        fas_at &= s[1 + j : n - 7 + 1 + j] == bit
    limit = n - 2 * FRAME_BITS - 7  # last offset with room for the confirmation
    if limit <= 0:
        raise FrameAlignmentError("no frame alignment found")
    good = (
        fas_at[:limit]
        & (s[FRAME_BITS + 1 : FRAME_BITS + 1 + limit] == 1)
        & fas_at[2 * FRAME_BITS : 2 * FRAME_BITS + limit]
    )
    candidates = np.flatnonzero(good)
    if len(candidates) == 0:
        raise FrameAlignmentError("no frame alignment found")
    phases = np.unique(candidates % (2 * FRAME_BITS))
    votes = [int(fas_at[int(p) :: 2 * FRAME_BITS].sum()) for p in phases]
    offset = int(phases[int(np.argmax(votes))])
    frames = (n - offset) // FRAME_BITS
    octets = s[offset : offset + frames * FRAME_BITS].reshape(frames, 32, 8)
    payload = np.packbits(octets[:, 1:, :], axis=2)[:, :, 0]
    return offset, payload


def hdb3_encode(bits: np.ndarray, start_polarity: int = 1) -> np.ndarray:
    """Line-code a bit stream into ternary symbols (+1, 0, -1).

    `start_polarity` is the polarity the first mark would take.  Each run
    of four zeros becomes 000V when an odd number of pulses was sent since
    the previous substitution, else B00V; the balancing pulse keeps
    successive violations alternating.
    """
    if start_polarity not in (1, -1):
        raise ValueError("start polarity must be +1 or -1")
    b = np.ascontiguousarray(bits, dtype=np.uint8)
    n = len(b)
    if n == 0:
        return np.zeros(0, dtype=np.int8)
    ones_pos = np.flatnonzero(b).astype(np.int64)

    # Substitution blocks: greedy groups of four inside each zero run.
    edges = np.concatenate(([-1], ones_pos, [n]))
    run_start = edges[:-1] + 1
    run_len = edges[1:] - edges[:-1] - 1
    counts = run_len // 4
    keep = counts > 0
    run_start, counts = run_start[keep], counts[keep]
    total = int(counts.sum())
    if total:
        first = np.repeat(run_start, counts)
        offsets = np.arange(total) - np.repeat(np.cumsum(counts) - counts, counts)
        block_start = first + 4 * offsets
    else:
        block_start = np.zeros(0, dtype=np.int64)
    v_pos = block_start + 3

    # 000V when the pulse count since the previous violation is odd.
    prev_v = np.concatenate(([-1], v_pos[:-1]))
    ones_since = np.searchsorted(ones_pos, block_start) - np.searchsorted(ones_pos, prev_v + 1)
    needs_b = (ones_since % 2) == 0
    b_pos = block_start[needs_b]

    # Marks and balancing pulses advance the polarity; violations repeat
    # the previous pulse.  A pulse whose 1-based rank among polarity
    # advances is odd takes the start polarity, so each group's polarity
    # follows from its own index plus its rank among the other groups.
    symbols = np.zeros(n, dtype=np.int8)
    plus, minus = np.int8(start_polarity), np.int8(-start_polarity)
    ones_rank = np.arange(1, len(ones_pos) + 1) + np.searchsorted(b_pos, ones_pos)
    symbols[ones_pos] = np.where(ones_rank & 1, plus, minus)
    b_rank = np.arange(1, len(b_pos) + 1) + np.searchsorted(ones_pos, b_pos)
    symbols[b_pos] = np.where(b_rank & 1, plus, minus)
    v_rank = np.searchsorted(ones_pos, v_pos) + np.searchsorted(b_pos, v_pos)
    symbols[v_pos] = np.where(v_rank & 1, plus, minus)
    return symbols


def hdb3_decode(symbols: np.ndarray) -> np.ndarray:
    """Reverse the line code, flagging anything no encoder would emit.

    Violation pulses are recognized as a repeat of the previous pulse
    polarity; they must terminate a 000V or B00V block.  Four plain zeros,
    a violation without room for its block, or a violation leaning on a
    consumed pulse raise LineCodeViolationError with the symbol position.
    """
    s = np.ascontiguousarray(symbols, dtype=np.int8)
    n = len(s)
    bad_value = np.flatnonzero((s != 0) & (s != 1) & (s != -1))
    if len(bad_value):
        raise LineCodeViolationError(bad_value[0], f"symbol out of alphabet at {bad_value[0]}")
    pulses = np.flatnonzero(s).astype(np.int64)
    if len(pulses) == 0:
        if n >= 4:
            raise LineCodeViolationError(3, "four consecutive empty symbols")
        return np.zeros(n, dtype=np.uint8)

    errors: list[int] = []
    if pulses[0] >= 4:
        errors.append(3)
    if n - 1 - pulses[-1] >= 4:
        errors.append(int(pulses[-1]) + 4)

    signs = s[pulses]
    viol = np.zeros(len(pulses), dtype=bool)
    viol[1:] = signs[1:] == signs[:-1]
    gap = np.diff(pulses)

    crowded = viol[1:] & (gap <= 2)
    b00v = viol[1:] & (gap == 3)
    plain_v = viol[1:] & (gap >= 4)
    # The balancing pulse of B00V must be an ordinary mark, not a violation.
    stolen = b00v & viol[:-1]
    # Zero runs an encoder would have substituted: 4 plain zeros, or more
    # than 3 zeros left over before a 000V block.
    too_long = (~viol[1:] & (gap >= 5)) | (plain_v & (gap >= 8))

    for mask, at in (
        (crowded, pulses[1:]),
        (stolen, pulses[:-1]),
        (too_long, pulses[:-1] + 4),
    ):
        if mask.any():
            errors.extend(at[mask].tolist())
    if errors:
        position = min(errors)
        raise LineCodeViolationError(position)

    out = np.zeros(n, dtype=np.uint8)
    out[pulses] = 1
    block = b00v | plain_v
    out[pulses[1:][block]] = 0
    out[pulses[1:][b00v] - 3] = 0
    return out
