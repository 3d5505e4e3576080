"""Seeded, reproducible fault models for the loopback path.

All randomness derives from the splitmix64 mixer used in counter mode:
draw ``i`` of stream ``seed`` is ``mix(seed + (i+1) * 0x9E3779B97F4A7C15)``
with

    mix(z): z ^= z >> 30;  z *= 0xBF58476D1CE4E5B9
            z ^= z >> 27;  z *= 0x94D049BB133111EB
            z ^= z >> 31

(all arithmetic mod 2**64).  Uniform doubles take the top 53 bits.  The
constants are fixed here so that identical configurations reproduce
identical error streams in any implementation.

A model is an immutable configuration; `open_stream` turns it into a
stateful stream that consumes bits sequentially (bit positions are global
across calls, so a long run may be fed in segments).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def mix64(z: int) -> int:
    z &= _MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
    return z ^ (z >> 31)


def derive_seed(seed: int, index: int) -> int:
    """Fork a substream seed; index 0 returns a distinct value too."""
    return mix64((seed + (index + 1) * _GOLDEN) & _MASK64)


def _uniforms(seed: int, start: int, count: int) -> np.ndarray:
    """Draws start..start+count of the stream, as float64 in [0, 1)."""
    idx = np.arange(start + 1, start + 1 + count, dtype=np.uint64)
    z = idx * np.uint64(_GOLDEN) + np.uint64(seed & _MASK64)
    z ^= z >> np.uint64(30)
    z *= np.uint64(_MIX1)
    z ^= z >> np.uint64(27)
    z *= np.uint64(_MIX2)
    z ^= z >> np.uint64(31)
    return (z >> np.uint64(11)) * 2.0**-53


def _uniform_scalar(seed: int, index: int) -> float:
    return (mix64((seed + (index + 1) * _GOLDEN) & _MASK64) >> 11) * 2.0**-53


@dataclass(frozen=True)
class Ideal:
    """Transparent path: output equals input."""

    seed: int = 0


@dataclass(frozen=True)
class Bsc:
    """Flips each bit independently with probability `p`."""

    p: float
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= float(self.p) <= 1.0:
            raise ValueError(f"flip probability {self.p} outside [0, 1]")


@dataclass(frozen=True)
class GilbertElliott:
    """Two-state burst model.

    `p_gb`/`p_bg` are per-bit transition probabilities good->bad and
    bad->good; `p_good`/`p_bad` are the per-bit probabilities of CORRECT
    delivery in each state (so the flip rate in the bad state is
    ``1 - p_bad``).  The initial state is drawn from the stationary
    distribution of the two-state chain.
    """

    p_gb: float
    p_bg: float
    p_good: float
    p_bad: float
    seed: int = 0

    def __post_init__(self):
        for name in ("p_gb", "p_bg", "p_good", "p_bad"):
            v = float(getattr(self, name))
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0, 1]")

    @property
    def stationary_bad(self) -> float:
        denom = self.p_gb + self.p_bg
        return self.p_gb / denom if denom > 0 else 0.5

    @property
    def long_run_error_rate(self) -> float:
        pi_bad = self.stationary_bad
        return (1 - pi_bad) * (1 - self.p_good) + pi_bad * (1 - self.p_bad)


@dataclass(frozen=True)
class FixedMask:
    """Flips exactly the listed stream positions."""

    indices: tuple[int, ...]
    seed: int = 0

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if any(i < 0 for i in idx):
            raise ValueError("mask indices must be nonnegative")
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ValueError("mask indices must be strictly increasing")
        object.__setattr__(self, "indices", idx)


ChannelModel = Ideal | Bsc | GilbertElliott | FixedMask


class _IdealStream:
    def __init__(self, model: Ideal):
        self.position = 0

    def apply(self, bits: np.ndarray) -> np.ndarray:
        self.position += len(bits)
        return bits


class _BscStream:
    def __init__(self, model: Bsc):
        self.p = float(model.p)
        self.seed = model.seed
        self.position = 0

    def apply(self, bits: np.ndarray) -> np.ndarray:
        n = len(bits)
        if n == 0 or self.p == 0.0:
            self.position += n
            return bits
        flips = _uniforms(self.seed, self.position, n) < self.p
        self.position += n
        return bits ^ flips.astype(np.uint8)


class _GilbertElliottStream:
    # Dwell times in each state are geometric, sampled in batches from the
    # transition substream; per-bit error draws come from a second substream
    # keyed by global bit position, so a state change only moves the
    # threshold.
    def __init__(self, model: GilbertElliott):
        self.model = model
        self.err_seed = derive_seed(model.seed, 1)
        self.dwell_seed = derive_seed(model.seed, 2)
        self.dwell_counter = 0
        self.position = 0
        init = _uniform_scalar(derive_seed(model.seed, 0), 0)
        self.bad = init < model.stationary_bad
        self.remaining = self._draw_dwell()

    def _draw_dwell(self) -> float:
        leave = self.model.p_bg if self.bad else self.model.p_gb
        if leave <= 0.0:
            return math.inf
        if leave >= 1.0:
            return 1
        u = _uniform_scalar(self.dwell_seed, self.dwell_counter)
        self.dwell_counter += 1
        # Geometric on {1, 2, ...}; 1-u keeps the argument away from log(0).
        return int(math.log(1.0 - u) / math.log1p(-leave)) + 1

    def apply(self, bits: np.ndarray) -> np.ndarray:
        out = np.array(bits, dtype=np.uint8, copy=True)
        n = len(out)
        done = 0
        while done < n:
            span = n - done if math.isinf(self.remaining) else min(int(self.remaining), n - done)
            flip_p = (1.0 - self.model.p_bad) if self.bad else (1.0 - self.model.p_good)
            if flip_p > 0.0 and span > 0:
                u = _uniforms(self.err_seed, self.position + done, span)
                np.bitwise_xor(
                    out[done : done + span],
                    (u < flip_p).astype(np.uint8),
                    out=out[done : done + span],
                )
            done += span
            if not math.isinf(self.remaining):
                self.remaining -= span
                if self.remaining <= 0:
                    self.bad = not self.bad
                    self.remaining = self._draw_dwell()
        self.position += n
        return out


class _FixedMaskStream:
    def __init__(self, model: FixedMask):
        self.indices = np.asarray(model.indices, dtype=np.int64)
        self.position = 0

    def apply(self, bits: np.ndarray) -> np.ndarray:
        n = len(bits)
        lo = np.searchsorted(self.indices, self.position, side="left")
        hi = np.searchsorted(self.indices, self.position + n, side="left")
        self.position += n
        if lo == hi:
            return bits
        out = np.array(bits, dtype=np.uint8, copy=True)
        hit = self.indices[lo:hi] - (self.position - n)
        out[hit] ^= 1
        return out


def open_stream(model: ChannelModel):
    if isinstance(model, Ideal):
        return _IdealStream(model)
    if isinstance(model, Bsc):
        return _BscStream(model)
    if isinstance(model, GilbertElliott):
        return _GilbertElliottStream(model)
    if isinstance(model, FixedMask):
        return _FixedMaskStream(model)
    raise TypeError(f"not a channel model: {model!r}")


def apply(model: ChannelModel, bits: np.ndarray) -> np.ndarray:
    """One-shot application of a model to a whole stream."""
    bits = np.asarray(bits, dtype=np.uint8)
    if isinstance(model, FixedMask) and model.indices and model.indices[-1] >= len(bits):
        raise ValueError(
            f"mask index {model.indices[-1]} outside stream of {len(bits)} bits"
        )
    return open_stream(model).apply(bits)


def model_to_dict(model: ChannelModel) -> dict:
    if isinstance(model, Ideal):
        return {"kind": "ideal", "seed": model.seed}
    if isinstance(model, Bsc):
        return {"kind": "bsc", "p": model.p, "seed": model.seed}
    if isinstance(model, GilbertElliott):
        return {
            "kind": "gilbert_elliott",
            "p_gb": model.p_gb,
            "p_bg": model.p_bg,
            "p_good": model.p_good,
            "p_bad": model.p_bad,
            "seed": model.seed,
        }
    if isinstance(model, FixedMask):
        return {"kind": "fixed_mask", "indices": list(model.indices), "seed": model.seed}
    raise TypeError(f"not a channel model: {model!r}")


def model_from_dict(data: dict) -> ChannelModel:
    try:
        kind = data["kind"]
        seed = int(data.get("seed", 0))
        if kind == "ideal":
            return Ideal(seed=seed)
        if kind == "bsc":
            return Bsc(p=float(data["p"]), seed=seed)
        if kind == "gilbert_elliott":
            return GilbertElliott(
                p_gb=float(data["p_gb"]),
                p_bg=float(data["p_bg"]),
                p_good=float(data["p_good"]),
                p_bad=float(data["p_bad"]),
                seed=seed,
            )
        if kind == "fixed_mask":
            return FixedMask(indices=tuple(int(i) for i in data["indices"]), seed=seed)
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"bad channel description {data!r}: {exc}") from None
    raise ValueError(f"unknown channel kind {kind!r}")
