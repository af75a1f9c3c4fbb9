"""Covert channels over an RTP stream: embed, extract, and bandwidth math.

Five channels are implemented, all operating purely on the packet timeline:

  reorder   permute the seqs inside fixed windows (Lehmer-coded index)
  rate      slow the sending rate during an interval to signal a symbol
  delay     choose one of two inter-packet gaps per consecutive gap
  phantom   skip a sequence number inside a period to signal a 1
  lack      over-delay selected packets past the playout deadline and reuse
            their payloads as the covert payload

Extraction inverts embedding on a clean network and is best-effort under
impairment. Only the reorder channel produces out-of-order sequences.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, replace
from typing import Union

from .jitterbuf import JitterBufferConfig
from .rtp import CallTrace, CodecProfile

# LACK skips this much of the call start so the playout clock is established
# by innocent packets before any steg packet can perturb it.
LACK_WARMUP_MS = 1000

_EPS = 1e-9


class CapacityError(ValueError):
    """Message does not fit the channel capacity of the trace."""


@dataclass(frozen=True)
class ReorderChannel:
    window_n: int

    def __post_init__(self) -> None:
        if self.window_n < 2:
            raise ValueError(f"window_n must be >= 2, got {self.window_n}")


@dataclass(frozen=True)
class RateChannel:
    h: int = 2
    interval_s: float = 1.0
    delta_us: int = 10_000

    def __post_init__(self) -> None:
        if self.h < 2:
            raise ValueError(f"need at least 2 rates, got {self.h}")
        if self.interval_s <= 0:
            raise ValueError(f"interval_s must be positive, got {self.interval_s}")
        if self.delta_us <= 0:
            raise ValueError(f"delta_us must be positive, got {self.delta_us}")


@dataclass(frozen=True)
class DelayChannel:
    delta0_us: int
    delta1_us: int

    def __post_init__(self) -> None:
        if self.delta0_us <= 0 or self.delta1_us <= 0:
            raise ValueError("both gaps must be positive")
        if self.delta0_us == self.delta1_us:
            raise ValueError("the two gaps must differ")


@dataclass(frozen=True)
class PhantomLossChannel:
    period_s: float = 5.0

    def __post_init__(self) -> None:
        if self.period_s <= 0:
            raise ValueError(f"period_s must be positive, got {self.period_s}")


@dataclass(frozen=True)
class LackChannel:
    loss_prob: float
    delay_us: int
    schedule_seed: int = 0
    target_buffer_ms: int | None = None

    def __post_init__(self) -> None:
        if not 0.0 < self.loss_prob < 1.0:
            raise ValueError(f"loss_prob must be in (0, 1), got {self.loss_prob}")
        if self.delay_us <= 0:
            raise ValueError(f"delay_us must be positive, got {self.delay_us}")
        if self.target_buffer_ms is not None and self.delay_us <= self.target_buffer_ms * 1000:
            raise ValueError(
                f"delay_us {self.delay_us} must exceed the target buffer "
                f"({self.target_buffer_ms} ms) or the receiver will play the packets"
            )


ChannelConfig = Union[ReorderChannel, RateChannel, DelayChannel, PhantomLossChannel, LackChannel]


@dataclass(frozen=True)
class Steganogram:
    bits: tuple[int, ...]

    def __post_init__(self) -> None:
        if any(b not in (0, 1) for b in self.bits):
            raise ValueError("bits must be 0 or 1")

    def __len__(self) -> int:
        return len(self.bits)

    @classmethod
    def from_string(cls, text: str) -> "Steganogram":
        return cls(tuple(int(c) for c in text if c in "01"))

    def to_string(self) -> str:
        return "".join(str(b) for b in self.bits)

    @classmethod
    def random(cls, n_bits: int, seed: int) -> "Steganogram":
        rng = random.Random(seed)
        return cls(tuple(rng.getrandbits(1) for _ in range(n_bits)))


# ---------------------------------------------------------------------------
# bit and permutation plumbing


def int_from_bits(bits) -> int:
    value = 0
    for b in bits:
        value = (value << 1) | b
    return value


def bits_from_int(value: int, width: int) -> tuple[int, ...]:
    return tuple((value >> (width - 1 - i)) & 1 for i in range(width))


def bytes_from_bits(bits) -> bytes:
    padded = list(bits) + [0] * (-len(bits) % 8)
    return bytes(int_from_bits(padded[i : i + 8]) for i in range(0, len(padded), 8))


def bits_from_bytes(data: bytes) -> tuple[int, ...]:
    out = []
    for byte in data:
        out.extend((byte >> (7 - i)) & 1 for i in range(8))
    return tuple(out)


def permutation_from_index(index: int, n: int) -> list[int]:
    """Decode a factorial-number-system index in [0, n!) to a permutation."""
    if not 0 <= index < math.factorial(n):
        raise ValueError(f"index {index} out of range for n={n}")
    remaining = list(range(n))
    perm = []
    for i in range(n - 1, -1, -1):
        digit, index = divmod(index, math.factorial(i))
        perm.append(remaining.pop(digit))
    return perm


def permutation_index(perm) -> int:
    """Inverse of permutation_from_index."""
    remaining = sorted(perm)
    index = 0
    for i, p in enumerate(perm):
        digit = remaining.index(p)
        remaining.pop(digit)
        index += digit * math.factorial(len(perm) - 1 - i)
    return index


def window_bits(window_n: int) -> int:
    """Whole message bits carried by one permutation window: floor(log2 n!)."""
    return math.factorial(window_n).bit_length() - 1


# ---------------------------------------------------------------------------
# per-channel parameter helpers


def _packets_per_interval(interval_s: float, profile: CodecProfile) -> int:
    ppi = round(interval_s * 1000 / profile.frame_ms)
    if ppi < 2:
        raise ValueError(f"interval {interval_s}s spans fewer than 2 packets")
    return ppi


def _packets_per_period(period_s: float, profile: CodecProfile) -> int:
    ppp = round(period_s * 1000 / profile.frame_ms)
    if ppp < 3:
        raise ValueError(f"period {period_s}s must span at least 3 packets")
    return ppp


def _rate_symbol_bits(h: int) -> int:
    return h.bit_length() - 1  # floor(log2 h)


def _lack_count(n_packets: int, loss_prob: float) -> int:
    return int(n_packets * loss_prob + _EPS)


def _lack_schedule(channel: LackChannel, trace: CallTrace) -> list[int]:
    n = len(trace.packets)
    warmup = min(n, LACK_WARMUP_MS // trace.profile.frame_ms)
    k = _lack_count(n, channel.loss_prob)
    if k > n - warmup:
        raise ValueError(
            f"loss_prob {channel.loss_prob} selects {k} packets but only "
            f"{n - warmup} are eligible after the warmup"
        )
    rng = random.Random(channel.schedule_seed)
    return sorted(rng.sample(range(warmup, n), k))


# ---------------------------------------------------------------------------
# capacity and bandwidth


def channel_capacity_bits(channel: ChannelConfig, trace: CallTrace) -> int:
    """Exact number of message bits embed() accepts for this trace."""
    n = len(trace.packets)
    profile = trace.profile
    if isinstance(channel, ReorderChannel):
        return (n // channel.window_n) * window_bits(channel.window_n)
    if isinstance(channel, RateChannel):
        return (n // _packets_per_interval(channel.interval_s, profile)) * _rate_symbol_bits(
            channel.h
        )
    if isinstance(channel, DelayChannel):
        return max(0, n - 1)
    if isinstance(channel, PhantomLossChannel):
        return n // _packets_per_period(channel.period_s, profile)
    if isinstance(channel, LackChannel):
        return _lack_count(n, channel.loss_prob) * profile.payload_bytes * 8
    raise TypeError(f"unknown channel {channel!r}")


def steg_bandwidth(channel: ChannelConfig, duration_s: float, profile: CodecProfile) -> float:
    """Information rate of the channel in bits per second.

    reorder: i * log2(n!) / T with i complete windows in T
    rate:    i * log2(h) / T with i intervals in T
    delay:   one bit per inter-packet gap
    phantom: i / T with i periods in T
    lack:    codec bitrate * loss probability
    """
    if duration_s <= 0:
        raise ValueError(f"duration must be positive, got {duration_s}")
    frame_s = profile.frame_ms / 1000.0
    if isinstance(channel, ReorderChannel):
        windows = int(duration_s / (channel.window_n * frame_s) + _EPS)
        return windows * math.log2(math.factorial(channel.window_n)) / duration_s
    if isinstance(channel, RateChannel):
        intervals = int(duration_s / channel.interval_s + _EPS)
        return intervals * math.log2(channel.h) / duration_s
    if isinstance(channel, DelayChannel):
        n = int(duration_s * 1000 / profile.frame_ms + _EPS)
        return max(0, n - 1) / duration_s
    if isinstance(channel, PhantomLossChannel):
        periods = int(duration_s / channel.period_s + _EPS)
        return periods / duration_s
    if isinstance(channel, LackChannel):
        return profile.bitrate_bps * channel.loss_prob
    raise TypeError(f"unknown channel {channel!r}")


# ---------------------------------------------------------------------------
# embedding


def embed(channel: ChannelConfig, trace: CallTrace, message: Steganogram) -> CallTrace:
    """Embed message into a sent stream, returning the modified stream.

    Rejects messages longer than channel_capacity_bits(channel, trace).
    Shorter messages leave the tail of the stream untouched (reorder/rate/
    delay/phantom) or zero-pad the remaining covert payload (lack).
    """
    if trace.has_arrivals:
        raise ValueError("embed operates on a sent stream, before impairment")
    if not trace.packets:
        raise ValueError("cannot embed into an empty trace")
    if len(message) == 0:
        raise ValueError("empty message")
    capacity = channel_capacity_bits(channel, trace)
    if len(message) > capacity:
        raise CapacityError(
            f"message of {len(message)} bits exceeds capacity of {capacity} bits"
        )
    if isinstance(channel, ReorderChannel):
        return _embed_reorder(channel, trace, message.bits)
    if isinstance(channel, RateChannel):
        return _embed_rate(channel, trace, message.bits)
    if isinstance(channel, DelayChannel):
        return _embed_delay(channel, trace, message.bits)
    if isinstance(channel, PhantomLossChannel):
        return _embed_phantom(channel, trace, message.bits)
    if isinstance(channel, LackChannel):
        return _embed_lack(channel, trace, message.bits)
    raise TypeError(f"unknown channel {channel!r}")


def _pad(bits, width: int) -> tuple[int, ...]:
    return tuple(bits) + (0,) * (width - len(bits))


def _embed_reorder(channel: ReorderChannel, trace: CallTrace, bits) -> CallTrace:
    w = channel.window_n
    k = window_bits(w)
    packets = list(trace.packets)
    out = list(packets)
    pos = 0
    for start in range(0, len(packets) - w + 1, w):
        chunk = bits[pos : pos + k]
        if not chunk:
            break
        pos += len(chunk)
        perm = permutation_from_index(int_from_bits(_pad(chunk, k)), w)
        window = packets[start : start + w]
        slots = [p.send_us for p in window]
        for t, src in enumerate(perm):
            out[start + t] = replace(window[src], send_us=slots[t])
    out.sort(key=lambda p: p.seq)
    return trace.with_packets(out)


def _rebuild_sends(trace: CallTrace, gaps: list[int]) -> CallTrace:
    packets = list(trace.packets)
    out = [packets[0]]
    t = packets[0].send_us
    for pkt, gap in zip(packets[1:], gaps):
        t += gap
        out.append(replace(pkt, send_us=t))
    return trace.with_packets(out)


def _embed_rate(channel: RateChannel, trace: CallTrace, bits) -> CallTrace:
    profile = trace.profile
    ppi = _packets_per_interval(channel.interval_s, profile)
    sym_bits = _rate_symbol_bits(channel.h)
    n = len(trace.packets)
    gaps = [profile.frame_us] * (n - 1)
    nominal = (1 << sym_bits) - 1  # the all-ones symbol keeps the original rate
    for j in range(n // ppi):
        chunk = bits[j * sym_bits : (j + 1) * sym_bits]
        if not chunk:
            break
        value = int_from_bits(_pad(chunk, sym_bits))
        extra = (nominal - value) * channel.delta_us
        for t in range(j * ppi, min((j + 1) * ppi, n - 1)):
            gaps[t] = profile.frame_us + extra
    return _rebuild_sends(trace, gaps)


def _embed_delay(channel: DelayChannel, trace: CallTrace, bits) -> CallTrace:
    n = len(trace.packets)
    gaps = [trace.profile.frame_us] * (n - 1)
    for t, b in enumerate(bits):
        gaps[t] = channel.delta1_us if b else channel.delta0_us
    return _rebuild_sends(trace, gaps)


def _embed_phantom(channel: PhantomLossChannel, trace: CallTrace, bits) -> CallTrace:
    ppp = _packets_per_period(channel.period_s, trace.profile)
    # skip the middle packet of the period: never the first packet of the
    # stream and never the last of the period, so the receiver can always
    # delimit periods from the surviving seq range
    drop = {j * ppp + ppp // 2 for j, b in enumerate(bits) if b}
    packets = [p for i, p in enumerate(trace.packets) if i not in drop]
    return trace.with_packets(packets)


def _embed_lack(channel: LackChannel, trace: CallTrace, bits) -> CallTrace:
    chunk_bits = trace.profile.payload_bytes * 8
    chosen = _lack_schedule(channel, trace)
    out = list(trace.packets)
    for i, pos in enumerate(chosen):
        chunk = bits[i * chunk_bits : (i + 1) * chunk_bits]
        payload = bytes_from_bits(_pad(chunk, chunk_bits))
        out[pos] = replace(
            out[pos], payload=payload, send_us=out[pos].send_us + channel.delay_us
        )
    return trace.with_packets(out)


# ---------------------------------------------------------------------------
# extraction


def extract(
    channel: ChannelConfig,
    trace: CallTrace,
    buffer_cfg: JitterBufferConfig | None = None,
) -> Steganogram:
    """Recover the message from an arrived trace.

    Exact inverse of embed on a clean network; best-effort when losses or
    jitter disturbed the stream. The lack channel needs buffer_cfg to
    reconstruct the playout deadlines that separate steg packets from
    punctual ones.
    """
    if not trace.has_arrivals:
        raise ValueError("extract needs an arrived trace")
    if isinstance(channel, ReorderChannel):
        return _extract_reorder(channel, trace)
    if isinstance(channel, RateChannel):
        return _extract_rate(channel, trace)
    if isinstance(channel, DelayChannel):
        return _extract_delay(channel, trace)
    if isinstance(channel, PhantomLossChannel):
        return _extract_phantom(channel, trace)
    if isinstance(channel, LackChannel):
        if buffer_cfg is None:
            raise ValueError("lack extraction needs the receiver's buffer configuration")
        return _extract_lack(channel, trace, buffer_cfg)
    raise TypeError(f"unknown channel {channel!r}")


def _extract_reorder(channel: ReorderChannel, trace: CallTrace) -> Steganogram:
    w = channel.window_n
    k = window_bits(w)
    got = trace.arrived()
    bits: list[int] = []
    for start in range(0, len(got) - w + 1, w):
        seqs = [p.seq for p in got[start : start + w]]
        ranking = sorted(seqs)
        perm = [ranking.index(s) for s in seqs]
        index = permutation_index(perm) & ((1 << k) - 1)
        bits.extend(bits_from_int(index, k))
    return Steganogram(tuple(bits))


def _extract_rate(channel: RateChannel, trace: CallTrace) -> Steganogram:
    profile = trace.profile
    ppi = _packets_per_interval(channel.interval_s, profile)
    sym_bits = _rate_symbol_bits(channel.h)
    nominal = (1 << sym_bits) - 1
    got = trace.arrived()
    bits: list[int] = []
    for j in range(len(got) // ppi):
        block = got[j * ppi : (j + 1) * ppi]
        mean_gap = (block[-1].arrival_us - block[0].arrival_us) / (ppi - 1)
        m = round((mean_gap - profile.frame_us) / channel.delta_us)
        m = min(max(m, 0), channel.h - 1)
        bits.extend(bits_from_int(max(nominal - m, 0), sym_bits))
    return Steganogram(tuple(bits))


def _extract_delay(channel: DelayChannel, trace: CallTrace) -> Steganogram:
    got = trace.arrived()
    bits = []
    for a, b in zip(got, got[1:]):
        gap = b.arrival_us - a.arrival_us
        bits.append(1 if abs(gap - channel.delta1_us) <= abs(gap - channel.delta0_us) else 0)
    return Steganogram(tuple(bits))


def _extract_phantom(channel: PhantomLossChannel, trace: CallTrace) -> Steganogram:
    ppp = _packets_per_period(channel.period_s, trace.profile)
    seqs = {p.seq for p in trace.arrived()}
    base = min(seqs)
    top = max(seqs)
    bits = []
    for j in range((top - base + 1) // ppp):
        period = range(base + j * ppp, base + (j + 1) * ppp)
        bits.append(1 if any(s not in seqs for s in period) else 0)
    return Steganogram(tuple(bits))


def _extract_lack(
    channel: LackChannel, trace: CallTrace, buffer_cfg: JitterBufferConfig
) -> Steganogram:
    got = trace.arrived()
    trigger = buffer_cfg.playback_trigger
    if len(got) < trigger:
        return Steganogram(())
    t0 = got[trigger - 1].arrival_us
    base = min(p.seq for p in got)
    frame_us = trace.profile.frame_us
    late = [p for p in got if p.arrival_us >= t0 + (p.seq - base) * frame_us]
    late.sort(key=lambda p: p.seq)
    bits: list[int] = []
    for p in late:
        bits.extend(bits_from_bytes(p.payload))
    return Steganogram(tuple(bits))
