"""Seeded network impairment model: base delay, jitter, delay spikes, a
start-of-call burst, and physical losses.

The model is FIFO: it never reorders packets. Arrival times are clamped to be
non-decreasing in send order, which is also what produces the queue-drain
pattern of near-simultaneous arrivals after a delay spike.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, replace

from .rtp import CallTrace

# A spike adds its full magnitude to one packet and decays linearly to zero
# over this many subsequent packets.
SPIKE_DECAY_PACKETS = 10

# Start-burst packets land this far apart, i.e. effectively simultaneous
# compared to the frame interval.
BURST_SPACING_US = 100


@dataclass(frozen=True)
class ImpairmentConfig:
    base_delay_us: int = 50_000
    jitter_us: int = 0
    spike_rate_per_min: float = 0.0
    spike_magnitude_us: int = 0
    start_burst_len: int = 0
    phys_loss_prob: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.phys_loss_prob <= 1.0:
            raise ValueError(f"phys_loss_prob must be in [0, 1], got {self.phys_loss_prob}")
        for name in ("base_delay_us", "jitter_us", "spike_magnitude_us", "start_burst_len"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)}")
        if self.spike_rate_per_min < 0:
            raise ValueError(f"spike_rate_per_min must be >= 0, got {self.spike_rate_per_min}")


def apply_impairments(trace: CallTrace, config: ImpairmentConfig) -> CallTrace:
    """Produce the arrival timeline for a sent stream.

    Per packet, in send order: draw physical loss, then an exponential jitter
    with mean jitter_us (one-sided, delays only), then Poisson-ish delay
    spikes that decay over the next packets. The first start_burst_len
    packets are instead collapsed into a near-simultaneous burst released
    around the time the last of them was sent. Finally arrivals are clamped
    to FIFO order. Fully deterministic for a given (trace, config).
    """
    if trace.has_arrivals:
        raise ValueError("trace already carries arrivals; refusing to impair twice")
    if not trace.packets:
        return trace

    rng = random.Random(config.seed)
    order = sorted(trace.packets, key=lambda p: (p.send_us, p.seq))
    n = len(order)
    spike_prob = min(1.0, config.spike_rate_per_min * trace.profile.frame_ms / 60_000.0)

    burst_len = min(config.start_burst_len, n)
    # Burst packets are held by the network and released together once the
    # last of them has been sent; anchoring there keeps arrival >= send.
    burst_release = order[burst_len - 1].send_us + config.base_delay_us if burst_len else 0

    lost: list[bool] = []
    arrival: list[int] = []
    spikes: list[tuple[int, int]] = []  # (first affected packet index, magnitude)
    for k, pkt in enumerate(order):
        lost.append(rng.random() < config.phys_loss_prob)
        jitter = round(rng.expovariate(1.0 / config.jitter_us)) if config.jitter_us > 0 else 0
        if spike_prob > 0.0 and rng.random() < spike_prob:
            spikes.append((k, config.spike_magnitude_us))
        spikes = [s for s in spikes if k - s[0] < SPIKE_DECAY_PACKETS]
        spike_extra = sum(
            mag * (SPIKE_DECAY_PACKETS - (k - at)) // SPIKE_DECAY_PACKETS for at, mag in spikes
        )
        if k < burst_len:
            arrival.append(burst_release + k * BURST_SPACING_US)
        else:
            arrival.append(pkt.send_us + config.base_delay_us + jitter + spike_extra)

    # FIFO clamp: a packet cannot overtake anything sent before it.
    latest = 0
    for k in range(n):
        if lost[k]:
            continue
        latest = max(latest, arrival[k])
        arrival[k] = latest

    by_seq = {
        pkt.seq: replace(pkt, arrival_us=None if lost[k] else arrival[k])
        for k, pkt in enumerate(order)
    }
    return trace.with_packets(by_seq[p.seq] for p in trace.packets)
