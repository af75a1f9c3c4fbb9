"""Timed RTP packet streams and the timeline arithmetic shared by all modules.

Time is integer microseconds from call start; sequence numbers are stored
unwrapped (the 16-bit wire wrap is handled by the trace reader). Payloads are
opaque bytes, no audio codec is involved.
"""

from __future__ import annotations

from dataclasses import dataclass, replace


@dataclass(frozen=True)
class CodecProfile:
    """Fixed-rate codec framing: one packet of payload_bytes every frame_ms."""

    frame_ms: int = 20
    payload_bytes: int = 160
    bitrate_bps: int = 64000

    def __post_init__(self) -> None:
        if self.frame_ms <= 0:
            raise ValueError(f"frame_ms must be positive, got {self.frame_ms}")
        if self.payload_bytes <= 0:
            raise ValueError(f"payload_bytes must be positive, got {self.payload_bytes}")
        # payload_bytes * 8 bits are emitted every frame_ms milliseconds
        if self.bitrate_bps * self.frame_ms != self.payload_bytes * 8 * 1000:
            raise ValueError(
                f"bitrate {self.bitrate_bps} bps inconsistent with "
                f"{self.payload_bytes} B every {self.frame_ms} ms"
            )

    @property
    def frame_us(self) -> int:
        return self.frame_ms * 1000


#: G.711 with 20 ms packetization: 50 packets/s, 160 B payload, 64 kbit/s.
G711 = CodecProfile(frame_ms=20, payload_bytes=160, bitrate_bps=64000)


@dataclass(frozen=True, slots=True)
class RtpPacket:
    """One packet of a stream. arrival_us is None while unsent or when the
    network dropped the packet (which of the two is a property of the trace,
    not of the packet)."""

    seq: int
    send_us: int
    arrival_us: int | None = None
    payload: bytes = b""

    def __post_init__(self) -> None:
        if self.seq < 0:
            raise ValueError(f"seq must be >= 0, got {self.seq}")
        if self.send_us < 0:
            raise ValueError(f"send_us must be >= 0, got {self.send_us}")
        if self.arrival_us is not None and self.arrival_us < self.send_us:
            raise ValueError(
                f"arrival_us {self.arrival_us} precedes send_us {self.send_us} "
                f"for seq {self.seq}"
            )


@dataclass(frozen=True)
class CallTrace:
    """Per-packet send/arrival timeline of one RTP stream.

    packets are kept ordered by seq. Seq values are consecutive except for
    gaps deliberately introduced by the phantom-loss channel.
    """

    profile: CodecProfile
    packets: tuple[RtpPacket, ...]
    duration_s: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "packets", tuple(self.packets))
        if self.duration_s <= 0:
            raise ValueError(f"duration_s must be positive, got {self.duration_s}")
        prev = None
        for p in self.packets:
            if prev is not None and p.seq <= prev:
                raise ValueError(f"packets not in strictly ascending seq order at seq {p.seq}")
            prev = p.seq
            if len(p.payload) != self.profile.payload_bytes:
                raise ValueError(
                    f"seq {p.seq}: payload is {len(p.payload)} B, "
                    f"profile says {self.profile.payload_bytes} B"
                )

    @property
    def base_seq(self) -> int:
        return self.packets[0].seq

    @property
    def last_seq(self) -> int:
        return self.packets[-1].seq

    @property
    def has_arrivals(self) -> bool:
        return any(p.arrival_us is not None for p in self.packets)

    def arrived(self) -> list[RtpPacket]:
        """Packets that reached the receiver, in arrival order.

        Arrival order is ascending arrival_us with ties broken by ascending
        seq, so simultaneous bursts are processed deterministically.
        """
        got = [p for p in self.packets if p.arrival_us is not None]
        got.sort(key=lambda p: (p.arrival_us, p.seq))
        return got

    def with_packets(self, packets) -> "CallTrace":
        return replace(self, packets=tuple(packets))


def synth_stream(profile: CodecProfile, duration_s: int, base_seq: int = 0) -> CallTrace:
    """Synthesize a clean sent stream: one packet every frame, consecutive
    seqs from base_seq, zero-filled payloads, no arrivals."""
    if duration_s <= 0:
        raise ValueError(f"duration_s must be positive, got {duration_s}")
    if base_seq < 0:
        raise ValueError(f"base_seq must be >= 0, got {base_seq}")
    count = duration_s * 1000 // profile.frame_ms
    pad = bytes(profile.payload_bytes)
    packets = tuple(
        RtpPacket(seq=base_seq + k, send_us=k * profile.frame_us, payload=pad)
        for k in range(count)
    )
    return CallTrace(profile=profile, packets=packets, duration_s=duration_s)


def inter_arrival_deltas(trace: CallTrace) -> list[int]:
    """Deltas between consecutive arrivals, in arrival order.

    Packets that never arrived are excluded. Needs at least two arrivals.
    """
    got = trace.arrived()
    if len(got) < 2:
        raise ValueError(f"need at least 2 arrived packets, have {len(got)}")
    return [b.arrival_us - a.arrival_us for a, b in zip(got, got[1:])]
