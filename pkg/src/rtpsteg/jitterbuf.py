"""Fixed-size jitter buffer playout simulation with full event classification.

The receiver buffers packets until half the buffer capacity is filled and
starts playback on the next received packet. From then on a playout tick
fires every frame. Every sent packet ends up with exactly one terminal
disposition:

  PLAYED    consumed from the buffer at its playout slot
  D1        arrived while the buffer was full (overflow drop)
  D2        arrived after its slot had already been concealed (late drop)
  PHY_LOST  never reached the receiver

and every playout slot emits exactly one of PLAY, U (underflow concealment)
or R (concealment of a slot whose packet was overflow-dropped earlier).
Concealment replays the previous frame; only the event is recorded here,
audio is out of scope.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .rtp import CallTrace

ARRIVE = "ARRIVE"
PLAY = "PLAY"
D1 = "D1"
D2 = "D2"
U = "U"
R = "R"
PHY_LOST = "PHY_LOST"
EVENT_KINDS = (ARRIVE, PLAY, D1, D2, U, R, PHY_LOST)

#: terminal disposition for packets consumed at their slot
PLAYED = "PLAYED"


@dataclass(frozen=True)
class JitterBufferConfig:
    """Buffer sized in milliseconds of voice; must be a multiple of the frame.

    For a 20 ms frame the derived parameters over sizes 20..120 ms are
    (initially buffered, playback trigger) = (1,2) (1,2) (2,3) (2,3) (3,4) (3,4).
    """

    size_ms: int
    frame_ms: int = 20

    def __post_init__(self) -> None:
        if self.frame_ms <= 0:
            raise ValueError(f"frame_ms must be positive, got {self.frame_ms}")
        if self.size_ms <= 0 or self.size_ms % self.frame_ms != 0:
            raise ValueError(
                f"size_ms must be a positive multiple of frame_ms, got "
                f"{self.size_ms} with frame {self.frame_ms}"
            )

    @property
    def capacity_pkts(self) -> int:
        return self.size_ms // self.frame_ms

    @property
    def initial_buffered(self) -> int:
        # fill to half capacity, rounding up
        return (self.capacity_pkts + 1) // 2

    @property
    def playback_trigger(self) -> int:
        return self.initial_buffered + 1


@dataclass(frozen=True)
class BufferEvent:
    """One receiver-side event. D1/D2 happen at arrival instants and carry no
    slot; PLAY/U/R happen at playout ticks and carry the slot index."""

    t_us: int
    kind: str
    seq: int
    slot: int | None = None


@dataclass(frozen=True)
class SimulationResult:
    buffer_ms: int
    events: tuple[BufferEvent, ...]
    disposition: dict[int, str]
    counts: dict[str, int]
    playout_start_us: int | None
    seq_index: dict[int, int]


@dataclass(frozen=True)
class DispositionSummary:
    sent: int
    played: int
    d1: int
    d2: int
    phys_lost: int
    u: int
    r: int
    total_loss_fraction: float


def simulate_buffer(trace: CallTrace, config: JitterBufferConfig) -> SimulationResult:
    """Run the playout clock over an arrived trace.

    Ticks take precedence over arrivals at the same instant, and the packet
    whose arrival starts playback is inserted right after the first tick;
    both are needed so that an unimpaired stream plays cleanly even at
    capacity one. If the stream ends before the trigger count is reached,
    playback drains from the last arrival so every packet still gets a
    disposition.
    """
    if config.frame_ms != trace.profile.frame_ms:
        raise ValueError(
            f"buffer frame {config.frame_ms} ms != codec frame {trace.profile.frame_ms} ms"
        )
    if not trace.packets:
        raise ValueError("cannot simulate an empty trace")
    arrivals = trace.arrived()
    if not arrivals:
        raise ValueError("trace has no arrivals; run the impairment model first")

    frame_us = trace.profile.frame_us
    capacity = config.capacity_pkts
    trigger = config.playback_trigger
    base = trace.base_seq
    last_slot = trace.last_seq - base
    lost_seqs = {p.seq for p in trace.packets if p.arrival_us is None}
    seq_index = {p.seq: i + 1 for i, p in enumerate(trace.packets)}

    events: list[BufferEvent] = []
    disposition: dict[int, str] = {}
    buffer: set[int] = set()
    d1_dropped: set[int] = set()
    slot = 0  # next playout slot, expecting seq base + slot

    def classify_arrival(p) -> None:
        if p.seq < base + slot:
            # slot already played out or concealed, useless for reconstruction
            events.append(BufferEvent(p.arrival_us, D2, p.seq))
            disposition[p.seq] = D2
        elif len(buffer) == capacity:
            events.append(BufferEvent(p.arrival_us, D1, p.seq))
            d1_dropped.add(p.seq)
            disposition[p.seq] = D1
        else:
            buffer.add(p.seq)

    def tick(t_us: int) -> None:
        nonlocal slot
        seq = base + slot
        if seq in buffer:
            buffer.discard(seq)
            events.append(BufferEvent(t_us, PLAY, seq, slot))
            disposition[seq] = PLAYED
        elif seq in d1_dropped:
            events.append(BufferEvent(t_us, R, seq, slot))
        else:
            if seq in lost_seqs:
                events.append(BufferEvent(t_us, PHY_LOST, seq, slot))
                disposition[seq] = PHY_LOST
            events.append(BufferEvent(t_us, U, seq, slot))
        slot += 1

    i = 0
    t0: int | None = None
    pending = None  # the arrival that starts playback; inserted after tick 0
    while i < len(arrivals) and t0 is None:
        p = arrivals[i]
        i += 1
        events.append(BufferEvent(p.arrival_us, ARRIVE, p.seq))
        if i == trigger:
            t0 = p.arrival_us
            pending = p
        else:
            classify_arrival(p)
    if t0 is None:
        t0 = arrivals[-1].arrival_us

    while slot <= last_slot or i < len(arrivals):
        t_tick = t0 + slot * frame_us
        if slot <= last_slot and (i >= len(arrivals) or t_tick <= arrivals[i].arrival_us):
            tick(t_tick)
            if pending is not None:
                classify_arrival(pending)
                pending = None
        else:
            p = arrivals[i]
            i += 1
            events.append(BufferEvent(p.arrival_us, ARRIVE, p.seq))
            classify_arrival(p)

    counts = {kind: 0 for kind in EVENT_KINDS}
    for e in events:
        counts[e.kind] += 1
    return SimulationResult(
        buffer_ms=config.size_ms,
        events=tuple(events),
        disposition=disposition,
        counts=counts,
        playout_start_us=t0,
        seq_index=seq_index,
    )


def disposition_summary(result: SimulationResult) -> DispositionSummary:
    """Collapse a simulation into totals. total_loss_fraction is the loss
    probability fed to the quality model and to the drop-based channel math."""
    sent = len(result.disposition)
    d1 = result.counts[D1]
    d2 = result.counts[D2]
    phys = result.counts[PHY_LOST]
    return DispositionSummary(
        sent=sent,
        played=result.counts[PLAY],
        d1=d1,
        d2=d2,
        phys_lost=phys,
        u=result.counts[U],
        r=result.counts[R],
        total_loss_fraction=(d1 + d2 + phys) / sent if sent else 0.0,
    )


def render_event_log(result: SimulationResult, buffer_ms: int) -> str:
    """Render drop/concealment events as one line each:

        <t_ms> [<stream_idx>, seq <seq>], <buffer_ms>: <KIND>

    stream_idx is the 1-based index of the packet in the sent stream (0 for
    sequence numbers that were never transmitted). The third numeric field is
    the buffer size in ms. Output is byte-deterministic.
    """
    lines = []
    for e in result.events:
        if e.kind in (D1, D2, U, R):
            idx = result.seq_index.get(e.seq, 0)
            lines.append(f"{e.t_us // 1000} [{idx}, seq {e.seq}], {buffer_ms}: {e.kind}")
    return "".join(line + "\n" for line in lines)


def table_parameters(sizes_ms: Iterable[int], frame_ms: int = 20) -> list[tuple[int, int]]:
    """(initially buffered, playback trigger) per buffer size."""
    out = []
    for size in sizes_ms:
        cfg = JitterBufferConfig(size_ms=size, frame_ms=frame_ms)
        out.append((cfg.initial_buffered, cfg.playback_trigger))
    return out
