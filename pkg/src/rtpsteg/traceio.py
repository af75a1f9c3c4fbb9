"""Trace serialization and the statistical summaries behind corpus plots.

Trace file grammar (CSV):

    # seq=extended            optional, "raw" switches on 16-bit unwrapping
    # profile=20,160,64000    frame_ms,payload_bytes,bitrate_bps
    # duration_s=540
    seq,send_us,arrival_us,payload_hex,phys_lost
    0,0,50000,,0
    ...

arrival_us is empty for packets that never arrived; phys_lost=1 marks them
explicitly on received traces (a fully unsent stream has all arrivals empty
and phys_lost=0). payload_hex empty means an all-zero payload.
"""

from __future__ import annotations

import io
import csv
from bisect import bisect_right
from dataclasses import dataclass

from .jitterbuf import DispositionSummary, SimulationResult, disposition_summary
from .rtp import CallTrace, CodecProfile, G711, RtpPacket

CSV_HEADER = ["seq", "send_us", "arrival_us", "payload_hex", "phys_lost"]
SEQ_MODES = ("extended", "raw")
DEFAULT_THRESHOLDS_MS = (20, 40, 60, 80, 100)

_WRAP = 1 << 16
_HALF_WRAP = 1 << 15


class TraceFormatError(ValueError):
    """Malformed trace file."""


def write_trace(trace: CallTrace) -> str:
    """Canonical, byte-deterministic CSV for a trace. Round-trips with
    parse_trace."""
    p = trace.profile
    zero = bytes(p.payload_bytes)
    received = trace.has_arrivals
    out = io.StringIO()
    out.write("# seq=extended\n")
    out.write(f"# profile={p.frame_ms},{p.payload_bytes},{p.bitrate_bps}\n")
    out.write(f"# duration_s={trace.duration_s}\n")
    out.write(",".join(CSV_HEADER) + "\n")
    for pkt in trace.packets:
        arrival = "" if pkt.arrival_us is None else str(pkt.arrival_us)
        payload = "" if pkt.payload == zero else pkt.payload.hex()
        lost = "1" if received and pkt.arrival_us is None else "0"
        out.write(f"{pkt.seq},{pkt.send_us},{arrival},{payload},{lost}\n")
    return out.getvalue()


def _unwrap_raw_seqs(raw_seqs: list[int]) -> list[int]:
    for r in raw_seqs:
        if not 0 <= r < _WRAP:
            raise TraceFormatError(f"raw seq {r} outside 16-bit range")
    if not raw_seqs:
        return []
    ext = [raw_seqs[0]]
    prev_raw = raw_seqs[0]
    for r in raw_seqs[1:]:
        if r > prev_raw:
            ext.append(ext[-1] + (r - prev_raw))
        elif prev_raw - r > _HALF_WRAP:
            ext.append(ext[-1] + (r + _WRAP - prev_raw))
        else:
            raise TraceFormatError(f"non-monotonic seq {r} after {prev_raw}")
        prev_raw = r
    return ext


def parse_trace(text: str, default_profile: CodecProfile = G711) -> CallTrace:
    """Parse the trace CSV grammar above into a CallTrace."""
    seq_mode = "extended"
    profile = default_profile
    duration_s: int | None = None
    rows: list[list[str]] = []
    header_seen = False
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" not in body:
                raise TraceFormatError(f"line {lineno}: malformed comment {line!r}")
            key, _, value = body.partition("=")
            key, value = key.strip(), value.strip()
            if key == "seq":
                if value not in SEQ_MODES:
                    raise TraceFormatError(f"line {lineno}: unknown seq mode {value!r}")
                seq_mode = value
            elif key == "profile":
                try:
                    frame_ms, payload_bytes, bitrate = (int(v) for v in value.split(","))
                except ValueError as exc:
                    raise TraceFormatError(f"line {lineno}: bad profile {value!r}") from exc
                profile = CodecProfile(frame_ms, payload_bytes, bitrate)
            elif key == "duration_s":
                duration_s = int(value)
            else:
                raise TraceFormatError(f"line {lineno}: unknown comment key {key!r}")
            continue
        if not header_seen:
            if [c.strip() for c in line.split(",")] != CSV_HEADER:
                raise TraceFormatError(f"line {lineno}: expected header {CSV_HEADER}")
            header_seen = True
            continue
        row = next(csv.reader([line]))
        if len(row) != len(CSV_HEADER):
            raise TraceFormatError(f"line {lineno}: expected {len(CSV_HEADER)} fields")
        rows.append(row)
    if not header_seen:
        raise TraceFormatError("missing header line")

    zero = bytes(profile.payload_bytes)
    seqs: list[int] = []
    parsed: list[tuple[int, int | None, bytes, bool]] = []
    for row in rows:
        try:
            seq = int(row[0])
            send_us = int(row[1])
            arrival_us = int(row[2]) if row[2] != "" else None
            lost = {"0": False, "1": True}[row[4]]
        except (ValueError, KeyError) as exc:
            raise TraceFormatError(f"malformed row {row!r}") from exc
        if lost and arrival_us is not None:
            raise TraceFormatError(f"seq {seq}: marked lost but has an arrival time")
        payload = bytes.fromhex(row[3]) if row[3] else zero
        seqs.append(seq)
        parsed.append((send_us, arrival_us, payload, lost))

    if seq_mode == "raw":
        seqs = _unwrap_raw_seqs(seqs)
    for a, b in zip(seqs, seqs[1:]):
        if b <= a:
            raise TraceFormatError(f"non-monotonic extended seq {b} after {a}")

    packets = []
    for seq, (send_us, arrival_us, payload, _lost) in zip(seqs, parsed):
        try:
            packets.append(RtpPacket(seq, send_us, arrival_us, payload))
        except ValueError as exc:
            raise TraceFormatError(str(exc)) from exc
    if duration_s is None:
        last_send = packets[-1].send_us if packets else 0
        duration_s = max(1, -(-(last_send + profile.frame_us) // 1_000_000))
    try:
        return CallTrace(profile=profile, packets=tuple(packets), duration_s=duration_s)
    except ValueError as exc:
        raise TraceFormatError(str(exc)) from exc


# ---------------------------------------------------------------------------
# per-call and corpus statistics


def delay_threshold_stats(
    trace: CallTrace, thresholds_ms=DEFAULT_THRESHOLDS_MS
) -> dict[int, float]:
    """Fraction of arrived packets whose relative delay exceeds each threshold.

    Relative delay is measured against the first arrived packet, so a
    constant network transit contributes nothing.
    """
    got = trace.arrived()
    if len(got) < 2:
        raise ValueError(f"need at least 2 arrived packets, have {len(got)}")
    first = got[0]
    rel = [
        (p.arrival_us - first.arrival_us) - (p.send_us - first.send_us) for p in got
    ]
    return {
        thr: sum(1 for d in rel if d > thr * 1000) / len(rel) for thr in thresholds_ms
    }


def compute_cdf(values, grid) -> list[float]:
    """Empirical CDF of values evaluated at each grid point."""
    data = sorted(values)
    if not data:
        raise ValueError("empty input")
    n = len(data)
    return [bisect_right(data, g) / n for g in grid]


@dataclass(frozen=True)
class LossBreakdown:
    per_call: list[dict]
    aggregate: dict
    dominance: dict[int, str]


def loss_breakdown(results: list[SimulationResult]) -> LossBreakdown:
    """Physical-vs-buffer loss decomposition over a corpus of simulations,
    with a per-buffer-size call on which drop type dominates."""
    if not results:
        raise ValueError("need at least one simulation result")
    per_call = []
    totals = {"sent": 0, "played": 0, "d1": 0, "d2": 0, "phys_lost": 0}
    by_size: dict[int, dict[str, int]] = {}
    for res in results:
        s = disposition_summary(res)
        per_call.append(
            {
                "buffer_ms": res.buffer_ms,
                "sent": s.sent,
                "played": s.played,
                "d1": s.d1,
                "d2": s.d2,
                "phys_lost": s.phys_lost,
                "phys_frac": s.phys_lost / s.sent if s.sent else 0.0,
                "d1_frac": s.d1 / s.sent if s.sent else 0.0,
                "d2_frac": s.d2 / s.sent if s.sent else 0.0,
                "total_loss_frac": s.total_loss_fraction,
            }
        )
        totals["sent"] += s.sent
        totals["played"] += s.played
        totals["d1"] += s.d1
        totals["d2"] += s.d2
        totals["phys_lost"] += s.phys_lost
        size = by_size.setdefault(res.buffer_ms, {"d1": 0, "d2": 0})
        size["d1"] += s.d1
        size["d2"] += s.d2
    sent = totals["sent"]
    aggregate = dict(totals)
    aggregate["phys_frac"] = totals["phys_lost"] / sent if sent else 0.0
    aggregate["d1_frac"] = totals["d1"] / sent if sent else 0.0
    aggregate["d2_frac"] = totals["d2"] / sent if sent else 0.0
    aggregate["total_loss_frac"] = (
        (totals["d1"] + totals["d2"] + totals["phys_lost"]) / sent if sent else 0.0
    )
    dominance = {}
    for size, c in sorted(by_size.items()):
        if c["d1"] > c["d2"]:
            dominance[size] = "D1-dominant"
        elif c["d2"] > c["d1"]:
            dominance[size] = "D2-dominant"
        else:
            dominance[size] = "balanced"
    return LossBreakdown(per_call=per_call, aggregate=aggregate, dominance=dominance)


def call_record(
    trace: CallTrace,
    summary: DispositionSummary,
    mos: float | None = None,
    thresholds_ms=DEFAULT_THRESHOLDS_MS,
) -> dict:
    """One per-call stats row: quality, loss fractions, delayed fractions."""
    delayed = delay_threshold_stats(trace, thresholds_ms)
    row = {
        "mos": mos,
        "total_loss_frac": summary.total_loss_fraction,
        "phys_loss_frac": summary.phys_lost / summary.sent if summary.sent else 0.0,
        "d1": summary.d1,
        "d2": summary.d2,
    }
    for thr in thresholds_ms:
        row[f"delayed_frac_at_{thr}ms"] = delayed[thr]
    return row
