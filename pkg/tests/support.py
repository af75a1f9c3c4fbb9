"""Shared helpers for building small traces by hand."""

from rtpsteg.rtp import CallTrace, CodecProfile, RtpPacket

TINY = CodecProfile(frame_ms=20, payload_bytes=4, bitrate_bps=1600)


def trace_from_rows(rows, profile=TINY, duration_s=None):
    """rows: iterable of (seq, send_us, arrival_us or None)."""
    pad = bytes(profile.payload_bytes)
    packets = [RtpPacket(seq, send, arr, pad) for seq, send, arr in rows]
    if duration_s is None:
        last = packets[-1].send_us if packets else 0
        duration_s = max(1, (last + profile.frame_us + 999_999) // 1_000_000)
    return CallTrace(profile=profile, packets=tuple(packets), duration_s=duration_s)


def ideal_trace(n, profile=TINY, base_seq=0, base_delay_us=50_000, lost=()):
    """n packets, arrival = send + base_delay, except seqs in `lost`."""
    frame = profile.frame_us
    rows = [
        (
            base_seq + k,
            k * frame,
            None if base_seq + k in lost else k * frame + base_delay_us,
        )
        for k in range(n)
    ]
    return trace_from_rows(rows, profile)
