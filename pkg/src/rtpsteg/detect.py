"""Steganalysis of RTP traces: reordering, inter-arrival regularity, and
anomalous jitter-buffer drop counts.

Reordering never occurs naturally (the network model is FIFO), so any
descending seq pair in arrival order is a hard indicator. Rate and delay
channels quantize inter-arrival gaps into a few sharp histogram bins, which
an entropy score picks up. Drop-count anomalies are scored as z-values
against a per-deployment baseline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .jitterbuf import DispositionSummary
from .rtp import CallTrace, inter_arrival_deltas

DEFAULT_BIN_US = 1000
DEFAULT_Z_THRESHOLD = 2.0
# engineering default; measured innocent traces score well below this and
# two-rate channels well above
DEFAULT_REGULARITY_THRESHOLD = 0.5

MIN_PACKETS_FOR_REGULARITY = 10


@dataclass(frozen=True)
class LossBaseline:
    """Expected drop counts for one deployment (per call, 100 ms buffer)."""

    d1_mean: float = 300.0
    d1_std: float = 1490.0
    d2_mean: float = 750.0
    d2_std: float = 1882.0
    phys_mean: float = 100.0

    def __post_init__(self) -> None:
        if self.d1_std <= 0 or self.d2_std <= 0:
            raise ValueError("baseline standard deviations must be positive")


@dataclass(frozen=True)
class DetectionReport:
    reorder_count: int
    regularity_score: float
    loss_z_score: float | None
    flags: dict[str, bool] = field(default_factory=dict)


def detect_reordering(trace: CallTrace) -> tuple[int, bool]:
    """Count adjacent arrival-order pairs with descending seq."""
    got = trace.arrived()
    count = sum(1 for a, b in zip(got, got[1:]) if b.seq < a.seq)
    return count, count > 0


def detect_rate_regularity(trace: CallTrace, bin_us: int = DEFAULT_BIN_US) -> float:
    """Score 1 - H/Hmax of the inter-arrival histogram over its occupied range.

    Near 1 means deltas concentrate in a few bins (quantized gaps, suspicious);
    near 0 means they spread over the whole range. A single occupied bin
    scores 1.0.
    """
    if bin_us <= 0:
        raise ValueError(f"bin_us must be positive, got {bin_us}")
    got = trace.arrived()
    if len(got) < MIN_PACKETS_FOR_REGULARITY:
        raise ValueError(
            f"need at least {MIN_PACKETS_FOR_REGULARITY} arrived packets, have {len(got)}"
        )
    deltas = inter_arrival_deltas(trace)
    bins = [d // bin_us for d in deltas]
    span = max(bins) - min(bins) + 1
    if span == 1:
        return 1.0
    counts: dict[int, int] = {}
    for b in bins:
        counts[b] = counts.get(b, 0) + 1
    total = len(bins)
    entropy = -sum((c / total) * math.log2(c / total) for c in counts.values())
    return 1.0 - entropy / math.log2(span)


def detect_loss_anomaly(
    summary: DispositionSummary,
    baseline: LossBaseline = LossBaseline(),
    threshold: float = DEFAULT_Z_THRESHOLD,
) -> tuple[float, bool]:
    """Largest signed z-score of the observed D1/D2 counts against baseline."""
    z = max(
        (summary.d1 - baseline.d1_mean) / baseline.d1_std,
        (summary.d2 - baseline.d2_mean) / baseline.d2_std,
    )
    return z, z > threshold


def build_report(
    trace: CallTrace,
    summary: DispositionSummary | None = None,
    baseline: LossBaseline = LossBaseline(),
    bin_us: int = DEFAULT_BIN_US,
    regularity_threshold: float = DEFAULT_REGULARITY_THRESHOLD,
    z_threshold: float = DEFAULT_Z_THRESHOLD,
) -> DetectionReport:
    """Run all applicable detectors over one call."""
    reorder_count, reorder_flag = detect_reordering(trace)
    regularity = detect_rate_regularity(trace, bin_us)
    flags = {
        "reordering": reorder_flag,
        "rate_regularity": regularity > regularity_threshold,
    }
    loss_z = None
    if summary is not None:
        loss_z, loss_flag = detect_loss_anomaly(summary, baseline, z_threshold)
        flags["loss_anomaly"] = loss_flag
    return DetectionReport(
        reorder_count=reorder_count,
        regularity_score=regularity,
        loss_z_score=loss_z,
        flags=flags,
    )
