"""Workbench for covert channels in RTP voice streams.

Simulates RTP streams through impaired networks and fixed jitter buffers,
scores call quality with the simplified E-model, embeds and extracts five
timing/loss covert channels, and detects their footprints.
"""

from .channels import (
    CapacityError,
    ChannelConfig,
    DelayChannel,
    LackChannel,
    PhantomLossChannel,
    RateChannel,
    ReorderChannel,
    Steganogram,
    channel_capacity_bits,
    embed,
    extract,
    steg_bandwidth,
)
from .detect import (
    DetectionReport,
    LossBaseline,
    build_report,
    detect_loss_anomaly,
    detect_rate_regularity,
    detect_reordering,
)
from .emodel import (
    QualityInputs,
    QualityReport,
    assess_call,
    delay_impairment,
    heaviside,
    loss_impairment,
    mos_from_r,
    mouth_to_ear_ms,
    r_factor,
)
from .impair import ImpairmentConfig, apply_impairments
from .jitterbuf import (
    BufferEvent,
    DispositionSummary,
    JitterBufferConfig,
    SimulationResult,
    disposition_summary,
    render_event_log,
    simulate_buffer,
)
from .rtp import G711, CallTrace, CodecProfile, RtpPacket, inter_arrival_deltas, synth_stream
from .traceio import (
    compute_cdf,
    delay_threshold_stats,
    loss_breakdown,
    parse_trace,
    write_trace,
)

__version__ = "0.1.0"
