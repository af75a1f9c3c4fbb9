import pytest
from hypothesis import given, strategies as st

from rtpsteg.channels import RateChannel, ReorderChannel, Steganogram, channel_capacity_bits, embed
from rtpsteg.detect import (
    LossBaseline,
    build_report,
    detect_loss_anomaly,
    detect_rate_regularity,
    detect_reordering,
)
from rtpsteg.impair import ImpairmentConfig, apply_impairments
from rtpsteg.jitterbuf import DispositionSummary
from rtpsteg.rtp import G711, synth_stream
from support import TINY, trace_from_rows


def summary(d1=0, d2=0, sent=27_000, phys=0):
    played = sent - d1 - d2 - phys
    return DispositionSummary(
        sent=sent, played=played, d1=d1, d2=d2, phys_lost=phys,
        u=d2 + phys, r=d1, total_loss_fraction=(d1 + d2 + phys) / sent,
    )


class TestReorderDetector:
    def test_impaired_traffic_never_flags(self):
        base = synth_stream(TINY, 4)
        for seed in range(30):
            cfg = ImpairmentConfig(
                base_delay_us=40_000,
                jitter_us=15_000,
                spike_rate_per_min=5.0,
                spike_magnitude_us=100_000,
                start_burst_len=6,
                phys_loss_prob=0.03,
                seed=seed,
            )
            rx = apply_impairments(base, cfg)
            count, flag = detect_reordering(rx)
            assert count == 0 and not flag

    def test_active_pair_channel_always_flags(self):
        t = synth_stream(TINY, 2)
        channel = ReorderChannel(2)
        emb = embed(channel, t, Steganogram((1,)))
        rx = apply_impairments(emb, ImpairmentConfig(base_delay_us=40_000, seed=0))
        count, flag = detect_reordering(rx)
        assert count >= 1 and flag

    def test_single_packet_trace(self):
        count, flag = detect_reordering(trace_from_rows([(0, 0, 1_000)]))
        assert count == 0 and not flag


class TestRegularityDetector:
    def test_identical_deltas_score_one(self):
        t = trace_from_rows([(k, k * 20_000, k * 20_000 + 40_000) for k in range(12)])
        assert detect_rate_regularity(t) == 1.0

    def test_rate_channel_regression_value(self):
        t = synth_stream(G711, 60)
        channel = RateChannel(h=2, interval_s=1.0, delta_us=10_000)
        msg = Steganogram.random(channel_capacity_bits(channel, t), seed=101)
        rx = apply_impairments(
            embed(channel, t, msg), ImpairmentConfig(base_delay_us=50_000, seed=0)
        )
        assert detect_rate_regularity(rx) == pytest.approx(0.7146743599654162, abs=1e-12)

    def test_innocent_jitter_scores_lower_than_rate_channel(self):
        t = synth_stream(G711, 60)
        channel = RateChannel(h=2, interval_s=1.0, delta_us=10_000)
        msg = Steganogram.random(channel_capacity_bits(channel, t), seed=101)
        steg_rx = apply_impairments(
            embed(channel, t, msg), ImpairmentConfig(base_delay_us=50_000, seed=0)
        )
        innocent_rx = apply_impairments(
            t, ImpairmentConfig(base_delay_us=50_000, jitter_us=10_000, seed=0)
        )
        innocent = detect_rate_regularity(innocent_rx)
        assert innocent == pytest.approx(0.159549901408782, abs=1e-12)
        assert innocent < detect_rate_regularity(steg_rx)

    def test_too_few_packets_rejected(self):
        t = trace_from_rows([(k, k * 20_000, k * 20_000 + 1_000) for k in range(9)])
        with pytest.raises(ValueError):
            detect_rate_regularity(t)

    @given(shift=st.integers(min_value=0, max_value=10**7), seed=st.integers(0, 1000))
    def test_invariant_under_constant_shift(self, shift, seed):
        t = synth_stream(TINY, 2)
        rx = apply_impairments(t, ImpairmentConfig(base_delay_us=30_000, jitter_us=9_000, seed=seed))
        shifted = rx.with_packets(
            p if p.arrival_us is None else
            type(p)(p.seq, p.send_us, p.arrival_us + shift, p.payload)
            for p in rx.packets
        )
        assert detect_rate_regularity(shifted) == detect_rate_regularity(rx)


class TestLossAnomalyDetector:
    def test_zero_at_baseline_means(self):
        z, flag = detect_loss_anomaly(summary(d1=300, d2=750))
        assert z == 0.0 and not flag

    def test_threshold_boundary(self):
        z, flag = detect_loss_anomaly(summary(d1=300, d2=750 + 2 * 1882))
        assert z == pytest.approx(2.0) and not flag  # strictly-above threshold
        z, flag = detect_loss_anomaly(summary(d1=300, d2=750 + 2 * 1882 + 1))
        assert flag

    def test_lack_scale_drops_stay_unflagged(self):
        # 150 extra late drops against sigma 1882 is z ~= 0.08
        z, flag = detect_loss_anomaly(summary(d1=300, d2=900))
        assert z == pytest.approx(150 / 1882, abs=1e-12)
        assert not flag

    def test_below_baseline_is_negative_not_flagged(self):
        z, flag = detect_loss_anomaly(summary(d1=0, d2=0))
        assert z < 0 and not flag

    def test_zero_std_rejected(self):
        with pytest.raises(ValueError):
            LossBaseline(d1_std=0.0)


class TestReportBuilder:
    def test_report_without_summary_has_no_loss_score(self):
        rx = apply_impairments(
            synth_stream(TINY, 2), ImpairmentConfig(base_delay_us=30_000, jitter_us=5_000, seed=2)
        )
        report = build_report(rx)
        assert report.loss_z_score is None
        assert set(report.flags) == {"reordering", "rate_regularity"}

    def test_report_with_summary(self):
        rx = apply_impairments(
            synth_stream(TINY, 2), ImpairmentConfig(base_delay_us=30_000, jitter_us=5_000, seed=2)
        )
        report = build_report(rx, summary(d1=300, d2=750))
        assert report.loss_z_score == 0.0
        assert report.flags["loss_anomaly"] is False
        assert report.reorder_count == 0
