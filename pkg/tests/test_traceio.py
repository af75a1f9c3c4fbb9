import pytest
from hypothesis import given, strategies as st

from rtpsteg.channels import LackChannel, Steganogram, channel_capacity_bits, embed
from rtpsteg.impair import ImpairmentConfig, apply_impairments
from rtpsteg.jitterbuf import JitterBufferConfig, disposition_summary, simulate_buffer
from rtpsteg.rtp import G711, synth_stream
from rtpsteg.traceio import (
    TraceFormatError,
    call_record,
    compute_cdf,
    delay_threshold_stats,
    loss_breakdown,
    parse_trace,
    write_trace,
)
from support import TINY, ideal_trace, trace_from_rows


class TestRoundTrip:
    def corpus(self):
        sent = synth_stream(TINY, 2)
        lack = LackChannel(0.05, 200_000, schedule_seed=1)
        embedded = embed(lack, sent, Steganogram.random(channel_capacity_bits(lack, sent), 2))
        received = apply_impairments(
            sent, ImpairmentConfig(base_delay_us=40_000, jitter_us=6_000, phys_loss_prob=0.05, seed=3)
        )
        return [sent, embedded, received, ideal_trace(7, lost={2})]

    def test_parse_write_identity_on_canonical_files(self):
        for trace in self.corpus():
            text = write_trace(trace)
            assert write_trace(parse_trace(text)) == text

    def test_write_parse_identity_on_traces(self):
        for trace in self.corpus():
            assert parse_trace(write_trace(trace)) == trace

    def test_empty_trace_writes_header_only(self):
        t = synth_stream(TINY, 1).with_packets(())
        text = write_trace(t)
        assert text.splitlines()[-1] == "seq,send_us,arrival_us,payload_hex,phys_lost"

    def test_two_packet_synthetic(self):
        t = synth_stream(G711, 1).with_packets(synth_stream(G711, 1).packets[:2])
        lines = write_trace(t).splitlines()
        assert lines[-2] == "0,0,,,0"
        assert lines[-1] == "1,20000,,,0"


class TestRawSeqUnwrap:
    def test_wrap_example(self):
        text = (
            "# seq=raw\n# profile=20,4,1600\nseq,send_us,arrival_us,payload_hex,phys_lost\n"
            "65534,0,,,0\n65535,20000,,,0\n0,40000,,,0\n1,60000,,,0\n"
        )
        t = parse_trace(text)
        assert [p.seq for p in t.packets] == [65534, 65535, 65536, 65537]

    def test_small_backstep_is_an_error_not_a_wrap(self):
        text = (
            "# seq=raw\nseq,send_us,arrival_us,payload_hex,phys_lost\n"
            "100,0,,,0\n99,20000,,,0\n"
        )
        with pytest.raises(TraceFormatError):
            parse_trace(text)

    def test_raw_seq_out_of_range(self):
        text = "# seq=raw\nseq,send_us,arrival_us,payload_hex,phys_lost\n70000,0,,,0\n"
        with pytest.raises(TraceFormatError):
            parse_trace(text)


class TestParseErrors:
    HEADER = "seq,send_us,arrival_us,payload_hex,phys_lost\n"

    def test_lost_row_with_arrival_rejected(self):
        with pytest.raises(TraceFormatError):
            parse_trace("# profile=20,4,1600\n" + self.HEADER + "0,0,50000,,1\n")

    def test_non_monotonic_extended_seqs_rejected(self):
        with pytest.raises(TraceFormatError):
            parse_trace("# profile=20,4,1600\n" + self.HEADER + "5,0,,,0\n4,20000,,,0\n")

    def test_malformed_row_rejected(self):
        with pytest.raises(TraceFormatError):
            parse_trace("# profile=20,4,1600\n" + self.HEADER + "abc,0,,,0\n")
        with pytest.raises(TraceFormatError):
            parse_trace("# profile=20,4,1600\n" + self.HEADER + "0,0,,0\n")

    def test_unknown_comment_key_rejected(self):
        with pytest.raises(TraceFormatError):
            parse_trace("# color=blue\n" + self.HEADER)

    def test_missing_header_rejected(self):
        with pytest.raises(TraceFormatError):
            parse_trace("0,0,,,0\n")

    def test_arrival_before_send_rejected(self):
        with pytest.raises(TraceFormatError):
            parse_trace("# profile=20,4,1600\n" + self.HEADER + "0,20000,100,,0\n")


class TestDelayThresholdStats:
    def test_ideal_arrivals_are_never_delayed(self):
        stats = delay_threshold_stats(ideal_trace(40))
        assert stats == {20: 0.0, 40: 0.0, 60: 0.0, 80: 0.0, 100: 0.0}

    def test_one_packet_fifty_ms_late(self):
        rows = [(k, k * 20_000, k * 20_000 + 10_000) for k in range(100)]
        rows[30] = (30, 600_000, 600_000 + 60_000)  # +50 ms relative to the rest
        stats = delay_threshold_stats(trace_from_rows(rows))
        assert stats[20] == pytest.approx(0.01)
        assert stats[40] == pytest.approx(0.01)
        assert stats[60] == stats[80] == stats[100] == 0.0

    def test_any_positive_delay_counts_at_lowest_thresholds(self):
        rows = [(k, k * 20_000, k * 20_000 + 10_000) for k in range(50)]
        rows[10] = (10, 200_000, 200_000 + 10_000 + 20_001)  # just over 20 ms
        stats = delay_threshold_stats(trace_from_rows(rows))
        assert stats[20] > 0.0 and stats[40] == 0.0

    def test_fractions_non_increasing_in_threshold(self):
        rx = apply_impairments(
            synth_stream(TINY, 4),
            ImpairmentConfig(base_delay_us=30_000, jitter_us=25_000, seed=4),
        )
        stats = delay_threshold_stats(rx)
        ordered = [stats[t] for t in (20, 40, 60, 80, 100)]
        assert all(b <= a for a, b in zip(ordered, ordered[1:]))

    def test_needs_two_arrivals(self):
        with pytest.raises(ValueError):
            delay_threshold_stats(trace_from_rows([(0, 0, 100)]))


class TestComputeCdf:
    def test_simple_fraction(self):
        assert compute_cdf([1.0, 2.0, 3.0], [2.0]) == [pytest.approx(2 / 3)]

    def test_grid_outside_data(self):
        assert compute_cdf([1.0, 2.0], [0.0, 5.0]) == [0.0, 1.0]

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            compute_cdf([], [1.0])

    @given(
        values=st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=200),
        grid=st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=20),
    )
    def test_matches_counting_oracle(self, values, grid):
        got = compute_cdf(values, grid)
        expected = [sum(1 for v in values if v <= g) / len(values) for g in grid]
        assert got == expected
        # monotone, bounded
        ordered = compute_cdf(values, sorted(grid))
        assert all(b >= a for a, b in zip(ordered, ordered[1:]))
        assert all(0.0 <= f <= 1.0 for f in got)
        assert compute_cdf(values, [max(values)])[0] == 1.0


class TestLossBreakdown:
    def run_corpus(self, loss=0.0, jitter=0, sizes=(40, 100), seeds=range(3)):
        results = []
        base = synth_stream(TINY, 4)
        for seed in seeds:
            rx = apply_impairments(
                base,
                ImpairmentConfig(
                    base_delay_us=40_000, jitter_us=jitter, phys_loss_prob=loss, seed=seed
                ),
            )
            for size in sizes:
                results.append(simulate_buffer(rx, JitterBufferConfig(size)))
        return results

    def test_clean_corpus_is_all_zero(self):
        breakdown = loss_breakdown(self.run_corpus())
        assert breakdown.aggregate["total_loss_frac"] == 0.0
        assert all(row["total_loss_frac"] == 0.0 for row in breakdown.per_call)

    def test_single_result_passthrough_matches_summary(self):
        res = self.run_corpus(loss=0.05, jitter=8_000, sizes=(40,), seeds=[7])[0]
        breakdown = loss_breakdown([res])
        s = disposition_summary(res)
        row = breakdown.per_call[0]
        assert (row["d1"], row["d2"], row["phys_lost"]) == (s.d1, s.d2, s.phys_lost)
        assert row["total_loss_frac"] == s.total_loss_fraction

    def test_dominance_classification(self):
        results = self.run_corpus(loss=0.02, jitter=30_000, sizes=(20, 120), seeds=range(4))
        breakdown = loss_breakdown(results)
        assert set(breakdown.dominance) == {20, 120}
        for size, cls in breakdown.dominance.items():
            d1 = sum(r["d1"] for r in breakdown.per_call if r["buffer_ms"] == size)
            d2 = sum(r["d2"] for r in breakdown.per_call if r["buffer_ms"] == size)
            expected = "D1-dominant" if d1 > d2 else ("D2-dominant" if d2 > d1 else "balanced")
            assert cls == expected

    def test_two_to_one_late_drops_classified_d2_dominant(self):
        # hand-built corpus with d2 exactly twice d1 per call
        from rtpsteg.jitterbuf import ARRIVE, D1, D2, PHY_LOST, PLAY, PLAYED, R, U, SimulationResult

        def fake(call, d1, d2):
            sent = 100
            disposition = {}
            for s in range(d1):
                disposition[s] = D1
            for s in range(d1, d1 + d2):
                disposition[s] = D2
            for s in range(d1 + d2, sent):
                disposition[s] = PLAYED
            counts = {
                ARRIVE: sent, PLAY: sent - d1 - d2, D1: d1, D2: d2,
                U: d2, R: d1, PHY_LOST: 0,
            }
            return SimulationResult(
                buffer_ms=100, events=(), disposition=disposition, counts=counts,
                playout_start_us=0, seq_index={s: s + 1 for s in range(sent)},
            )

        breakdown = loss_breakdown([fake(0, 5, 10), fake(1, 7, 14)])
        assert breakdown.aggregate["d2"] == 2 * breakdown.aggregate["d1"]
        assert breakdown.dominance[100] == "D2-dominant"

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            loss_breakdown([])


class TestCallRecord:
    def test_row_fields(self):
        rx = apply_impairments(
            synth_stream(TINY, 4),
            ImpairmentConfig(base_delay_us=40_000, jitter_us=12_000, phys_loss_prob=0.02, seed=5),
        )
        res = simulate_buffer(rx, JitterBufferConfig(40))
        s = disposition_summary(res)
        row = call_record(rx, s, mos=4.1)
        assert row["mos"] == 4.1
        assert row["total_loss_frac"] == s.total_loss_fraction
        assert row["phys_loss_frac"] == pytest.approx(s.phys_lost / s.sent)
        assert (row["d1"], row["d2"]) == (s.d1, s.d2)
        delayed = [row[f"delayed_frac_at_{t}ms"] for t in (20, 40, 60, 80, 100)]
        assert all(0.0 <= f <= 1.0 for f in delayed)
        assert all(b <= a for a, b in zip(delayed, delayed[1:]))
