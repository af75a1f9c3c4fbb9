import pytest
from hypothesis import given, strategies as st

from rtpsteg.impair import BURST_SPACING_US, ImpairmentConfig, apply_impairments
from rtpsteg.rtp import G711, synth_stream
from support import TINY


def lost_count(trace):
    return sum(1 for p in trace.packets if p.arrival_us is None)


class TestConfig:
    def test_probability_range(self):
        with pytest.raises(ValueError):
            ImpairmentConfig(phys_loss_prob=1.5)
        with pytest.raises(ValueError):
            ImpairmentConfig(phys_loss_prob=-0.1)

    def test_negative_delays_rejected(self):
        with pytest.raises(ValueError):
            ImpairmentConfig(base_delay_us=-1)
        with pytest.raises(ValueError):
            ImpairmentConfig(jitter_us=-5)


class TestDeterministicShift:
    def test_zeroed_impairments_are_a_constant_shift(self):
        t = synth_stream(TINY, 4)
        rx = apply_impairments(t, ImpairmentConfig(base_delay_us=80_000, seed=9))
        assert all(p.arrival_us == p.send_us + 80_000 for p in rx.packets)
        assert [p.seq for p in rx.packets] == [p.seq for p in t.packets]
        assert all(a.payload == b.payload for a, b in zip(t.packets, rx.packets))

    def test_double_impairment_rejected(self):
        t = synth_stream(TINY, 2)
        rx = apply_impairments(t, ImpairmentConfig())
        with pytest.raises(ValueError):
            apply_impairments(rx, ImpairmentConfig())

    def test_same_seed_same_output(self):
        t = synth_stream(TINY, 30)
        cfg = ImpairmentConfig(
            base_delay_us=40_000,
            jitter_us=7_000,
            spike_rate_per_min=3.0,
            spike_magnitude_us=90_000,
            phys_loss_prob=0.03,
            seed=77,
        )
        assert apply_impairments(t, cfg) == apply_impairments(t, cfg)

    def test_different_seed_differs(self):
        t = synth_stream(TINY, 30)
        a = apply_impairments(t, ImpairmentConfig(jitter_us=7_000, seed=1))
        b = apply_impairments(t, ImpairmentConfig(jitter_us=7_000, seed=2))
        assert a != b


class TestPhysicalLoss:
    def test_binomial_bounds_over_nine_minutes(self):
        # 27000 draws at p=0.005: mean 135, sigma ~11.6, [90, 180] is ~4 sigma
        t = synth_stream(G711, 540)
        for seed in (0, 1, 2):
            rx = apply_impairments(t, ImpairmentConfig(phys_loss_prob=0.005, seed=seed))
            assert 90 <= lost_count(rx) <= 180

    def test_fixed_seed_regression_count(self):
        t = synth_stream(G711, 540)
        rx = apply_impairments(
            t, ImpairmentConfig(base_delay_us=50_000, phys_loss_prob=0.005, seed=1234)
        )
        assert lost_count(rx) == 120

    def test_loss_marking_keeps_send_and_payload(self):
        t = synth_stream(TINY, 10)
        rx = apply_impairments(t, ImpairmentConfig(phys_loss_prob=0.5, seed=3))
        assert lost_count(rx) > 0
        for before, after in zip(t.packets, rx.packets):
            assert after.send_us == before.send_us
            assert after.payload == before.payload
            assert after.seq == before.seq


class TestStartBurst:
    def test_burst_arrivals_within_one_ms(self):
        t = synth_stream(G711, 2)
        rx = apply_impairments(
            t, ImpairmentConfig(base_delay_us=50_000, start_burst_len=10, seed=0)
        )
        burst = [p.arrival_us for p in rx.packets[:10]]
        assert max(burst) - min(burst) == 9 * BURST_SPACING_US < 1000
        # released when the last burst member was sent, never before its own send
        assert burst[0] == t.packets[9].send_us + 50_000
        assert all(p.arrival_us >= p.send_us for p in rx.packets)

    def test_burst_of_one_degenerates_to_base_delay(self):
        t = synth_stream(TINY, 1)
        rx = apply_impairments(
            t, ImpairmentConfig(base_delay_us=30_000, start_burst_len=1, seed=0)
        )
        assert rx.packets[0].arrival_us == 30_000


class TestFifo:
    @given(st.integers(min_value=0, max_value=2**32))
    def test_never_reorders(self, seed):
        t = synth_stream(TINY, 6)
        cfg = ImpairmentConfig(
            base_delay_us=20_000,
            jitter_us=25_000,
            spike_rate_per_min=20.0,
            spike_magnitude_us=100_000,
            start_burst_len=5,
            phys_loss_prob=0.1,
            seed=seed,
        )
        rx = apply_impairments(t, cfg)
        arrivals = [p.arrival_us for p in rx.packets if p.arrival_us is not None]
        assert arrivals == sorted(arrivals)
        assert all(p.arrival_us >= p.send_us for p in rx.packets if p.arrival_us is not None)

    def test_spike_queues_following_packets(self):
        t = synth_stream(TINY, 4)
        # this seed fires an isolated 500 ms spike; the decay outpaces the
        # 20 ms frame so the FIFO clamp piles followers onto the spiked packet
        cfg = ImpairmentConfig(
            base_delay_us=10_000,
            spike_rate_per_min=30.0,
            spike_magnitude_us=500_000,
            seed=0,
        )
        rx = apply_impairments(t, cfg)
        arrivals = [p.arrival_us for p in rx.packets]
        assert arrivals == sorted(arrivals)
        equal_adjacent = sum(1 for a, b in zip(arrivals, arrivals[1:]) if a == b)
        assert equal_adjacent == 25
