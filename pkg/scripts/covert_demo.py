#!/usr/bin/env python3
"""Exercise all five covert channels end to end and face the detectors.

For each channel: theoretical bandwidth over a nine-minute G.711 call,
an at-capacity embed on a shorter call, extraction over a clean and a lossy
network, and the detector verdicts on the steg trace. Finishes with the
drop-count z-score story for lack-style intentional drops.

    python scripts/covert_demo.py --seed 7
"""

import argparse
import random
import sys

from rtpsteg.channels import (
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
from rtpsteg.detect import LossBaseline, detect_loss_anomaly, detect_rate_regularity, detect_reordering
from rtpsteg.impair import ImpairmentConfig, apply_impairments
from rtpsteg.jitterbuf import JitterBufferConfig, disposition_summary, simulate_buffer
from rtpsteg.rtp import G711, synth_stream

CHANNELS = {
    "reorder": ReorderChannel(10),
    "rate": RateChannel(h=2, interval_s=1.0, delta_us=10_000),
    "delay": DelayChannel(delta0_us=15_000, delta1_us=25_000),
    "phantom": PhantomLossChannel(period_s=5.0),
    "lack": LackChannel(loss_prob=0.01, delay_us=300_000, target_buffer_ms=100),
}


def bit_agreement(sent: Steganogram, got: Steganogram) -> float:
    if not sent.bits:
        return 1.0
    pairs = list(zip(sent.bits, got.bits))
    return sum(1 for a, b in pairs if a == b) / len(sent.bits)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--duration", type=int, default=60, help="embed call length, seconds")
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args(argv)

    rng = random.Random(args.seed)
    sent = synth_stream(G711, args.duration)
    clean = ImpairmentConfig(base_delay_us=50_000, seed=args.seed)
    lossy = ImpairmentConfig(
        base_delay_us=50_000, jitter_us=3_000, phys_loss_prob=0.0037, seed=args.seed
    )
    buffer_cfg = JitterBufferConfig(100)

    print(f"{'channel':<9} {'bits/s @540s':>12} {'capacity':>9} "
          f"{'clean ok':>9} {'lossy agree':>11} {'reorder':>8} "
          f"{'reg(calm)':>9} {'reg(jit)':>8}")
    innocent_rx = apply_impairments(sent, lossy)
    print(
        f"{'(none)':<9} {'-':>12} {'-':>9} {'-':>9} {'-':>11} "
        f"{'no' if not detect_reordering(innocent_rx)[1] else 'YES':>8} "
        f"{'-':>9} {detect_rate_regularity(innocent_rx):>8.3f}"
    )
    for name, channel in CHANNELS.items():
        bandwidth = steg_bandwidth(channel, 540, G711)
        capacity = channel_capacity_bits(channel, sent)
        message = Steganogram(tuple(rng.getrandbits(1) for _ in range(capacity)))
        steg = embed(channel, sent, message)

        clean_rx = apply_impairments(steg, clean)
        clean_ok = extract(channel, clean_rx, buffer_cfg) == message

        lossy_rx = apply_impairments(steg, lossy)
        agreement = bit_agreement(message, extract(channel, lossy_rx, buffer_cfg))

        reorder_count, reorder_flag = detect_reordering(lossy_rx)
        print(
            f"{name:<9} {bandwidth:>12.3f} {capacity:>9} "
            f"{str(clean_ok):>9} {agreement:>11.3f} "
            f"{('YES(' + str(reorder_count) + ')') if reorder_flag else 'no':>8} "
            f"{detect_rate_regularity(clean_rx):>9.3f} "
            f"{detect_rate_regularity(lossy_rx):>8.3f}"
        )
    print("  reg(...) = inter-arrival regularity on a calm vs jittered capture;")
    print("  quantized sender gaps stand out on calm paths, mild jitter masks them")

    print()
    print("drop-count anomaly view (z against the 100 ms deployment baseline):")
    baseline = LossBaseline()
    lack = CHANNELS["lack"]
    steg = embed(lack, sent, Steganogram((1,) * channel_capacity_bits(lack, sent)))
    for label, trace in (("innocent", sent), ("lack", steg)):
        rx = apply_impairments(trace, lossy)
        summary = disposition_summary(simulate_buffer(rx, buffer_cfg))
        z, flag = detect_loss_anomaly(summary, baseline)
        print(
            f"  {label:<9} d1={summary.d1:<5} d2={summary.d2:<5} "
            f"z={z:+.3f} flagged={flag}"
        )
    print("  (intentional drops on the scale of one call vanish inside the")
    print("   baseline's standard deviation, which is what makes lack hard to spot)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
