#!/usr/bin/env python3
"""Sweep jitter-buffer sizes over a seeded synthetic call corpus.

Generates N impaired calls, plays each through every buffer size, scores
quality, and writes the corpus tables: per-call summary and quality rows,
MOS / loss CDFs per buffer size, and the D1-vs-D2 dominance split. With
--plot (needs matplotlib) it also draws the CDF families.

    python scripts/buffer_sweep.py --calls 100 --duration 60 --out sweep/
"""

import argparse
import random
import sys
from pathlib import Path

from rtpsteg.cli import QUALITY_HEADER, SUMMARY_HEADER, write_table
from rtpsteg.emodel import QualityInputs, assess_call, mouth_to_ear_ms
from rtpsteg.impair import ImpairmentConfig, apply_impairments
from rtpsteg.jitterbuf import JitterBufferConfig, disposition_summary, simulate_buffer
from rtpsteg.rtp import G711, synth_stream
from rtpsteg.traceio import compute_cdf

SIZES = (20, 40, 60, 80, 100, 120)


def draw_network(rng: random.Random, base_delay_us: int) -> ImpairmentConfig:
    """One synthetic network condition: mixed jitter, occasional spikes,
    sometimes a start-of-call burst, light physical loss."""
    return ImpairmentConfig(
        base_delay_us=base_delay_us,
        jitter_us=rng.choice((0, 2_000, 5_000, 10_000, 25_000)),
        spike_rate_per_min=rng.choice((0.0, 0.0, 2.0, 6.0)),
        spike_magnitude_us=rng.choice((80_000, 150_000)),
        start_burst_len=rng.choice((0, 0, 0, 10, 25)),
        phys_loss_prob=rng.choice((0.0, 0.001, 0.0037, 0.01)),
        seed=rng.getrandbits(48),
    )


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--calls", type=int, default=100)
    ap.add_argument("--duration", type=int, default=60, help="seconds per call")
    ap.add_argument("--base-delay-ms", type=int, default=50)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--out", type=Path, default=Path("sweep"))
    ap.add_argument("--plot", action="store_true", help="draw CDF plots (matplotlib)")
    args = ap.parse_args(argv)

    rng = random.Random(args.seed)
    sent = synth_stream(G711, args.duration)
    args.out.mkdir(parents=True, exist_ok=True)

    summary_rows, quality_rows = [], []
    mos_by_size = {s: [] for s in SIZES}
    loss_by_size = {s: [] for s in SIZES}
    for call in range(args.calls):
        network = draw_network(rng, args.base_delay_ms * 1000)
        received = apply_impairments(sent, network)
        for size in SIZES:
            buf = JitterBufferConfig(size)
            s = disposition_summary(simulate_buffer(received, buf))
            summary_rows.append(
                dict(
                    call_id=f"call{call:04d}", buffer_ms=size, sent=s.sent, played=s.played,
                    d1=s.d1, d2=s.d2, phys_lost=s.phys_lost, u=s.u, r=s.r,
                    total_loss_fraction=s.total_loss_fraction,
                )
            )
            m2e = mouth_to_ear_ms(network.base_delay_us, buf.initial_buffered, 20)
            rep = assess_call(QualityInputs(m2e, s.total_loss_fraction))
            quality_rows.append(
                dict(
                    call_id=f"call{call:04d}", buffer_ms=size, mouth_to_ear_ms=m2e,
                    loss_fraction=s.total_loss_fraction, id=rep.id, ief=rep.ief,
                    r_raw=rep.r_raw, r=rep.r, mos=rep.mos, pstn_grade=rep.pstn_grade,
                )
            )
            mos_by_size[size].append(rep.mos)
            loss_by_size[size].append(s.total_loss_fraction)

    write_table(args.out / "summary.csv", SUMMARY_HEADER, summary_rows)
    write_table(args.out / "quality.csv", QUALITY_HEADER, quality_rows)

    for size in SIZES:
        grid = sorted(set(mos_by_size[size]))
        write_table(
            args.out / f"cdf_mos_{size}ms.csv",
            ["value", "cum_frac"],
            [
                {"value": g, "cum_frac": f}
                for g, f in zip(grid, compute_cdf(mos_by_size[size], grid))
            ],
        )

    pstn_ok = {
        s: sum(1 for m in mos_by_size[s] if m >= 3.6) / args.calls for s in SIZES
    }
    print(f"{args.calls} calls x {len(SIZES)} buffer sizes -> {args.out}")
    print("fraction of calls at PSTN-comparable quality (MOS >= 3.6):")
    for size in SIZES:
        mean_loss = sum(loss_by_size[size]) / args.calls
        print(f"  {size:>4} ms buffer: {pstn_ok[size]:.2f}   mean loss {mean_loss:.4f}")

    if args.plot:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        fig, ax = plt.subplots(figsize=(7, 4.5))
        for size in SIZES:
            xs = sorted(mos_by_size[size])
            ys = [(i + 1) / len(xs) for i in range(len(xs))]
            ax.step(xs, ys, where="post", label=f"{size} ms")
        ax.set_xlabel("MOS")
        ax.set_ylabel("CDF over calls")
        ax.axvline(3.6, color="gray", ls=":", label="PSTN bar")
        ax.legend()
        fig.tight_layout()
        fig.savefig(args.out / "cdf_mos.png", dpi=150)
        print(f"plot -> {args.out / 'cdf_mos.png'}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
