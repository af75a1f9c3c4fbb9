"""Command-line front door: synthesize, embed, impair, buffer-simulate,
score, extract, detect, and aggregate corpus statistics.

Stages hand off through trace CSV files so every step is independently
runnable and corpus runs are resumable. Identical config and seed produce
byte-identical output files. Exit codes: 0 ok, 2 config error, 3 I/O error,
4 capacity or precondition error. Errors are reported as one JSON line on
stderr. Set RTPSTEG_LOG=DEBUG (or INFO, ...) for logging.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

from . import channels as ch
from . import detect as det
from . import emodel, traceio
from .config import CHANNEL_KEYS, ConfigError, RunConfig, channel_kind, load_config
from .impair import apply_impairments
from .jitterbuf import JitterBufferConfig, disposition_summary, render_event_log, simulate_buffer
from .rtp import synth_stream

log = logging.getLogger("rtpsteg")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_PRECONDITION = 4

SUMMARY_HEADER = [
    "call_id",
    "buffer_ms",
    "sent",
    "played",
    "d1",
    "d2",
    "phys_lost",
    "u",
    "r",
    "total_loss_fraction",
]
QUALITY_HEADER = [
    "call_id",
    "buffer_ms",
    "mouth_to_ear_ms",
    "loss_fraction",
    "id",
    "ief",
    "r_raw",
    "r",
    "mos",
    "pstn_grade",
]
DETECTION_HEADER = [
    "call_id",
    "buffer_ms",
    "reorder_count",
    "reorder_flag",
    "regularity_score",
    "regularity_flag",
    "loss_z_score",
    "loss_flag",
]

_CHANNEL_DEFAULTS = {
    "reorder": ch.ReorderChannel(window_n=10),
    "rate": ch.RateChannel(),
    "delay": ch.DelayChannel(delta0_us=15_000, delta1_us=25_000),
    "phantom": ch.PhantomLossChannel(),
    "lack": ch.LackChannel(loss_prob=0.01, delay_us=200_000),
}


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    if value is None:
        return ""
    return str(value)


def write_table(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(row[col]) for col in header) + "\n")


def _read_table(path: Path) -> list[dict[str, str]]:
    lines = Path(path).read_text().splitlines()
    if not lines:
        return []
    header = lines[0].split(",")
    return [dict(zip(header, line.split(","))) for line in lines[1:] if line]


def _load_run_config(args) -> RunConfig:
    if getattr(args, "config", None):
        cfg = load_config(Path(args.config).read_text())
    else:
        cfg = load_config("")
    if getattr(args, "seed", None) is not None:
        cfg.impairment = replace(cfg.impairment, seed=args.seed)
    if getattr(args, "buffer_ms", None):
        cfg.buffer_sizes = tuple(args.buffer_ms)
    if getattr(args, "duration", None) is not None:
        if args.duration <= 0:
            raise ConfigError(f"duration must be positive, got {args.duration}")
        cfg.duration_s = args.duration
    if getattr(args, "base_seq", None) is not None:
        cfg.base_seq = args.base_seq
    if getattr(args, "channel", None):
        if cfg.channel is None or channel_kind(cfg.channel) != args.channel:
            cfg.channel = _CHANNEL_DEFAULTS[args.channel]
    return cfg


def _prepare_out(args, cfg: RunConfig) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config_resolved.ini").write_text(cfg.echo())
    return out


def _require_channel(cfg: RunConfig) -> ch.ChannelConfig:
    if cfg.channel is None:
        raise ConfigError("no channel configured; add a [channel] section or pass --channel")
    return cfg.channel


def _read_trace(path: str):
    return traceio.parse_trace(Path(path).read_text())


# ---------------------------------------------------------------------------
# subcommands


def cmd_synth(args) -> int:
    cfg = _load_run_config(args)
    out = _prepare_out(args, cfg)
    trace = synth_stream(cfg.profile, cfg.duration_s, cfg.base_seq)
    (out / "trace_sent.csv").write_text(traceio.write_trace(trace))
    log.info("synthesized %d packets over %d s", len(trace.packets), cfg.duration_s)
    print(f"wrote {out / 'trace_sent.csv'} ({len(trace.packets)} packets)")
    return EXIT_OK


def cmd_embed(args) -> int:
    cfg = _load_run_config(args)
    channel = _require_channel(cfg)
    out = _prepare_out(args, cfg)
    trace = _read_trace(args.trace)
    message = ch.Steganogram.from_string(Path(args.bits).read_text())
    embedded = ch.embed(channel, trace, message)
    (out / "trace_embedded.csv").write_text(traceio.write_trace(embedded))
    capacity = ch.channel_capacity_bits(channel, trace)
    print(
        f"embedded {len(message)} of {capacity} capacity bits via "
        f"{channel_kind(channel)} into {out / 'trace_embedded.csv'}"
    )
    return EXIT_OK


def cmd_impair(args) -> int:
    cfg = _load_run_config(args)
    out = _prepare_out(args, cfg)
    trace = _read_trace(args.trace)
    received = apply_impairments(trace, cfg.impairment)
    (out / "trace_received.csv").write_text(traceio.write_trace(received))
    lost = sum(1 for p in received.packets if p.arrival_us is None)
    print(f"impaired {len(received.packets)} packets ({lost} lost) -> {out / 'trace_received.csv'}")
    return EXIT_OK


def _simulate_sizes(cfg: RunConfig, trace, call_id: str):
    rows = []
    results = {}
    for size in cfg.buffer_sizes:
        result = simulate_buffer(trace, JitterBufferConfig(size, cfg.profile.frame_ms))
        summary = disposition_summary(result)
        results[size] = (result, summary)
        rows.append(
            {
                "call_id": call_id,
                "buffer_ms": size,
                "sent": summary.sent,
                "played": summary.played,
                "d1": summary.d1,
                "d2": summary.d2,
                "phys_lost": summary.phys_lost,
                "u": summary.u,
                "r": summary.r,
                "total_loss_fraction": summary.total_loss_fraction,
            }
        )
    return rows, results


def cmd_jbsim(args) -> int:
    cfg = _load_run_config(args)
    out = _prepare_out(args, cfg)
    trace = _read_trace(args.trace)
    call_id = args.call_id or Path(args.trace).stem
    rows, results = _simulate_sizes(cfg, trace, call_id)
    for size, (result, _) in results.items():
        (out / f"events_{size}ms.log").write_text(render_event_log(result, size))
    write_table(out / "summary.csv", SUMMARY_HEADER, rows)
    print(f"simulated {len(cfg.buffer_sizes)} buffer sizes -> {out / 'summary.csv'}")
    return EXIT_OK


def cmd_quality(args) -> int:
    cfg = _load_run_config(args)
    out = _prepare_out(args, cfg)
    rows = []
    for entry in _read_table(Path(args.summary)):
        buffer_ms = int(entry["buffer_ms"])
        if cfg.mouth_to_ear_ms is not None:
            m2e = cfg.mouth_to_ear_ms
        else:
            buf = JitterBufferConfig(buffer_ms, cfg.profile.frame_ms)
            m2e = emodel.mouth_to_ear_ms(
                cfg.impairment.base_delay_us, buf.initial_buffered, cfg.profile.frame_ms
            )
        loss = float(entry["total_loss_fraction"])
        report = emodel.assess_call(
            emodel.QualityInputs(mouth_to_ear_ms=m2e, loss_fraction=loss), cfg.id_variant
        )
        rows.append(
            {
                "call_id": entry["call_id"],
                "buffer_ms": buffer_ms,
                "mouth_to_ear_ms": m2e,
                "loss_fraction": loss,
                "id": report.id,
                "ief": report.ief,
                "r_raw": report.r_raw,
                "r": report.r,
                "mos": report.mos,
                "pstn_grade": report.pstn_grade,
            }
        )
    write_table(out / "quality.csv", QUALITY_HEADER, rows)
    print(f"scored {len(rows)} rows -> {out / 'quality.csv'}")
    return EXIT_OK


def cmd_extract(args) -> int:
    cfg = _load_run_config(args)
    channel = _require_channel(cfg)
    out = _prepare_out(args, cfg)
    trace = _read_trace(args.trace)
    buffer_cfg = JitterBufferConfig(cfg.buffer_sizes[0], cfg.profile.frame_ms)
    message = ch.extract(channel, trace, buffer_cfg)
    (out / "bits_extracted.txt").write_text(message.to_string() + "\n")
    print(f"extracted {len(message)} bits -> {out / 'bits_extracted.txt'}")
    return EXIT_OK


def cmd_detect(args) -> int:
    cfg = _load_run_config(args)
    out = _prepare_out(args, cfg)
    trace = _read_trace(args.trace)
    call_id = args.call_id or Path(args.trace).stem
    if args.summary:
        summaries = [
            (int(e["buffer_ms"]), _summary_from_row(e)) for e in _read_table(Path(args.summary))
        ]
    else:
        _, results = _simulate_sizes(cfg, trace, call_id)
        summaries = [(size, summary) for size, (_, summary) in results.items()]
    rows = []
    for buffer_ms, summary in summaries:
        report = det.build_report(
            trace,
            summary,
            baseline=cfg.baseline,
            bin_us=cfg.bin_us,
            regularity_threshold=cfg.regularity_threshold,
            z_threshold=cfg.z_threshold,
        )
        rows.append(
            {
                "call_id": call_id,
                "buffer_ms": buffer_ms,
                "reorder_count": report.reorder_count,
                "reorder_flag": report.flags["reordering"],
                "regularity_score": report.regularity_score,
                "regularity_flag": report.flags["rate_regularity"],
                "loss_z_score": report.loss_z_score,
                "loss_flag": report.flags["loss_anomaly"],
            }
        )
    write_table(out / "detection.csv", DETECTION_HEADER, rows)
    flagged = sum(
        1 for r in rows if r["reorder_flag"] or r["regularity_flag"] or r["loss_flag"]
    )
    print(f"detection report ({flagged}/{len(rows)} rows flagged) -> {out / 'detection.csv'}")
    return EXIT_OK


def _summary_from_row(entry: dict[str, str]):
    from .jitterbuf import DispositionSummary

    return DispositionSummary(
        sent=int(entry["sent"]),
        played=int(entry["played"]),
        d1=int(entry["d1"]),
        d2=int(entry["d2"]),
        phys_lost=int(entry["phys_lost"]),
        u=int(entry["u"]),
        r=int(entry["r"]),
        total_loss_fraction=float(entry["total_loss_fraction"]),
    )


def _collect_rows(inputs, filename: str) -> list[dict[str, str]]:
    rows = []
    for item in inputs:
        path = Path(item)
        files: list[Path] = []
        if path.is_dir():
            files = sorted(path.rglob(filename))
        elif path.name == filename or path.suffix == ".csv":
            files = [path]
        for f in files:
            if f.name == filename:
                rows.extend(_read_table(f))
    return rows


def _write_cdf(path: Path, values: list[float]) -> None:
    grid = sorted(set(values))
    fracs = traceio.compute_cdf(values, grid)
    write_table(
        path,
        ["value", "cum_frac"],
        [{"value": g, "cum_frac": f} for g, f in zip(grid, fracs)],
    )


def cmd_stats(args) -> int:
    cfg = _load_run_config(args)
    out = _prepare_out(args, cfg)
    summary_rows = _collect_rows(args.inputs, "summary.csv")
    quality_rows = _collect_rows(args.inputs, "quality.csv")
    if not summary_rows and not quality_rows:
        raise FileNotFoundError(f"no summary.csv or quality.csv under {args.inputs}")
    written = []
    by_size: dict[int, dict[str, int]] = {}
    if summary_rows:
        _write_cdf(
            out / "cdf_total_loss.csv",
            [float(r["total_loss_fraction"]) for r in summary_rows],
        )
        _write_cdf(
            out / "cdf_phys_loss.csv",
            [int(r["phys_lost"]) / int(r["sent"]) for r in summary_rows if int(r["sent"])],
        )
        for r in summary_rows:
            c = by_size.setdefault(int(r["buffer_ms"]), {"d1": 0, "d2": 0})
            c["d1"] += int(r["d1"])
            c["d2"] += int(r["d2"])
        dominance_rows = [
            {
                "buffer_ms": size,
                "d1_total": c["d1"],
                "d2_total": c["d2"],
                "dominant": "D1-dominant"
                if c["d1"] > c["d2"]
                else ("D2-dominant" if c["d2"] > c["d1"] else "balanced"),
            }
            for size, c in sorted(by_size.items())
        ]
        write_table(out / "dominance.csv", ["buffer_ms", "d1_total", "d2_total", "dominant"], dominance_rows)
        written += ["cdf_total_loss.csv", "cdf_phys_loss.csv", "dominance.csv"]
    if quality_rows:
        for size in sorted({int(r["buffer_ms"]) for r in quality_rows}):
            values = [float(r["mos"]) for r in quality_rows if int(r["buffer_ms"]) == size]
            _write_cdf(out / f"cdf_mos_{size}ms.csv", values)
            written.append(f"cdf_mos_{size}ms.csv")
    print(f"stats over {len(summary_rows)} summary / {len(quality_rows)} quality rows -> {out}")
    log.debug("wrote %s", written)
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rtpsteg",
        description="RTP covert-channel workbench: stream synthesis, network "
        "impairment, jitter-buffer playout, call quality, covert embedding "
        "and steganalysis.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, trace_input=False):
        p.add_argument("--config", help="path to a sectioned config file")
        p.add_argument("--seed", type=int, help="override the impairment seed")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument(
            "--buffer-ms",
            type=lambda v: [int(x) for x in v.split(",")],
            help="comma-separated buffer sizes in ms",
        )
        if trace_input:
            p.add_argument("--in", dest="trace", required=True, help="input trace CSV")

    p = sub.add_parser("synth", help="synthesize a clean sent stream")
    common(p)
    p.add_argument("--duration", type=int, help="call duration in seconds")
    p.add_argument("--base-seq", type=int, dest="base_seq")
    p.set_defaults(handler=cmd_synth)

    p = sub.add_parser("embed", help="embed a covert message into a sent stream")
    common(p, trace_input=True)
    p.add_argument("--channel", choices=sorted(CHANNEL_KEYS))
    p.add_argument("--bits", required=True, help="file of 0/1 characters")
    p.set_defaults(handler=cmd_embed)

    p = sub.add_parser("impair", help="run the network impairment model")
    common(p, trace_input=True)
    p.set_defaults(handler=cmd_impair)

    p = sub.add_parser("jbsim", help="simulate jitter-buffer playout")
    common(p, trace_input=True)
    p.add_argument("--call-id", dest="call_id")
    p.set_defaults(handler=cmd_jbsim)

    p = sub.add_parser("quality", help="score call quality from a playout summary")
    common(p)
    p.add_argument("--summary", required=True, help="summary.csv from jbsim")
    p.set_defaults(handler=cmd_quality)

    p = sub.add_parser("extract", help="extract a covert message from a received trace")
    common(p, trace_input=True)
    p.add_argument("--channel", choices=sorted(CHANNEL_KEYS))
    p.set_defaults(handler=cmd_extract)

    p = sub.add_parser("detect", help="run steganalysis detectors over a received trace")
    common(p, trace_input=True)
    p.add_argument("--summary", help="optional summary.csv for the drop-count detector")
    p.add_argument("--call-id", dest="call_id")
    p.set_defaults(handler=cmd_detect)

    p = sub.add_parser("stats", help="aggregate corpus statistics into CDF tables")
    common(p)
    p.add_argument("inputs", nargs="+", help="run directories or CSV files")
    p.set_defaults(handler=cmd_stats)

    return parser


def _error(code: int, exc: BaseException) -> int:
    sys.stderr.write(
        json.dumps({"error": type(exc).__name__, "code": code, "message": str(exc)}) + "\n"
    )
    return code


def main(argv=None) -> int:
    level = os.environ.get("RTPSTEG_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING))
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except ConfigError as exc:
        return _error(EXIT_CONFIG, exc)
    except (FileNotFoundError, IsADirectoryError, PermissionError, OSError) as exc:
        return _error(EXIT_IO, exc)
    except (ch.CapacityError, traceio.TraceFormatError, ValueError) as exc:
        return _error(EXIT_PRECONDITION, exc)


if __name__ == "__main__":
    sys.exit(main())
