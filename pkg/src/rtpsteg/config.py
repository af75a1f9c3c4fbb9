"""Sectioned plain-text run configuration.

Every run resolves its configuration fully (file, defaults, flag overrides)
and echoes the result next to its outputs, so any output directory can be
reproduced from what it contains. Unknown sections or keys are rejected.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field

from .channels import (
    ChannelConfig,
    DelayChannel,
    LackChannel,
    PhantomLossChannel,
    RateChannel,
    ReorderChannel,
)
from .detect import (
    DEFAULT_BIN_US,
    DEFAULT_REGULARITY_THRESHOLD,
    DEFAULT_Z_THRESHOLD,
    LossBaseline,
)
from .emodel import ID_VARIANTS
from .impair import ImpairmentConfig
from .rtp import CodecProfile

DEFAULT_BUFFER_SIZES = (20, 40, 60, 80, 100, 120)

CHANNEL_KEYS = {
    "reorder": {"window_n"},
    "rate": {"h", "interval_s", "delta_us"},
    "delay": {"delta0_us", "delta1_us"},
    "phantom": {"period_s"},
    "lack": {"loss_prob", "delay_us", "schedule_seed", "target_buffer_ms"},
}

SECTION_KEYS = {
    "codec": {"frame_ms", "payload_bytes", "bitrate_bps"},
    "impairment": {
        "base_delay_us",
        "jitter_us",
        "spike_rate_per_min",
        "spike_magnitude_us",
        "start_burst_len",
        "phys_loss_prob",
        "seed",
    },
    "buffer": {"sizes_ms"},
    "channel": {"kind"} | set().union(*CHANNEL_KEYS.values()),
    "detector": {
        "bin_us",
        "regularity_threshold",
        "z_threshold",
        "d1_mean",
        "d1_std",
        "d2_mean",
        "d2_std",
        "phys_mean",
    },
    "quality": {"id_variant", "mouth_to_ear_ms"},
    "run": {"duration_s", "base_seq"},
}


class ConfigError(ValueError):
    """Bad or unknown configuration content."""


@dataclass
class RunConfig:
    profile: CodecProfile = field(default_factory=CodecProfile)
    impairment: ImpairmentConfig = field(default_factory=ImpairmentConfig)
    buffer_sizes: tuple[int, ...] = DEFAULT_BUFFER_SIZES
    channel: ChannelConfig | None = None
    baseline: LossBaseline = field(default_factory=LossBaseline)
    bin_us: int = DEFAULT_BIN_US
    regularity_threshold: float = DEFAULT_REGULARITY_THRESHOLD
    z_threshold: float = DEFAULT_Z_THRESHOLD
    id_variant: str = "fixed"
    mouth_to_ear_ms: float | None = None
    duration_s: int = 60
    base_seq: int = 0

    def echo(self) -> str:
        """Canonical INI text of the fully resolved configuration."""
        lines = [
            "[codec]",
            f"frame_ms = {self.profile.frame_ms}",
            f"payload_bytes = {self.profile.payload_bytes}",
            f"bitrate_bps = {self.profile.bitrate_bps}",
            "",
            "[impairment]",
            f"base_delay_us = {self.impairment.base_delay_us}",
            f"jitter_us = {self.impairment.jitter_us}",
            f"spike_rate_per_min = {self.impairment.spike_rate_per_min!r}",
            f"spike_magnitude_us = {self.impairment.spike_magnitude_us}",
            f"start_burst_len = {self.impairment.start_burst_len}",
            f"phys_loss_prob = {self.impairment.phys_loss_prob!r}",
            f"seed = {self.impairment.seed}",
            "",
            "[buffer]",
            "sizes_ms = " + ",".join(str(s) for s in self.buffer_sizes),
            "",
        ]
        if self.channel is not None:
            lines.append("[channel]")
            lines.append(f"kind = {channel_kind(self.channel)}")
            for key in sorted(CHANNEL_KEYS[channel_kind(self.channel)]):
                value = getattr(self.channel, key)
                if value is not None:
                    lines.append(f"{key} = {value!r}" if isinstance(value, float) else f"{key} = {value}")
            lines.append("")
        lines += [
            "[detector]",
            f"bin_us = {self.bin_us}",
            f"regularity_threshold = {self.regularity_threshold!r}",
            f"z_threshold = {self.z_threshold!r}",
            f"d1_mean = {self.baseline.d1_mean!r}",
            f"d1_std = {self.baseline.d1_std!r}",
            f"d2_mean = {self.baseline.d2_mean!r}",
            f"d2_std = {self.baseline.d2_std!r}",
            f"phys_mean = {self.baseline.phys_mean!r}",
            "",
            "[quality]",
            f"id_variant = {self.id_variant}",
        ]
        if self.mouth_to_ear_ms is not None:
            lines.append(f"mouth_to_ear_ms = {self.mouth_to_ear_ms!r}")
        lines += [
            "",
            "[run]",
            f"duration_s = {self.duration_s}",
            f"base_seq = {self.base_seq}",
            "",
        ]
        return "\n".join(lines)


def channel_kind(channel: ChannelConfig) -> str:
    return {
        ReorderChannel: "reorder",
        RateChannel: "rate",
        DelayChannel: "delay",
        PhantomLossChannel: "phantom",
        LackChannel: "lack",
    }[type(channel)]


def _build_channel(kind: str, raw: dict[str, str]) -> ChannelConfig:
    if kind not in CHANNEL_KEYS:
        raise ConfigError(f"unknown channel kind {kind!r}")
    extra = set(raw) - CHANNEL_KEYS[kind] - {"kind"}
    if extra:
        raise ConfigError(f"keys {sorted(extra)} do not apply to channel {kind!r}")
    try:
        if kind == "reorder":
            return ReorderChannel(window_n=int(raw["window_n"]))
        if kind == "rate":
            return RateChannel(
                h=int(raw.get("h", 2)),
                interval_s=float(raw.get("interval_s", 1.0)),
                delta_us=int(raw.get("delta_us", 10_000)),
            )
        if kind == "delay":
            return DelayChannel(delta0_us=int(raw["delta0_us"]), delta1_us=int(raw["delta1_us"]))
        if kind == "phantom":
            return PhantomLossChannel(period_s=float(raw.get("period_s", 5.0)))
        return LackChannel(
            loss_prob=float(raw["loss_prob"]),
            delay_us=int(raw["delay_us"]),
            schedule_seed=int(raw.get("schedule_seed", 0)),
            target_buffer_ms=int(raw["target_buffer_ms"]) if "target_buffer_ms" in raw else None,
        )
    except KeyError as exc:
        raise ConfigError(f"channel {kind!r} is missing required key {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"bad channel {kind!r} parameters: {exc}") from exc


def load_config(text: str) -> RunConfig:
    """Parse config text into a RunConfig, applying defaults for anything
    not mentioned."""
    parser = configparser.ConfigParser()
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"unparseable config: {exc}") from exc

    for section in parser.sections():
        if section not in SECTION_KEYS:
            raise ConfigError(f"unknown section [{section}]")
        extra = set(parser[section]) - SECTION_KEYS[section]
        if extra:
            raise ConfigError(f"unknown keys {sorted(extra)} in section [{section}]")

    cfg = RunConfig()

    def get(section: str, key: str, default):
        if parser.has_option(section, key):
            raw = parser.get(section, key)
            try:
                if isinstance(default, bool):
                    return raw.lower() in ("1", "true", "yes")
                return type(default)(raw)
            except ValueError as exc:
                raise ConfigError(f"[{section}] {key}: cannot parse {raw!r}") from exc
        return default

    try:
        cfg.profile = CodecProfile(
            frame_ms=get("codec", "frame_ms", 20),
            payload_bytes=get("codec", "payload_bytes", 160),
            bitrate_bps=get("codec", "bitrate_bps", 64_000),
        )
        cfg.impairment = ImpairmentConfig(
            base_delay_us=get("impairment", "base_delay_us", 50_000),
            jitter_us=get("impairment", "jitter_us", 0),
            spike_rate_per_min=get("impairment", "spike_rate_per_min", 0.0),
            spike_magnitude_us=get("impairment", "spike_magnitude_us", 0),
            start_burst_len=get("impairment", "start_burst_len", 0),
            phys_loss_prob=get("impairment", "phys_loss_prob", 0.0),
            seed=get("impairment", "seed", 0),
        )
        cfg.baseline = LossBaseline(
            d1_mean=get("detector", "d1_mean", 300.0),
            d1_std=get("detector", "d1_std", 1490.0),
            d2_mean=get("detector", "d2_mean", 750.0),
            d2_std=get("detector", "d2_std", 1882.0),
            phys_mean=get("detector", "phys_mean", 100.0),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc

    if parser.has_option("buffer", "sizes_ms"):
        try:
            cfg.buffer_sizes = tuple(
                int(v.strip()) for v in parser.get("buffer", "sizes_ms").split(",") if v.strip()
            )
        except ValueError as exc:
            raise ConfigError(f"bad sizes_ms: {exc}") from exc
        if not cfg.buffer_sizes:
            raise ConfigError("sizes_ms is empty")

    if parser.has_section("channel"):
        raw = dict(parser["channel"])
        if "kind" not in raw:
            raise ConfigError("[channel] needs a kind")
        cfg.channel = _build_channel(raw["kind"], raw)

    cfg.bin_us = get("detector", "bin_us", DEFAULT_BIN_US)
    cfg.regularity_threshold = get(
        "detector", "regularity_threshold", DEFAULT_REGULARITY_THRESHOLD
    )
    cfg.z_threshold = get("detector", "z_threshold", DEFAULT_Z_THRESHOLD)

    cfg.id_variant = get("quality", "id_variant", "fixed")
    if cfg.id_variant not in ID_VARIANTS:
        raise ConfigError(f"id_variant must be one of {ID_VARIANTS}, got {cfg.id_variant!r}")
    if parser.has_option("quality", "mouth_to_ear_ms"):
        cfg.mouth_to_ear_ms = get("quality", "mouth_to_ear_ms", 0.0)

    cfg.duration_s = get("run", "duration_s", 60)
    cfg.base_seq = get("run", "base_seq", 0)
    if cfg.duration_s <= 0:
        raise ConfigError(f"duration_s must be positive, got {cfg.duration_s}")
    return cfg
