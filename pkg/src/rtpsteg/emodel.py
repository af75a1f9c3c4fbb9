"""Call quality from delay and loss: impairment factors, R factor, MOS.

Simplified E-model chain for G.711 with random losses. The R scale runs from
0 (worst) to 100 (best); MOS from 1 to 5 with 3.6 commonly taken as the bar
for PSTN-comparable quality.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

R_CLEAN = 94.2  # R factor with zero delay and loss impairment on this scale
DELAY_KNEE_MS = 177.3  # one-way delay where the delay penalty kicks in
PSTN_MOS = 3.6

ID_VARIANTS = ("fixed", "scaled")


def heaviside(x: float) -> int:
    return 0 if x < 0 else 1


def delay_impairment(d_ms: float, variant: str = "fixed") -> float:
    """Delay impairment Id for a mouth-to-ear delay of d_ms.

    variant "fixed" uses a constant 0.024 base term; "scaled" uses the
    monitoring-formula base term 0.024 * d. Both share the 0.11 * (d - 177.3)
    penalty above the knee.
    """
    if d_ms < 0:
        raise ValueError(f"delay must be >= 0 ms, got {d_ms}")
    if variant == "fixed":
        base = 0.024
    elif variant == "scaled":
        base = 0.024 * d_ms
    else:
        raise ValueError(f"unknown variant {variant!r}, expected one of {ID_VARIANTS}")
    return base + 0.11 * (d_ms - DELAY_KNEE_MS) * heaviside(d_ms - DELAY_KNEE_MS)


def loss_impairment(p_loss: float) -> float:
    """Loss impairment Ief = 30 * ln(1 + 15 p) for G.711 with random losses."""
    if not 0.0 <= p_loss <= 1.0:
        raise ValueError(f"loss probability must be in [0, 1], got {p_loss}")
    return 30.0 * math.log(1.0 + 15.0 * p_loss)


def r_factor(id_factor: float, ief_factor: float) -> float:
    """R = 94.2 - Id - Ief, clamped to the [0, 100] scale."""
    return min(100.0, max(0.0, R_CLEAN - id_factor - ief_factor))


def mos_from_r(r: float) -> float:
    """MOS = 1 + 0.035 R + 7e-6 R (R - 60)(100 - R), defined on [0, 100].

    Note the cubic genuinely decreases on [0, ~3.22] and dips slightly below
    1 for 0 < R < ~6.52; values are reported as computed.
    """
    if not 0.0 <= r <= 100.0:
        raise ValueError(f"R must be in [0, 100], got {r}")
    return 1.0 + 0.035 * r + 7e-6 * r * (r - 60.0) * (100.0 - r)


@dataclass(frozen=True)
class QualityInputs:
    mouth_to_ear_ms: float
    loss_fraction: float

    def __post_init__(self) -> None:
        if self.mouth_to_ear_ms < 0:
            raise ValueError(f"mouth_to_ear_ms must be >= 0, got {self.mouth_to_ear_ms}")
        if not 0.0 <= self.loss_fraction <= 1.0:
            raise ValueError(f"loss_fraction must be in [0, 1], got {self.loss_fraction}")


@dataclass(frozen=True)
class QualityReport:
    id: float
    ief: float
    r_raw: float
    r: float
    mos: float
    pstn_grade: bool


def assess_call(inputs: QualityInputs, id_variant: str = "fixed") -> QualityReport:
    """Chain delay and loss impairments into R and MOS for one call."""
    id_factor = delay_impairment(inputs.mouth_to_ear_ms, id_variant)
    ief_factor = loss_impairment(inputs.loss_fraction)
    raw = R_CLEAN - id_factor - ief_factor
    r = r_factor(id_factor, ief_factor)
    mos = mos_from_r(r)
    return QualityReport(
        id=id_factor,
        ief=ief_factor,
        r_raw=raw,
        r=r,
        mos=mos,
        pstn_grade=mos >= PSTN_MOS,
    )


def mouth_to_ear_ms(base_delay_us: int, initial_buffered: int, frame_ms: int) -> float:
    """Default delay composition for simulated calls: network transit plus
    nominal buffering plus one frame of packetization."""
    return base_delay_us / 1000.0 + initial_buffered * frame_ms + frame_ms
