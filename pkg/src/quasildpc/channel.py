"""BSC and AWGN observations of the all-zero codeword, as LLR frames.

The all-zero codeword maps to +1 on the AWGN channel and to positive LLRs, so
an entry is in error exactly when it is negative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ScaleMode:
    """How channel LLR magnitudes are set.

    ``exact``: true LLRs. ``fixed``: every BSC magnitude is ``value``.
    ``factor``: true LLRs multiplied by ``value``.
    """

    kind: str = "exact"
    value: float = 1.0

    def __post_init__(self):
        if self.kind not in ("exact", "fixed", "factor"):
            raise ValueError(f"unknown scale mode {self.kind!r}")
        if self.kind != "exact" and not (self.value > 0 and math.isfinite(self.value)):
            raise ValueError(f"scale value must be positive, got {self.value}")

    @classmethod
    def parse(cls, text: str) -> "ScaleMode":
        """``exact``, ``fixed:c`` or ``factor:s``."""
        head, _, tail = text.partition(":")
        if head == "exact" and not tail:
            return cls()
        if head in ("fixed", "factor") and tail:
            return cls(head, float(tail))
        raise ValueError(f"bad scale mode {text!r}; use exact, fixed:c or factor:s")

    def __str__(self) -> str:
        return "exact" if self.kind == "exact" else f"{self.kind}:{self.value!r}"


EXACT = ScaleMode()


@dataclass(frozen=True)
class LlrFrame:
    llrs: np.ndarray
    channel: str
    param: float
    scale: ScaleMode = EXACT

    @property
    def n(self) -> int:
        return int(self.llrs.size)

    def errors(self) -> int:
        return int(np.count_nonzero(self.llrs < 0))


def bsc_llr_magnitude(p: float) -> float:
    _check_p(p)
    return math.log((1.0 - p) / p)


def _check_p(p: float) -> None:
    if not 0.0 < p < 0.5:
        raise ValueError(f"BSC crossover probability must lie in (0, 0.5), got {p}")


def bsc_frame(n: int, p: float, scale: ScaleMode = EXACT, rng: np.random.Generator | None = None) -> LlrFrame:
    _check_p(p)
    rng = np.random.default_rng() if rng is None else rng
    flips = rng.random(n) < p
    mag = bsc_llr_magnitude(p)
    if scale.kind == "fixed":
        mag = scale.value
    elif scale.kind == "factor":
        mag = mag * scale.value
    llrs = np.where(flips, -mag, mag)
    return LlrFrame(llrs, "bsc", p, scale)


def awgn_frame(n: int, sigma: float, scale: ScaleMode = EXACT, rng: np.random.Generator | None = None) -> LlrFrame:
    if not sigma > 0:
        raise ValueError(f"noise standard deviation must be positive, got {sigma}")
    if scale.kind == "fixed":
        raise ValueError("fixed-magnitude scaling only applies to the BSC")
    rng = np.random.default_rng() if rng is None else rng
    r = 1.0 + sigma * rng.standard_normal(n)
    llrs = 2.0 * r / (sigma * sigma)
    if scale.kind == "factor":
        llrs = llrs * scale.value
    return LlrFrame(llrs, "awgn", sigma, scale)


def scale_frame(frame: LlrFrame, factor: float) -> LlrFrame:
    if not (factor > 0 and math.isfinite(factor)):
        raise ValueError(f"scale factor must be positive, got {factor}")
    return LlrFrame(frame.llrs * factor, frame.channel, frame.param, frame.scale)


def ebn0_to_sigma(ebn0_db: float, rate: float) -> float:
    """Noise std for unit-energy BPSK at the given Eb/N0 (dB) and code rate."""
    if not 0 < rate <= 1:
        raise ValueError(f"code rate must lie in (0, 1], got {rate}")
    return 1.0 / math.sqrt(2.0 * rate * 10.0 ** (ebn0_db / 10.0))


def frame_rng(master_seed: int, point_index: int, frame_index: int) -> np.random.Generator:
    """Counter-based stream for one frame: Philox keyed by (seed, point, frame)."""
    ss = np.random.SeedSequence([int(master_seed), int(point_index), int(frame_index)])
    return np.random.Generator(np.random.Philox(ss))
