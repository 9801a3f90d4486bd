"""Uniform, q-bit uniform and (q+1)-bit quasi-uniform message quantizers.

Every saturating quantizer here is odd-symmetric and is described by a table of
non-negative magnitude levels plus the thresholds separating them. A magnitude
``a`` maps to level ``k`` when it lies past the first ``k`` thresholds;
threshold ``t`` is *closed* when ``a == t`` still belongs to the lower level.

Two boundary conventions appear:

* q-bit uniform: ``[mD - D/2, mD + D/2)`` for positive inputs (half-steps round
  away from zero), so thresholds are open.
* quasi-uniform and its generalization: the uniform core uses
  ``(mD - D/2, mD + D/2]`` and the exponential region ``[level, next level)``.
  This matches the published interval tables exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

KINDS = ("none", "uniform_q_bit", "quasi_uniform", "generalized_quasi_uniform")
_ALIASES = {
    "none": "none",
    "float": "none",
    "uniform": "uniform_q_bit",
    "uniform_q_bit": "uniform_q_bit",
    "quasi": "quasi_uniform",
    "quasi_uniform": "quasi_uniform",
    "gen": "generalized_quasi_uniform",
    "generalized": "generalized_quasi_uniform",
    "generalized_quasi_uniform": "generalized_quasi_uniform",
}


class QuantizerError(ValueError):
    pass


@dataclass(frozen=True)
class QuantizedWord:
    """A quantizer output: bit tuple (sign bit first) and its decimal level."""

    bits: tuple[int, ...]
    value: float

    def __str__(self) -> str:
        return "".join(str(b) for b in self.bits)


@dataclass(frozen=True)
class QuantizerSpec:
    """Parameters of a saturating quantizer.

    Parameters
    ----------
    kind : str
        ``"uniform_q_bit"``, ``"quasi_uniform"``, ``"generalized_quasi_uniform"``
        or ``"none"``. Short aliases ``uniform``, ``quasi`` and ``gen`` work.
    delta : float
        Uniform step size.
    q : int
        Magnitude bits; ``N = 2**(q-1) - 1``.
    d : float
        Growth rate of the exponential levels (> 1).
    nu : int
        Number of uniform magnitudes (including 0) for the generalized kind.
    """

    kind: str = "none"
    delta: float = 1.0
    q: int = 3
    d: float = 2.0
    nu: int | None = None
    levels: np.ndarray = field(init=False, repr=False, compare=False)
    thresholds: np.ndarray = field(init=False, repr=False, compare=False)
    closed: np.ndarray = field(init=False, repr=False, compare=False)
    n_uniform: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        kind = _ALIASES.get(str(self.kind))
        if kind is None:
            raise QuantizerError(f"unknown quantizer kind {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        if kind == "none":
            object.__setattr__(self, "nu", None)
            self._store([], [], [], 0)
            return
        if not (math.isfinite(self.delta) and self.delta > 0):
            raise QuantizerError(f"delta must be positive and finite, got {self.delta}")
        if int(self.q) != self.q or self.q < 1:
            raise QuantizerError(f"q must be an integer >= 1, got {self.q}")
        object.__setattr__(self, "q", int(self.q))
        delta = Fraction(self.delta)
        half = delta / 2
        N = self.N

        if kind == "uniform_q_bit":
            object.__setattr__(self, "nu", None)
            lv = [k * delta for k in range(N + 1)]
            th = [k * delta + half for k in range(N)]
            self._store(lv, th, [False] * len(th), N + 1)
            return

        if not (math.isfinite(self.d) and self.d > 1):
            raise QuantizerError(f"growth rate d must exceed 1, got {self.d}")
        d = Fraction(self.d)
        if kind == "quasi_uniform":
            if self.q < 2:
                raise QuantizerError("quasi-uniform quantization needs q >= 2")
            object.__setattr__(self, "nu", None)
            nu = N + 1
        else:
            if self.nu is None:
                raise QuantizerError("generalized quasi-uniform quantizer needs nu")
            nu = int(self.nu)
            if not 2 <= nu <= 2 ** self.q - 1:
                raise QuantizerError(f"nu must lie in [2, {2 ** self.q - 1}] for q={self.q}, got {self.nu}")
            object.__setattr__(self, "nu", nu)
        top = (nu - 1) * delta
        n_exp = 2 ** self.q - nu
        lv = [k * delta for k in range(nu)] + [d ** r * top for r in range(1, n_exp + 1)]
        th = [k * delta + half for k in range(nu - 1)] + [d ** r * top for r in range(1, n_exp + 1)]
        closed = [True] * (nu - 1) + [False] * n_exp
        self._store(lv, th, closed, nu)

    def _store(self, lv, th, closed, n_uniform):
        levels = np.array([float(x) for x in lv], dtype=np.float64)
        thresholds = np.array([float(x) for x in th], dtype=np.float64)
        cl = np.array(closed, dtype=np.bool_)
        for a in (levels, thresholds, cl):
            a.setflags(write=False)
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "thresholds", thresholds)
        object.__setattr__(self, "closed", cl)
        object.__setattr__(self, "n_uniform", n_uniform)

    @property
    def N(self) -> int:
        return 2 ** (self.q - 1) - 1

    @property
    def enabled(self) -> bool:
        return self.kind != "none"

    @property
    def max_level(self) -> float:
        return float(self.levels[-1]) if self.enabled else math.inf

    @property
    def word_bits(self) -> int:
        return self.q if self.kind == "uniform_q_bit" else self.q + 1

    @classmethod
    def parse(cls, text: str) -> "QuantizerSpec":
        """Build from ``kind:delta:q:d[:nu]`` (``uniform:delta:q`` and ``none`` also work)."""
        parts = text.strip().split(":")
        kind = _ALIASES.get(parts[0])
        if kind is None:
            raise QuantizerError(f"unknown quantizer kind {parts[0]!r} in {text!r}")
        if kind == "none":
            if len(parts) != 1:
                raise QuantizerError("'none' takes no parameters")
            return cls("none")
        try:
            if kind == "uniform_q_bit":
                if len(parts) not in (3, 4):
                    raise QuantizerError(f"expected uniform:delta:q, got {text!r}")
                return cls(kind, float(parts[1]), int(parts[2]))
            if kind == "quasi_uniform":
                if len(parts) != 4:
                    raise QuantizerError(f"expected quasi:delta:q:d, got {text!r}")
                return cls(kind, float(parts[1]), int(parts[2]), float(parts[3]))
            if len(parts) != 5:
                raise QuantizerError(f"expected gen:delta:q:d:nu, got {text!r}")
            return cls(kind, float(parts[1]), int(parts[2]), float(parts[3]), int(parts[4]))
        except ValueError as exc:
            if isinstance(exc, QuantizerError):
                raise
            raise QuantizerError(f"bad number in quantizer spec {text!r}: {exc}") from None

    def to_string(self) -> str:
        short = {"uniform_q_bit": "uniform", "quasi_uniform": "quasi", "generalized_quasi_uniform": "gen"}
        if self.kind == "none":
            return "none"
        parts = [short[self.kind], repr(self.delta), str(self.q)]
        if self.kind != "uniform_q_bit":
            parts.append(repr(self.d))
        if self.kind == "generalized_quasi_uniform":
            parts.append(str(self.nu))
        return ":".join(parts)


def _check_finite(x) -> np.ndarray:
    a = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(a)):
        raise QuantizerError("quantizer input must be finite")
    return a


def level_index(spec: QuantizerSpec, magnitude):
    """Index into ``spec.levels`` for non-negative magnitude(s)."""
    a = np.asarray(magnitude, dtype=np.float64)
    th = spec.thresholds
    k = np.searchsorted(th, a, side="right")
    if th.size:
        at = np.clip(k - 1, 0, th.size - 1)
        on_closed = (k > 0) & (th[at] == a) & spec.closed[at]
        k = k - on_closed
    return k


def quantize(x, spec: QuantizerSpec):
    """Quantize scalar or array input to decimal levels (identity for ``none``)."""
    a = _check_finite(x)
    if not spec.enabled:
        return a if a.ndim else float(a)
    out = np.sign(a) * spec.levels[level_index(spec, np.abs(a))]
    out = out + 0.0  # no negative zeros
    return out if out.ndim else float(out)


def quantize_uniform(x, delta: float):
    """Unsaturated uniform quantizer: ``sgn(x) * delta * floor(|x|/delta + 1/2)``."""
    if not (math.isfinite(delta) and delta > 0):
        raise QuantizerError("delta must be positive")
    a = _check_finite(x)
    out = np.sign(a) * delta * np.floor(np.abs(a) / delta + 0.5) + 0.0
    return out if out.ndim else float(out)


def quantize_q_bit(x, spec: QuantizerSpec):
    if spec.kind != "uniform_q_bit":
        raise QuantizerError(f"expected a uniform_q_bit spec, got {spec.kind}")
    return quantize(x, spec)


def _word(spec: QuantizerSpec, negative: bool, k: int) -> tuple[int, ...]:
    q = spec.q
    if spec.kind == "uniform_q_bit":
        mag = format(k, f"0{q - 1}b") if q > 1 else ""
        tail = ""
    elif spec.kind == "quasi_uniform":
        N = spec.N
        if k <= N:
            mag, tail = format(k, f"0{q - 1}b"), "0"
        else:
            mag, tail = format(k - N - 1, f"0{q - 1}b"), "1"
    else:
        mag, tail = format(k, f"0{q}b"), ""
    sign = 1 if (negative and k > 0) else 0
    return (sign,) + tuple(int(ch) for ch in mag + tail)


def encode(level: float, spec: QuantizerSpec) -> QuantizedWord:
    """Binary word of a representable level. Zero always gets sign bit 0."""
    if not spec.enabled:
        raise QuantizerError("the 'none' quantizer has no binary form")
    lv = float(level)
    hits = np.flatnonzero(spec.levels == abs(lv))
    if hits.size != 1:
        raise QuantizerError(f"{level!r} is not a representable level of {spec.to_string()}")
    k = int(hits[0])
    return QuantizedWord(_word(spec, lv < 0, k), math.copysign(spec.levels[k], lv) + 0.0)


def decode(word, spec: QuantizerSpec) -> float:
    """Decimal level of a word (a :class:`QuantizedWord`, bit sequence or bit string)."""
    if not spec.enabled:
        raise QuantizerError("the 'none' quantizer has no binary form")
    if isinstance(word, QuantizedWord):
        bits = word.bits
    elif isinstance(word, str):
        bits = tuple(int(ch) for ch in word)
    else:
        bits = tuple(int(b) for b in word)
    if len(bits) != spec.word_bits or any(b not in (0, 1) for b in bits):
        raise QuantizerError(f"word {bits} is not a {spec.word_bits}-bit binary word")
    sign = -1.0 if bits[0] else 1.0
    q = spec.q
    if spec.kind == "uniform_q_bit":
        k = int("".join(map(str, bits[1:])) or "0", 2)
    elif spec.kind == "quasi_uniform":
        body = int("".join(map(str, bits[1:q])), 2)
        k = body + (spec.N + 1 if bits[q] else 0)
    else:
        k = int("".join(map(str, bits[1:])), 2)
    return sign * float(spec.levels[k]) + 0.0


def quantize_word(x: float, spec: QuantizerSpec) -> QuantizedWord:
    return encode(quantize(x, spec), spec)


def quantize_quasi(x: float, spec: QuantizerSpec) -> QuantizedWord:
    if spec.kind != "quasi_uniform":
        raise QuantizerError(f"expected a quasi_uniform spec, got {spec.kind}")
    return quantize_word(x, spec)


def quantize_generalized(x: float, spec: QuantizerSpec) -> QuantizedWord:
    if spec.kind != "generalized_quasi_uniform":
        raise QuantizerError(f"expected a generalized_quasi_uniform spec, got {spec.kind}")
    return quantize_word(x, spec)


def is_representable(values, spec: QuantizerSpec) -> bool:
    if not spec.enabled:
        return True
    return bool(np.all(np.isin(np.abs(np.asarray(values, dtype=np.float64)), spec.levels)))


@dataclass(frozen=True)
class IntervalRow:
    lo: float
    hi: float
    lo_inclusive: bool
    hi_inclusive: bool
    level: float
    bits: str

    def range_text(self) -> str:
        left = "[" if self.lo_inclusive else "("
        right = "]" if self.hi_inclusive else ")"
        hi = "∞" if math.isinf(self.hi) else _num(self.hi)
        return f"{left}{_num(self.lo)},{hi}{right}"


def _num(x: float) -> str:
    return format(x, ".12g")


def interval_table(spec: QuantizerSpec) -> list[IntervalRow]:
    """Quantization intervals over the non-negative reals, one row per level."""
    if not spec.enabled:
        raise QuantizerError("the 'none' quantizer has no interval table")
    rows = []
    th, cl, lv = spec.thresholds, spec.closed, spec.levels
    for k in range(lv.size):
        if k == 0:
            lo, lo_inc = 0.0, True
        else:
            lo, lo_inc = float(th[k - 1]), not bool(cl[k - 1])
        if k < th.size:
            hi, hi_inc = float(th[k]), bool(cl[k])
        else:
            hi, hi_inc = math.inf, False
        rows.append(IntervalRow(lo, hi, lo_inc, hi_inc, float(lv[k]), str(encode(lv[k], spec))))
    return rows


def format_table(rows: Sequence[IntervalRow]) -> str:
    head = ("Input range", "Quantized value", "Binary form")
    body = [(r.range_text(), _num(r.level), r.bits) for r in rows]
    widths = [max(len(head[i]), *(len(b[i]) for b in body)) for i in range(3)]
    lines = ["  ".join(h.ljust(w) for h, w in zip(head, widths)).rstrip()]
    for b in body:
        lines.append("  ".join(c.ljust(w) for c, w in zip(b, widths)).rstrip())
    return "\n".join(lines) + "\n"


def format_csv(rows: Sequence[IntervalRow]) -> str:
    lines = ["lo,hi,lo_inclusive,hi_inclusive,level,bits"]
    for r in rows:
        hi = "inf" if math.isinf(r.hi) else _num(r.hi)
        lines.append(f"{_num(r.lo)},{hi},{int(r.lo_inclusive)},{int(r.hi_inclusive)},{_num(r.level)},{r.bits}")
    return "\n".join(lines) + "\n"
