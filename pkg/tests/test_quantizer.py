import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import read_golden
from quasildpc.quantizer import (
    QuantizerError,
    QuantizerSpec,
    decode,
    encode,
    format_csv,
    format_table,
    interval_table,
    is_representable,
    quantize,
    quantize_generalized,
    quantize_q_bit,
    quantize_quasi,
    quantize_uniform,
)

TABLE_I = QuantizerSpec("quasi", 1.0, 3, 3.0)
TABLE_II = QuantizerSpec("gen", 1.0, 3, 3.0, nu=5)

SPECS = [
    QuantizerSpec("uniform", 1.0, 3),
    QuantizerSpec("uniform", 0.5, 4),
    TABLE_I,
    TABLE_II,
    QuantizerSpec("quasi", 0.5, 4, 3.0),
    QuantizerSpec("quasi", 0.25, 5, 1.3),
    QuantizerSpec("quasi", 0.5, 5, 1.5),
    QuantizerSpec("gen", 0.5, 4, 2.0, nu=3),
]


def test_uniform_examples():
    assert quantize_uniform(0.49, 1.0) == 0
    assert quantize_uniform(0.5, 1.0) == 1
    assert quantize_uniform(-0.5, 1.0) == -1
    assert quantize_uniform(7.3, 0.5) == 7.5


def test_q_bit_examples():
    s = QuantizerSpec("uniform", 1.0, 3)
    assert quantize_q_bit(100, s) == 3
    assert quantize_q_bit(2.49, s) == 2
    assert quantize_q_bit(-100, QuantizerSpec("uniform", 0.5, 4)) == -3.5
    with pytest.raises(QuantizerError):
        quantize_q_bit(1.0, TABLE_I)


@pytest.mark.parametrize("x, level, bits", [(10, 9, "0001"), (100, 81, "0101"), (300, 243, "0111"), (0.3, 0, "0000")])
def test_quasi_examples(x, level, bits):
    w = quantize_quasi(x, TABLE_I)
    assert w.value == level and str(w) == bits


@pytest.mark.parametrize("x, level, bits", [(50, 36, "0110"), (5, 4, "0100"), (3.2, 3, "0011")])
def test_generalized_examples(x, level, bits):
    w = quantize_generalized(x, TABLE_II)
    assert w.value == level and str(w) == bits


def test_levels_independent_oracle():
    # quasi: {0..N} delta  and  d^r N delta for r = 1..N+1
    s = QuantizerSpec("quasi", 0.25, 5, 1.3)
    N = 15
    want = [k * 0.25 for k in range(N + 1)] + [1.3 ** r * N * 0.25 for r in range(1, N + 2)]
    assert np.allclose(s.levels, want, rtol=1e-15, atol=0)
    assert s.levels.size == 2 ** 5
    # generalized: top uniform level (nu-1) delta grows by d
    g = QuantizerSpec("gen", 1.0, 3, 3.0, nu=5)
    assert list(g.levels) == [0, 1, 2, 3, 4, 12, 36, 108]


def _golden_check(spec, name):
    rows = interval_table(spec)
    gold = read_golden(name)
    assert len(rows) == len(gold)
    diffs = []
    for r, (rng, level, bits) in zip(rows, gold):
        assert r.level == level
        assert r.bits == bits
        if r.range_text() != rng:
            diffs.append((r.range_text(), rng))
    return diffs


def test_table_i_golden():
    assert _golden_check(TABLE_I, "table_i.txt") == []


def test_table_ii_golden():
    # only the zero row's left bracket differs: 0 itself quantizes to level 0
    assert _golden_check(TABLE_II, "table_ii.txt") == [("[0,0.5]", "(0,0.5]")]
    assert quantize(0.0, TABLE_II) == 0.0 and quantize(0.5, TABLE_II) == 0.0


def test_table_formats():
    text = format_table(interval_table(TABLE_I))
    assert text.splitlines()[5].split() == ["[9,27)", "9", "0001"]
    csv = format_csv(interval_table(TABLE_I)).splitlines()
    assert csv[0] == "lo,hi,lo_inclusive,hi_inclusive,level,bits"
    assert csv[-1] == "243,inf,1,0,243,0111"


def test_encode_decode_table():
    assert str(encode(27, TABLE_I)) == "0011"
    assert decode("0011", TABLE_I) == 27
    assert str(encode(0, TABLE_I)) == "0000" and decode("0000", TABLE_I) == 0
    assert str(encode(-0.0, TABLE_I)) == "0000"
    assert decode("1000", TABLE_I) == 0.0
    with pytest.raises(QuantizerError):
        encode(5, TABLE_I)
    with pytest.raises(QuantizerError):
        decode("001", TABLE_I)


def test_exhaustive_words_q5():
    s = QuantizerSpec("quasi", 0.5, 5, 1.5)
    seen = set()
    for bits in itertools.product((0, 1), repeat=s.word_bits):
        v = decode(bits, s)
        w = encode(v, s)
        assert decode(w, s) == v
        if v != 0 or bits[0] == 0:
            assert w.bits == bits
        seen.add(v)
    assert len(seen) == 2 ** 6 - 1  # +0 and -0 coincide


def test_indicator_bit_semantics():
    s = QuantizerSpec("quasi", 0.5, 4, 3.0)
    for lv in s.levels:
        w = encode(lv, s)
        if w.bits[-1] == 0:
            assert lv <= s.N * s.delta
        else:
            r = round(math.log(lv / (s.N * s.delta), s.d))
            assert 1 <= r <= s.N + 1 and math.isclose(lv, s.d ** r * s.N * s.delta)


def test_parse_round_trip():
    for s in SPECS:
        assert QuantizerSpec.parse(s.to_string()) == s
    assert not QuantizerSpec.parse("none").enabled


@pytest.mark.parametrize("kwargs", [
    dict(kind="quasi", delta=0.0, q=3, d=2.0),
    dict(kind="quasi", delta=1.0, q=3, d=1.0),
    dict(kind="quasi", delta=1.0, q=1, d=2.0),
    dict(kind="gen", delta=1.0, q=3, d=2.0, nu=8),
    dict(kind="gen", delta=1.0, q=3, d=2.0, nu=None),
    dict(kind="bogus", delta=1.0, q=3, d=2.0),
])
def test_invalid_specs(kwargs):
    with pytest.raises(QuantizerError):
        QuantizerSpec(**kwargs)


def test_non_finite_input():
    with pytest.raises(QuantizerError):
        quantize(math.inf, TABLE_I)
    with pytest.raises(QuantizerError):
        quantize_uniform(math.nan, 1.0)


finite = st.floats(-1e4, 1e4, allow_nan=False)


@settings(max_examples=300, deadline=None)
@given(st.sampled_from(SPECS), finite, finite)
def test_properties(spec, x, y):
    qx = quantize(x, spec)
    assert quantize(-x, spec) == -qx
    assert quantize(qx, spec) == qx
    if x <= y:
        assert qx <= quantize(y, spec)
    assert is_representable([qx], spec)


@pytest.mark.parametrize("spec", SPECS)
def test_interval_coverage(spec):
    rows = interval_table(spec)
    top = spec.levels[-1] * 1.5
    grid = np.concatenate([np.linspace(0, top, 20001), [r.lo for r in rows], [r.hi for r in rows if math.isfinite(r.hi)]])
    q = quantize(grid, spec)
    for x, v in zip(grid, q):
        (row,) = [r for r in rows if r.level == v]
        assert (row.lo < x or (row.lo_inclusive and row.lo == x))
        assert (x < row.hi or (row.hi_inclusive and row.hi == x))
    # rows tile [0, inf) with no gaps or overlaps
    for a, b in zip(rows, rows[1:]):
        assert a.hi == b.lo and a.hi_inclusive != b.lo_inclusive
