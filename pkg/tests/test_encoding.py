import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from thaad.abstraction import SymbolicTimeInterval, TrendSymbol
from thaad.encoding import (EncodingCapacityError, Endpoint, EventString, MalformedCodeError,
                            NumericString, build_variable_map, decode, encode, encode_endpoint,
                            encode_intervals, merge_endpoints, split_interval, split_text_pattern,
                            variable_index)

T = TrendSymbol


def sti(b, f, sym, var="v"):
    return SymbolicTimeInterval("e", var, b, f, sym)


def test_split_interval():
    assert split_interval(sti(10, 20, T.I_H), 0) == (Endpoint(10, 0, T.I_H, True), Endpoint(20, 0, T.I_H, False))
    assert split_interval(sti(3, 9, T.D_M), 1) == (Endpoint(3, 1, T.D_M, True), Endpoint(9, 1, T.D_M, False))


def test_zero_length_interval_opens_first():
    b, f = split_interval(sti(7, 7, T.S), 0)
    merged = merge_endpoints([[f, b][::-1]]).endpoints
    assert merged == (b, f)
    assert sorted([f, b], key=Endpoint.sort_key) == [b, f]


def test_merge_orders():
    a, b = Endpoint(5, 0, T.S, True), Endpoint(3, 0, T.S, True)
    assert [e.timestamp for e in merge_endpoints([[a], [b]]).endpoints] == [3, 5]
    c, d = Endpoint(4, 1, T.S, True), Endpoint(4, 0, T.S, True)
    assert merge_endpoints([[c], [d]]).endpoints == (d, c)


def test_two_variable_interleaving():
    # variable 0 rises then falls, variable 1 stays stable then rises
    v0 = [sti(5, 8, T.I_H, "s"), sti(9, 12, T.D_M, "s")]
    v1 = [sti(5, 10, T.S, "d"), sti(11, 12, T.I_L, "d")]
    vm = {"s": 0, "d": 1}
    ns = encode_intervals("e", {"s": v0, "d": v1}, vm)
    assert ns.timestamps.tolist() == [5, 5, 8, 9, 10, 11, 12, 12]
    assert ns.values.tolist() == [20600, 20301, 10600, 20100, 10301, 20401, 10100, 10401]


def test_encode_examples():
    assert encode_endpoint(Endpoint(0, 0, T.I_H, True)) == 20600
    assert encode_endpoint(Endpoint(0, 1, T.I_M, True)) == 20501
    assert 20600 - 20501 == 99
    assert encode_endpoint(Endpoint(0, 0, T.D_H, False)) == 10000


def test_decode_examples():
    assert decode(20600) == (True, T.I_H, 0)
    assert decode(10303) == (False, T.S, 3)
    for bad in (20700, 9999, 30000, 10799):
        with pytest.raises(MalformedCodeError):
            decode(bad)


def test_round_trip_all_endpoints():
    seen = set()
    for is_open, sym, var in itertools.product((True, False), T, range(100)):
        c = encode_endpoint(Endpoint(0, var, sym, is_open))
        assert decode(c) == (is_open, sym, var)
        seen.add(c)
    assert len(seen) == 1400


def test_adjacent_symbols_differ_by_100():
    for is_open, var in itertools.product((True, False), range(100)):
        for a, b in zip(list(T), list(T)[1:]):
            assert encode_endpoint(Endpoint(0, var, b, is_open)) - encode_endpoint(Endpoint(0, var, a, is_open)) == 100


def test_capacity_errors():
    with pytest.raises(EncodingCapacityError):
        Endpoint(0, 100, T.S, True)
    with pytest.raises(EncodingCapacityError):
        variable_index({"a": 0}, "b")
    with pytest.raises(EncodingCapacityError):
        build_variable_map(range(101))
    with pytest.raises(EncodingCapacityError):
        encode_intervals("e", {"z": [sti(0, 1, T.S, "z")]}, {"a": 0})


def test_variable_map_first_seen():
    assert build_variable_map(["b", "a", "b", "c"]) == {"b": 0, "a": 1, "c": 2}


def ns(vals):
    return NumericString("e", np.asarray(vals), np.arange(len(vals)))


def test_split_text_pattern():
    sp = split_text_pattern(ns([1, 2, 3, 4, 5]), 2)
    assert sp.text.tolist() == [1, 2, 3] and sp.pattern.tolist() == [4, 5]
    assert sp.time_pattern.tolist() == [3, 4] and not sp.cold_start_only
    sp = split_text_pattern(ns([1, 2, 3, 4, 5]), 4)
    assert sp.text.tolist() == [1]
    sp = split_text_pattern(ns([1, 2, 3]), 3)
    assert sp.cold_start_only and len(sp.text) == 0 and sp.pattern.tolist() == [1, 2, 3]


# -- properties -------------------------------------------------------------------------


@st.composite
def interval_lists(draw):
    """Valid interval series per variable: disjoint runs, adjacent symbols differ."""
    n_vars = draw(st.integers(1, 4))
    out = {}
    for v in range(n_vars):
        t = draw(st.integers(0, 5))
        prev = None
        items = []
        for _ in range(draw(st.integers(0, 8))):
            length = draw(st.integers(0, 4))
            sym = draw(st.sampled_from([s for s in T if s is not prev]))
            items.append(SymbolicTimeInterval("e", f"v{v}", t, t + length, sym))
            prev = sym
            t += length + 1
        out[f"v{v}"] = items
    return out


@given(interval_lists())
def test_merge_properties(per_var):
    vm = build_variable_map(per_var)
    lists = [[e for i in items for e in split_interval(i, vm[v])] for v, items in per_var.items()]
    merged = merge_endpoints(lists).endpoints
    assert len(merged) == sum(len(x) for x in lists) == 2 * sum(len(x) for x in per_var.values())
    keys = [e.sort_key() for e in merged]
    assert keys == sorted(keys)
    assert merge_endpoints(lists[::-1]).endpoints == merged
    s = encode(EventString("e", merged))
    assert len(s) == len(merged)
    for e, t, c in zip(merged, s.timestamps, s.values):
        assert decode(c) == (e.open, e.symbol, e.variable) and t == e.timestamp
