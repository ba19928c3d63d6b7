import random
import threading

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from thaad.matching import (INF, InvalidQueryError, InvalidShiftError, MatchQuery, Metric,
                            SlidingIndex, TextIndex, append_symbol, brute_force_match,
                            brute_force_shifts, build_index, exact_match_hash, occurs_at, query_match)
from thaad.rangetree import rotate


def shifts(text, pattern, alpha=INF, beta=INF, metric="L1"):
    return brute_force_shifts(MatchQuery(text, pattern, alpha, beta, metric))


# -- oracle examples --------------------------------------------------------------------


def test_occurs_at_examples():
    assert occurs_at([3, 4, 5], [4, 5], 1, 0, 0)
    assert occurs_at([20501], [20600], 0, 99, 99)
    assert not occurs_at([20501], [20600], 0, 98, 99)
    with pytest.raises(InvalidShiftError):
        occurs_at([1, 2], [1], 2)


def test_brute_force_examples():
    text = [1, 2, 3, 1, 2, 3]
    assert shifts(text, [1, 2], 0, 0) == [0, 3]
    assert shifts(text, [2, 4], 1, 2, "L1") == [1, 4]
    assert shifts(text, [1, 2], INF, 0) == [0, 3]
    assert shifts([1], [1, 2]) == []


def test_query_validation():
    with pytest.raises(InvalidQueryError):
        MatchQuery([1], [], 0, 0)
    with pytest.raises(InvalidQueryError):
        MatchQuery([1], [1], -1, 0)
    with pytest.raises(ValueError):
        Metric.parse("L3")
    idx = build_index([1, 2, 3], 2)
    with pytest.raises(InvalidQueryError):
        idx.query([1, 2, 3])


# -- index examples -------------------------------------------------------------------------


def test_index_windows():
    idx = build_index([1, 2, 3, 1, 2, 3], 2)
    assert idx.windows() == [(1, 2), (2, 3), (3, 1), (1, 2), (2, 3)]
    assert idx.point_multiset() == {(1, 2): 2, (2, 3): 2, (3, 1): 1}
    assert build_index([4, 5], 2).n_windows == 1


def test_index_exact_and_whole_set():
    text = [1, 2, 3, 1, 2, 3]
    idx = build_index(text, 2)
    assert query_match(idx, [2, 3], 0, 0) == (True, 2, 1)
    assert query_match(idx, [9, 9], 100, INF) == (True, 5, 0)
    assert query_match(idx, [9, 9], INF, INF).count == 5
    assert query_match(idx, [9, 9], 0, 0) == (False, 0, None)


def test_append_examples():
    s = SlidingIndex(2, [1, 2, 3])
    assert s.text == [1] and s.index.n_windows == 0
    s.append(4)
    assert s.text == [1, 2] and s.index.windows() == [(1, 2)]
    s.append(1)
    assert s.index.windows() == [(1, 2), (2, 3)]
    idx = build_index([1, 2, 1], 2)
    before = idx.exact_count([1, 2])
    append_symbol(idx, 2)
    assert idx.exact_count([1, 2]) == before + 1


def test_hash_examples():
    idx = build_index([5, 6, 5, 6, 7], 2)
    assert exact_match_hash(idx, [5, 6]) == (True, 2)
    assert exact_match_hash(idx, [6, 6]) == (False, 0)


def test_rotation():
    pts = np.array([[3, 1], [0, 5]])
    assert rotate(pts).tolist() == [[4, 2], [5, -5]]


# -- oracle equivalence ---------------------------------------------------------------------

codes = st.integers(10000, 10030)


@st.composite
def instances(draw, max_n=60):
    x = draw(st.integers(1, 5))
    text = draw(st.lists(codes, min_size=0, max_size=max_n))
    if draw(st.booleans()) and len(text) >= x:
        s = draw(st.integers(0, len(text) - x))
        pattern = [v + draw(st.integers(-3, 3)) for v in text[s:s + x]]
    else:
        pattern = draw(st.lists(codes, min_size=x, max_size=x))
    alpha = draw(st.sampled_from([0, 1, 2, 3, 5, 10, INF]))
    beta = draw(st.sampled_from([0, 1, 2, 3.5, 4, 7, 12, 40, INF]))
    metric = draw(st.sampled_from(["L1", "L2"]))
    levels = draw(st.sampled_from([None, 1, 2, 3]))
    leaf = draw(st.sampled_from([1, 2, 16]))
    return text, pattern, alpha, beta, metric, levels, leaf


@given(instances())
def test_index_equals_oracle(inst):
    text, pattern, alpha, beta, metric, levels, leaf = inst
    expected = oracles.shifts(text, pattern, alpha, beta, metric)
    assert shifts(text, pattern, alpha, beta, metric) == expected
    idx = TextIndex(text, len(pattern), levels=levels, leaf_size=leaf)
    res = idx.query(pattern, alpha, beta, metric)
    assert res == (bool(expected), len(expected), expected[0] if expected else None)


@given(instances())
def test_monotone_in_alpha_beta(inst):
    text, pattern, alpha, beta, metric, _, _ = inst
    base = set(shifts(text, pattern, alpha, beta, metric))
    for a2, b2 in ((alpha + 1, beta), (alpha, beta + 1), (INF, beta), (alpha, INF)):
        assert base <= set(shifts(text, pattern, a2, b2, metric))


@given(instances())
def test_l1_implies_l2(inst):
    text, pattern, alpha, beta, _, _, _ = inst
    assert set(shifts(text, pattern, alpha, beta, "L1")) <= set(shifts(text, pattern, alpha, beta, "L2"))


@given(instances(), st.integers(0, 20))
def test_beta_cap(inst, extra):
    text, pattern, alpha, _, _, _, _ = inst
    if alpha == INF:
        return
    cap = len(pattern) * alpha
    assert shifts(text, pattern, alpha, cap + extra, "L1") == shifts(text, pattern, alpha, cap, "L1")


def test_two_dimensional_rotated_path():
    rng = random.Random(4)
    for _ in range(300):
        text = [rng.randint(0, 40) for _ in range(rng.randint(2, 300))]
        idx = TextIndex(text, 2, levels=2, leaf_size=rng.choice([1, 4, 16]))
        p = [rng.randint(0, 40) for _ in range(2)]
        a, b = rng.choice([0, 2, 5, 9, INF]), rng.choice([0, 3, 6, 10, 30])
        expected = oracles.shifts(text, p, a, b, "L1")
        assert idx.query(p, a, b, "L1") == (bool(expected), len(expected), expected[0] if expected else None)


# -- dynamic behaviour ------------------------------------------------------------------------


@given(st.lists(codes, max_size=80), st.integers(1, 4), st.data())
def test_append_equals_rebuild(values, x, data):
    s = SlidingIndex(x, buffer_size=data.draw(st.sampled_from([1, 3, 32])), leaf_size=2)
    for v in values:
        s.append(v)
        if data.draw(st.booleans()) and len(s) >= x:
            fresh = TextIndex(s.text, x, leaf_size=2)
            p = data.draw(st.lists(codes, min_size=x, max_size=x))
            a = data.draw(st.sampled_from([0, 2, INF]))
            b = data.draw(st.sampled_from([0, 5, INF]))
            assert s.query(a, b) == fresh.query(s.pattern, a, b)
            assert fresh.query(p, a, b) == s.index.query(p, a, b)
    assert s.index.point_multiset() == TextIndex(s.text, x).point_multiset()


def test_concurrent_readers_see_consistent_state():
    idx = TextIndex((), 3, buffer_size=4)
    rng = random.Random(1)
    values = [rng.randint(0, 5) for _ in range(3000)]
    errors = []
    stop = threading.Event()

    def reader():
        while not stop.is_set():
            with idx._lock:
                n = idx.n_windows
                res = idx.query([0, 0, 0], INF, INF)
            if res.count != n:
                errors.append((res.count, n))

    threads = [threading.Thread(target=reader) for _ in range(2)]
    for t in threads:
        t.start()
    for v in values:
        idx.append(v)
    stop.set()
    for t in threads:
        t.join()
    assert not errors
    assert idx.query([0, 0, 0], INF, INF).count == len(values) - 2


def test_hash_parity_random():
    rng = random.Random(7)
    for _ in range(200):
        x = rng.randint(1, 4)
        text = [rng.randint(0, 3) for _ in range(rng.randint(0, 50))]
        idx = TextIndex(text, x)
        p = [rng.randint(0, 3) for _ in range(x)]
        r = idx.query(p, 0, 0)
        assert exact_match_hash(idx, p) == (r.found, r.count)


def test_brute_force_match_fields():
    assert brute_force_match(MatchQuery([1, 2, 1, 2], [1, 2], 0, 0)) == (True, 2, 0)
    assert brute_force_match(MatchQuery([1, 2], [5], 0, 0)) == (False, 0, None)


def test_l2_uses_radius():
    # distances (3, 4): L2 norm exactly 5
    assert occurs_at([3, 4], [0, 0], 0, INF, 5, "L2")
    assert not occurs_at([3, 4], [0, 0], 0, INF, 4.99, "L2")
