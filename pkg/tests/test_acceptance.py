"""Acceptance checks, one test per criterion.

Each test records a PASS/FAIL line that conftest prints in the terminal
summary under "acceptance".
"""
import random
import time

import numpy as np
import pytest

import oracles
from thaad.abstraction import (AbstractionConfig, SymbolicTimeInterval, TimePointSeries, TrendSymbol,
                               abstract_series, relation, slope)
from thaad.bench import fit_exponent
from thaad.cli import main
from thaad.encoding import Endpoint, decode, encode_endpoint
from thaad.evaluation import score, sweep
from thaad.io import load_bench
from thaad.matching import (INF, MatchQuery, TextIndex, brute_force_shifts, exact_match_hash,
                            query_match)
from thaad.pipeline import DetectionState, PipelineConfig, detect, run_online_cycle
from thaad.synthetic import DAY, entity_names, generate_synthetic, random_anomalies

RESULTS = []


def record(number, name, ok, detail=""):
    RESULTS.append(f"[{number}] {'PASS' if ok else 'FAIL'} {name}" + (f": {detail}" if detail else ""))
    return ok


def expected_result(text, pattern, alpha, beta, metric):
    s = brute_force_shifts(MatchQuery(text, pattern, alpha, beta, metric))
    return bool(s), len(s), (s[0] if s else None)


def random_code(rng):
    return rng.choice((1, 2)) * 10000 + rng.randrange(7) * 100 + rng.randrange(4)


def random_text(rng, n):
    if rng.random() < 0.5:
        return [random_code(rng) for _ in range(n)]
    return [rng.randrange(40) for _ in range(n)]


def random_pattern(rng, text, x):
    coded = bool(text) and text[0] >= 10000
    if text and len(text) >= x and rng.random() < 0.6:
        s = rng.randrange(len(text) - x + 1)
        steps = (0, 1, 99, 100, 101, 200) if coded else (0, 1, 2, 5)
        return [v + rng.choice((-1, 1)) * rng.choice(steps) for v in text[s:s + x]]
    return [random_code(rng) if coded else rng.randrange(40) for _ in range(x)]


def random_alpha_beta(rng, x, coded):
    unit = 100 if coded else 2
    alpha = rng.choice([0, INF, 1, unit, 2 * unit, rng.uniform(0, 3 * unit)])
    cap = x * (3 * unit if alpha == INF else alpha)
    beta = rng.choice([0, INF, rng.uniform(0, 1.5 * cap), float(rng.randrange(int(cap) + 2))])
    return alpha, beta


def keys(reports):
    return {(r.entity, r.start, r.end, r.origin.value) for r in reports}


@pytest.fixture(scope="module")
def benchmark():
    """The pinned synthetic benchmark: 20 entities, 7 days at one-minute samples, 10 anomalies."""
    return generate_synthetic(0, n_entities=20, duration=7 * DAY, anomalies=10)


# -- 1 ---------------------------------------------------------------------------------------


def test_1_oracle_equivalence():
    rng = random.Random(2024)
    cases = mismatches = 0
    t0 = time.perf_counter()
    while cases < 10_000:
        x = rng.randint(1, 6)
        text = random_text(rng, rng.randint(0, 500))
        idx = TextIndex(text, x, levels=rng.choice([None, 1, 2, 3]), leaf_size=rng.choice([1, 4, 16]))
        for _ in range(5):
            pattern = random_pattern(rng, text, x)
            alpha, beta = random_alpha_beta(rng, x, bool(text) and text[0] >= 10000)
            for metric in ("L1", "L2"):
                cases += 1
                if tuple(query_match(idx, pattern, alpha, beta, metric)) != expected_result(text, pattern, alpha, beta, metric):
                    mismatches += 1
    elapsed = time.perf_counter() - t0
    ok = mismatches == 0 and elapsed <= 120
    record(1, "oracle equivalence", ok, f"{cases} instances, {mismatches} mismatches, {elapsed:.1f}s")
    assert ok


# -- 2 ---------------------------------------------------------------------------------------


def test_2_dynamic_consistency():
    rng = random.Random(7)
    checks = mismatches = 0
    while checks < 1000:
        x = rng.randint(1, 6)
        idx = TextIndex((), x, levels=rng.choice([None, 2, 3]), buffer_size=rng.choice([1, 4, 16, 64]))
        text = []
        for _ in range(40):
            for _ in range(rng.randint(1, 8)):
                v = random_code(rng)
                text.append(v)
                idx.append(v)
            pattern = random_pattern(rng, text, x)
            alpha, beta = random_alpha_beta(rng, x, True)
            metric = rng.choice(["L1", "L2"])
            fresh = TextIndex(text, x, levels=idx.levels)
            checks += 1
            got = idx.query(pattern, alpha, beta, metric)
            if got != fresh.query(pattern, alpha, beta, metric) or \
                    tuple(got) != expected_result(text, pattern, alpha, beta, metric):
                mismatches += 1
        if idx.point_multiset() != TextIndex(text, x).point_multiset():
            mismatches += 1
    ok = mismatches == 0
    record(2, "dynamic consistency", ok, f"{checks} interleavings, {mismatches} mismatches")
    assert ok


# -- 3 ---------------------------------------------------------------------------------------


def test_3_encoding_fidelity():
    codes = set()
    bad = 0
    for is_open in (True, False):
        for sym in TrendSymbol:
            for var in range(100):
                c = encode_endpoint(Endpoint(0, var, sym, is_open))
                codes.add(c)
                bad += decode(c) != (is_open, sym, var)
    a = encode_endpoint(Endpoint(0, 0, TrendSymbol.I_H, True))
    b = encode_endpoint(Endpoint(0, 1, TrendSymbol.I_M, True))
    ok = bad == 0 and len(codes) == 1400 and (a, b, a - b) == (20600, 20501, 99)
    record(3, "encoding fidelity", ok, f"{len(codes)} codes, {bad} round-trip errors, {a} - {b} = {a - b}")
    assert ok


# -- 4 ---------------------------------------------------------------------------------------


def monotone(values, increasing):
    pairs = zip(values, values[1:])
    return all(a <= b for a, b in pairs) if increasing else all(a >= b for a, b in pairs)


def test_4_monotonicity(benchmark):
    rng = random.Random(11)
    violations = 0
    for _ in range(2000):
        x = rng.randint(1, 6)
        text = random_text(rng, rng.randint(0, 200))
        coded = bool(text) and text[0] >= 10000
        pattern = random_pattern(rng, text, x)
        alpha, beta = random_alpha_beta(rng, x, coded)
        base = {m: set(brute_force_shifts(MatchQuery(text, pattern, alpha, beta, m))) for m in ("L1", "L2")}
        violations += not base["L1"] <= base["L2"]
        bump = 100 if coded else 2
        for a2, b2 in ((alpha + bump, beta), (alpha, beta + bump), (INF, beta), (alpha, INF)):
            for m in ("L1", "L2"):
                violations += not base[m] <= set(brute_force_shifts(MatchQuery(text, pattern, a2, b2, m)))

    series, truth = benchmark
    alphas = [0, 1, 100, 200, 450, 750]
    betas = sorted({m * a for a in alphas for m in (1, 2, 3, 4)})
    rows = sweep(series, truth, alphas, betas, xs=(5,), metrics=("L1", "L2"))
    grid = {(r.alpha, r.beta, r.metric): r.result for r in rows}
    trend = 0
    for m in ("L1", "L2"):
        for a in alphas:
            res = [grid[a, b, m] for b in betas]
            trend += (not monotone([r.fp for r in res], True)) + (not monotone([r.fn for r in res], False))
        for b in betas:
            res = [grid[a, b, m] for a in alphas]
            trend += (not monotone([r.fp for r in res], True)) + (not monotone([r.fn for r in res], False))
    ok = violations == 0 and trend == 0
    fn_range = (min(r.result.fn for r in rows), max(r.result.fn for r in rows))
    fp_range = (min(r.result.fp for r in rows), max(r.result.fp for r in rows))
    record(4, "monotonicity", ok, f"{violations} instance violations over 2000 instances, {trend} sweep trend "
           f"violations over {len(rows)} settings (FP {fp_range[0]}..{fp_range[1]}, FN {fn_range[0]}..{fn_range[1]})")
    assert ok


# -- 5 ---------------------------------------------------------------------------------------

WORKED = [200, 190, 180, 170, 200]


def worked_series():
    return TimePointSeries("e", "v", np.arange(5), np.asarray(WORKED, float))


def test_5a_abstraction_goldens():
    cfg = AbstractionConfig(window=4)
    const = abstract_series(TimePointSeries("e", "v", np.arange(10), np.full(10, 100.0)), cfg)
    rel = relation(WORKED[:4], WORKED[4])
    (last,) = abstract_series(worked_series(), cfg)
    ok = (const == [SymbolicTimeInterval("e", "v", 4, 9, TrendSymbol.S)]
          and abs(rel - 1.081) <= 1e-4
          and last.symbol in (TrendSymbol.S, TrendSymbol.I_L)
          and last.symbol is TrendSymbol.I_L)
    record("5a", "abstraction goldens (constant, relation, symbol)", ok,
           f"constant -> {[(i.begin, i.finish, i.symbol.label) for i in const]}, relation {rel:.5f}, "
           f"final symbol {last.symbol.label}")
    assert ok


@pytest.mark.xfail(strict=True, reason="slope of the worked series is 41.19 by the angle definition; "
                                       "the 20.16 target is not reproducible (see decisions ledger)")
def test_5b_slope_golden():
    s = slope(WORKED)
    independent = oracles.slope(WORKED)
    ok = abs(s - 20.16) <= 0.05
    record("5b", "abstraction golden slope 20.16 +- 0.05", ok,
           f"computed {s:.4f} (independent oracle {independent:.4f})")
    assert ok


# -- 6 ---------------------------------------------------------------------------------------


def test_6_end_to_end_synthetic(benchmark):
    series, truth = benchmark
    again_series, again_truth = generate_synthetic(0, n_entities=20, duration=7 * DAY, anomalies=10)
    same_data = again_truth == truth and all(
        np.array_equal(a.values, b.values) and a.entity == b.entity for a, b in zip(series, again_series))
    t0 = time.perf_counter()
    reports = detect(series, PipelineConfig())
    elapsed = time.perf_counter() - t0
    res = score(reports, truth)
    hit = len(truth) - res.fn
    deterministic = same_data and keys(detect(series, PipelineConfig())) == keys(reports)
    # the generator draws the anomalies first, so the same rng state reproduces them
    specs = random_anomalies(np.random.default_rng(0), entity_names(20), 7 * DAY, 10)
    injected = [(s.entity, s.start, s.end) for s in specs] == [(e.entity, e.start, e.end) for e in truth]
    weakest = min(s.magnitude for s in specs)
    ok = (injected and len(truth) == 10 and weakest >= 2 and hit >= 9 and res.fp <= 5
          and elapsed <= 60 and deterministic)
    record(6, "end-to-end synthetic detection", ok,
           f"recall {hit}/{len(truth)}, FP {res.fp}, TP reports {res.tp}, weakest anomaly {weakest:.2f}x, "
           f"{elapsed:.1f}s, deterministic={deterministic}")
    assert ok


# -- 7 ---------------------------------------------------------------------------------------


def test_7_exact_mode_parity(benchmark):
    rng = random.Random(5)
    bad = 0
    for _ in range(1000):
        x = rng.randint(1, 6)
        text = random_text(rng, rng.randint(0, 300))
        idx = TextIndex(text, x)
        p = random_pattern(rng, text, x)
        r = query_match(idx, p, 0, 0)
        bad += exact_match_hash(idx, p) != (r.found, r.count)
    series, _ = benchmark
    index_reports = keys(detect(series, PipelineConfig(alpha=0, beta=0)))
    hash_reports = keys(detect(series, PipelineConfig(alpha=0, beta=0, matcher="hash")))
    ok = bad == 0 and index_reports == hash_reports
    record(7, "exact-mode parity", ok, f"1000 cases, {bad} mismatches; pipeline {len(index_reports)} "
           f"reports via index, {len(hash_reports)} via hash, equal={index_reports == hash_reports}")
    assert ok


# -- 8 ---------------------------------------------------------------------------------------


def test_8_bench_emission(tmp_path):
    out = tmp_path / "bench.csv"
    code = main(["bench", "--min-log2", "10", "--max-log2", "17", "--x", "5", "-o", str(out)])
    rows = load_bench(out)
    complete = code == 0 and [r["n"] for r in rows] == [2 ** k for k in range(10, 18)] and \
        all(r["x"] == 5 and r["index_ns"] > 0 for r in rows)
    exponent = fit_exponent(rows) if complete else float("nan")
    ok = complete and exponent < 0.5
    record(8, "bench emission", ok, f"{len(rows)} rows, index exponent {exponent:.3f}, "
           f"oracle exponent {fit_exponent(rows, 'oracle_ns'):.3f}" if complete else f"exit {code}, {len(rows)} rows")
    assert ok


# -- 9 ---------------------------------------------------------------------------------------


def records_of(series):
    recs = [(s.entity, s.variable, int(t), float(v)) for s in series for t, v in zip(s.timestamps, s.values)]
    recs.sort(key=lambda r: r[2])
    return recs


def cycles(series, k):
    state = DetectionState(PipelineConfig())
    recs = records_of(series)
    lo_t, hi_t = recs[0][2], recs[-1][2] + 1
    bounds = [lo_t + (hi_t - lo_t) * i // k for i in range(k + 1)]
    out, pos = [], 0
    for end in bounds[1:]:
        batch = []
        while pos < len(recs) and recs[pos][2] < end:
            batch.append(recs[pos])
            pos += 1
        out += run_online_cycle(batch, state)
    return keys(out)


def test_9_batch_stream_equivalence(benchmark):
    datasets = {"benchmark": benchmark[0],
                "seed 3": generate_synthetic(3, n_entities=5, duration=2 * DAY, anomalies=4)[0]}
    details, ok = [], True
    for name, series in datasets.items():
        sets = {k: cycles(series, k) for k in (1, 5, 20)}
        same = sets[1] == sets[5] == sets[20] == keys(detect(series))
        ok &= same
        details.append(f"{name}: {len(sets[1])} reports, equal={same}")
    record(9, "batch/stream equivalence", ok, "; ".join(details))
    assert ok
