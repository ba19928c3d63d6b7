"""
Query time of the window index as the history grows
===================================================

A single entity string is grown by appends; at each power-of-two length the
same non-matching patterns are timed against the index and against a plain
scan. A log-log fit gives the growth exponent of each.
"""
from thaad.bench import fit_exponent, run_bench

rows = run_bench(min_log2=8, max_log2=14, queries=10, oracle_queries=2)
for r in rows:
    print(f"n={r['n']:6d}  index {r['index_ns'] / 1e3:8.1f} us   scan {r['oracle_ns'] / 1e6:8.2f} ms")

print("index exponent %.2f, scan exponent %.2f" % (fit_exponent(rows), fit_exponent(rows, "oracle_ns")))
