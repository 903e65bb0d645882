"""Exhaustive enumeration over all m^n hash sequences (exact oracle)."""
from __future__ import annotations

import itertools
import math
from collections import Counter

import numpy as np

from .pmf import exact_pmf
from .simulator import insert_all

ENUM_CAP = 2**20

# statistics that depend only on the multiset of hash values; for these
# the m^n sequences are visited one multiset at a time, with its count
ORDER_FREE = {"overflow", "parking_overflow", "block", "unsuccessful",
              "last_not_full", "empty_in_last"}
STATISTICS = tuple(sorted(ORDER_FREE | {"displacement"}))


def _multisets(m, n):
    fact = math.factorial(n)
    for combo in itertools.combinations_with_replacement(range(m), n):
        w = fact
        for c in Counter(combo).values():
            w //= math.factorial(c)
        yield combo, w


def _sequences(m, n):
    for seq in itertools.product(range(m), repeat=n):
        yield seq, 1


def _table_values(m, b, seq, statistic, heuristic):
    if statistic == "parking_overflow":
        return [insert_all(m, b, seq, "fcfs", "parking").overflow_count]
    t = insert_all(m, b, seq, heuristic, "cyclic")
    if statistic == "displacement":
        return t.displacement().tolist()
    if statistic == "overflow":
        # keys whose probe sequence wraps from bucket m-1 to bucket 0
        return [int(np.sum(t.position < t.home))]
    occ = t.occupancy()
    if statistic == "last_not_full":
        return [int(occ[-1] < b)]
    if statistic == "empty_in_last":
        return [int(b - occ[-1])]
    if statistic == "unsuccessful":
        u = 0
        while occ[u % m] == b:
            u += 1
        return [u]
    if statistic == "block":
        if occ[-1] == b:
            return []
        k = 1
        while k < m and occ[m - 1 - k] == b:
            k += 1
        return [k]
    raise ValueError(f"unknown statistic {statistic!r}")


def enumerate_counts(m, b, n, statistic, heuristic="fcfs", cap=ENUM_CAP):
    """Exact counts {value: number of (sequence, observation) pairs} and their total.

    overflow          keys wrapping from the last bucket to the first (cyclic)
    parking_overflow  keys lost past the last bucket (parking)
    displacement      per-key displacement under the heuristic (cyclic)
    block             length of the last block, tables whose last bucket is not full
    unsuccessful      full buckets inspected by a search starting at bucket 0
    last_not_full     indicator that the last bucket has room
    empty_in_last     number of empty slots in the last bucket
    """
    if statistic not in STATISTICS:
        raise ValueError(f"unknown statistic {statistic!r}")
    if m < 1 or b < 1 or n < 0:
        raise ValueError("need m, b >= 1 and n >= 0")
    if m**n > cap:
        raise ValueError(f"m^n = {m**n} exceeds the enumeration cap {cap}")
    if statistic != "parking_overflow" and n > b * m:
        raise ValueError("cyclic statistics need n <= bm")
    if statistic in ("block", "unsuccessful") and n >= b * m:
        raise ValueError("the table has no non-full bucket")
    order_free = statistic in ORDER_FREE or heuristic == "rh"
    source = _multisets(m, n) if order_free else _sequences(m, n)
    counts = Counter()
    total = 0
    for seq, w in source:
        for v in _table_values(m, b, seq, statistic, heuristic):
            counts[v] += w
            total += w
    return counts, total


def brute_force_enumerate(m, b, n, statistic, heuristic="fcfs", cap=ENUM_CAP):
    """Exact law of the statistic over all m^n equally likely hash sequences."""
    counts, total = enumerate_counts(m, b, n, statistic, heuristic, cap)
    return exact_pmf(dict(counts), total)
