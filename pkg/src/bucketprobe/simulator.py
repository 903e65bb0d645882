"""Linear probing with buckets of size b: insertion engines and profiles.

Buckets are numbered 0..m-1.  A key hashed to bucket i probes i, i+1, ...
until it finds room; in the cyclic topology probing wraps from m-1 to 0,
in the parking topology a key running past bucket m-1 is lost.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

OVERFLOWED = -1
HEURISTICS = ("fcfs", "rh", "lcfs")
TOPOLOGIES = ("cyclic", "parking")


def _norm(value, allowed, what):
    v = str(value).lower()
    if v not in allowed:
        raise ValueError(f"unknown {what} {value!r}; expected one of {allowed}")
    return v


@dataclass
class TableState:
    """Final state of a table after a sequence of insertions."""
    m: int
    b: int
    topology: str
    heuristic: str
    buckets: list        # per bucket, the indices of its resident keys
    ids: np.ndarray      # key ids used for tie-breaking
    home: np.ndarray
    position: np.ndarray  # bucket index, or OVERFLOWED
    probes: np.ndarray   # buckets inspected by the key's final probe sequence
    overflow_count: int

    @property
    def n(self):
        return len(self.home)

    def placed(self):
        return self.position != OVERFLOWED

    def displacement(self):
        """Displacements of the placed keys, in key order."""
        ok = self.placed()
        d = self.position[ok] - self.home[ok]
        if self.topology == "cyclic":
            d %= self.m
        return d

    def occupancy(self):
        return np.array([len(bk) for bk in self.buckets], dtype=np.int64)

    def layout(self):
        """Per bucket, the sorted ids of its keys (order inside a bucket is immaterial)."""
        return [sorted(int(self.ids[k]) for k in bk) for bk in self.buckets]


def _check_hashes(m, b, hashes, topology):
    h = np.asarray(hashes, dtype=np.int64).ravel()
    if m < 1 or b < 1:
        raise ValueError("need m >= 1 and b >= 1")
    if h.size and (h.min() < 0 or h.max() >= m):
        raise ValueError("hash values must lie in [0, m)")
    if topology == "cyclic" and h.size > b * m:
        raise ValueError(f"{h.size} keys do not fit into {m} buckets of size {b}")
    return h


def insert_all(m, b, hashes, heuristic="fcfs", topology="cyclic", ids=None):
    """Insert keys with the given home buckets one by one.

    fcfs: the incoming key moves on past full buckets.
    rh:   at a full bucket the key (resident or incoming) that has probed the
          fewest buckets moves on; ties move the key with the largest id.
    lcfs: the incoming key takes the slot of the resident that arrived in the
          bucket most recently, and that resident moves on.
    ids default to 0..n-1 (insertion order).
    """
    heuristic = _norm(heuristic, HEURISTICS, "heuristic")
    topology = _norm(topology, TOPOLOGIES, "topology")
    h = _check_hashes(m, b, hashes, topology)
    n = h.size
    ids = np.arange(n, dtype=np.int64) if ids is None else np.asarray(ids).ravel()
    if ids.size != n or len(set(ids.tolist())) != n:
        raise ValueError("ids must be distinct, one per key")
    home = h.tolist()
    idl = ids.tolist()
    pos = [OVERFLOWED] * n
    stamp = [0] * n
    buckets = [[] for _ in range(m)]
    cyclic = topology == "cyclic"
    lost = 0
    clock = 0

    for key in range(n):
        cur = key
        i = home[cur]
        while True:
            bk = buckets[i]
            if len(bk) < b:
                bk.append(cur)
                pos[cur] = i
                clock += 1
                stamp[cur] = clock
                break
            if heuristic == "rh":
                # the candidate with the smallest displacement here moves on
                dcur = (i - home[cur]) % m if cyclic else i - home[cur]
                loser, slot = cur, -1
                dl, il = dcur, idl[cur]
                for s, r in enumerate(bk):
                    dr = (i - home[r]) % m if cyclic else i - home[r]
                    if dr < dl or (dr == dl and idl[r] > il):
                        loser, slot, dl, il = r, s, dr, idl[r]
                if slot >= 0:
                    bk[slot] = cur
                    pos[cur] = i
                    clock += 1
                    stamp[cur] = clock
                    cur = loser
            elif heuristic == "lcfs":
                s = max(range(len(bk)), key=lambda t: stamp[bk[t]])
                loser = bk[s]
                bk[s] = cur
                pos[cur] = i
                clock += 1
                stamp[cur] = clock
                cur = loser
            i += 1
            if i == m:
                if not cyclic:
                    pos[cur] = OVERFLOWED
                    lost += 1
                    break
                i = 0

    position = np.array(pos, dtype=np.int64)
    home_a = np.array(home, dtype=np.int64)
    probes = np.where(position == OVERFLOWED, m - home_a,
                      ((position - home_a) % m if cyclic else position - home_a) + 1)
    return TableState(m, b, topology, heuristic, buckets, ids, home_a, position, probes, lost)


def _find(parent, i):
    root = i
    while parent[root] != root:
        root = parent[root]
    while parent[i] != root:
        parent[i], i = root, parent[i]
    return root


def fcfs_positions(m, b, hashes, topology="cyclic"):
    """Final buckets under FCFS (OVERFLOWED for lost keys), in key order.

    Uses a union-find "next bucket with room" structure; equivalent to
    insert_all(..., "fcfs") but much faster.
    """
    topology = _norm(topology, TOPOLOGIES, "topology")
    h = _check_hashes(m, b, hashes, topology)
    cyclic = topology == "cyclic"
    parent = list(range(m + 1))  # m is the sink past the last bucket
    load = [0] * m
    out = []
    for home in h.tolist():
        i = _find(parent, home)
        if i == m:
            if not cyclic:
                out.append(OVERFLOWED)
                continue
            i = _find(parent, 0)
        out.append(i)
        load[i] += 1
        if load[i] == b:
            parent[i] = i + 1
    return np.array(out, dtype=np.int64)


def rh_positions(m, b, hashes, ids, topology="cyclic"):
    """Final buckets under Robin Hood, using order independence.

    The Robin Hood table does not depend on the insertion order, so keys
    are inserted in the order that never triggers an eviction: by home
    bucket starting just after a bucket that nothing overflows, then by id.
    FCFS insertion in that order gives the Robin Hood table.
    """
    topology = _norm(topology, TOPOLOGIES, "topology")
    h = _check_hashes(m, b, hashes, topology)
    ids = np.asarray(ids)
    n = h.size
    start = 0
    if topology == "cyclic" and n:
        if n == b * m:
            raise ValueError("order-free Robin Hood construction needs a non-full bucket")
        x = np.bincount(h, minlength=m)
        q = profile_from_counts(x, b, "cyclic").q
        start = (int(np.flatnonzero(q == 0)[0]) + 1) % m
    order = np.lexsort((ids, (h - start) % m))
    pos = np.empty(n, dtype=np.int64)
    pos[order] = fcfs_positions(m, b, h[order], topology)
    return pos


@dataclass
class ProfileVec:
    x: np.ndarray
    h: np.ndarray
    q: np.ndarray
    y: np.ndarray


def profile_from_counts(x, b, topology="cyclic"):
    """Profile H, overflow Q and Y = min(H, b) from per-bucket hash counts.

    interval: Q_{-1} = 0.  cyclic: the stationary solution on the circle,
    which needs sum(x) < bm.  Both use Q_i = S_i - min(0, min_{j<=i} S_j)
    with S the partial sums of x - b; the cyclic case runs over two periods
    and keeps the second.
    """
    x = np.asarray(x, dtype=np.int64).ravel()
    m = x.size
    topology = {"parking": "interval"}.get(topology, topology)
    if topology not in ("cyclic", "interval"):
        raise ValueError(f"unknown topology {topology!r}")
    if topology == "cyclic":
        if x.sum() >= b * m:
            raise ValueError("cyclic profile needs fewer than bm keys")
        xx = np.concatenate([x, x])
    else:
        xx = x
    s = np.cumsum(xx - b)
    q = s - np.minimum(np.minimum.accumulate(s), 0)
    if topology == "cyclic":
        q = q[m:]
    qprev = np.concatenate([[q[-1] if topology == "cyclic" else 0], q[:-1]])
    h = x + qprev
    return ProfileVec(x=x, h=h, q=q, y=np.minimum(h, b))


def _rng(seed, rep):
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(rep)]))


def sample_exact(m, b, n, seed, rep=0):
    """n independent uniform home buckets."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    return _rng(seed, rep).integers(0, m, size=n)


def sample_poisson(m, b, alpha, seed, rep=0):
    """Poisson(b alpha m) many uniform home buckets."""
    rng = _rng(seed, rep)
    n = rng.poisson(b * alpha * m)
    return rng.integers(0, m, size=n)


def draw_ids(rng, n):
    """Distinct 63-bit key ids."""
    while True:
        ids = rng.integers(0, 2**63 - 1, size=n, dtype=np.int64)
        if np.unique(ids).size == n:
            return ids
