"""Girth and exact counts of 4-, 6- and 8-cycles in bipartite graphs.

Counts come from the biadjacency matrix ``B`` (rows on the smaller side).
Write ``P`` for ``B B^T`` with its diagonal zeroed, so ``P[i, j]`` is the
number of columns adjacent to both rows ``i`` and ``j``.  A ``2L``-cycle is a
closed walk through ``L`` distinct rows and ``L`` distinct columns; closed
walks in ``P`` already force distinct consecutive rows, and the remaining
coincidences (repeated rows or repeated columns) are removed in closed form by
inclusion-exclusion over which walk positions share a column.

:func:`brute_force_census` enumerates simple cycles directly and is the
independent check used by the tests.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import NotBipartite, TooLarge
from .gf2codes import BinaryMatrix
from .model import GraphicalModel

__all__ = [
    "CycleCensus",
    "census",
    "brute_force_census",
    "biadjacency",
    "bipartition",
    "girth_bfs",
    "count_4_cycles",
]

LENGTHS = (4, 6, 8)


@dataclass(frozen=True)
class CycleCensus:
    """Girth (``math.inf`` when acyclic) and exact counts per cycle length."""

    girth: float
    counts: dict[int, int] = field(default_factory=dict)

    def n(self, length: int) -> int:
        return self.counts.get(length, 0)

    def key(self) -> tuple:
        """Ordering key where larger is better: girth up, then fewer g and g+2 cycles."""
        g = self.girth
        if math.isinf(g):
            return (g, 0, 0)
        return (g, -self.n(int(g)), -self.n(int(g) + 2))

    def csv_row(self) -> str:
        """``girth,N_g,N_{g+2}[,N_{g+4}]`` restricted to the counted lengths."""
        if math.isinf(self.girth):
            return "inf"
        g = int(self.girth)
        vals = [str(g)] + [str(self.counts[L]) for L in (g, g + 2, g + 4) if L in self.counts]
        return ",".join(vals)


def biadjacency(obj) -> np.ndarray:
    """0/1 biadjacency matrix of a parity-check matrix, array or bipartite model.

    For a model the two colour classes of its constraint graph (trivial
    constraints excluded) become rows and columns.  Parallel edges and odd
    cycles raise :class:`NotBipartite`.
    """
    if isinstance(obj, BinaryMatrix):
        return obj.to_array().astype(np.int64)
    if isinstance(obj, GraphicalModel):
        return _model_biadjacency(obj)
    arr = np.asarray(obj, dtype=np.int64)
    if arr.ndim != 2:
        raise ValueError("biadjacency needs a 2-D array")
    return arr


def _model_biadjacency(gm: GraphicalModel) -> np.ndarray:
    return bipartition(gm)[2]


def bipartition(gm: GraphicalModel) -> tuple[list[str], list[str], np.ndarray]:
    """Colour classes of the constraint graph and its biadjacency matrix.

    Each component is coloured from its lowest-ordered constraint, which gets
    the row side.
    """
    nodes = [c.cid for c in gm.constraints if not c.is_trivial]
    index = {cid: i for i, cid in enumerate(nodes)}
    adj: list[list[int]] = [[] for _ in nodes]
    seen_pairs = set()
    for h in gm.hiddens:
        a, b = index[h.endpoints[0]], index[h.endpoints[1]]
        pair = (min(a, b), max(a, b))
        if pair in seen_pairs:
            raise NotBipartite(f"parallel hidden variables join {h.endpoints[0]} and {h.endpoints[1]}")
        seen_pairs.add(pair)
        adj[a].append(b)
        adj[b].append(a)
    colour = [-1] * len(nodes)
    for start in range(len(nodes)):
        if colour[start] >= 0:
            continue
        colour[start] = 0
        queue = deque([start])
        while queue:
            u = queue.popleft()
            for w in adj[u]:
                if colour[w] < 0:
                    colour[w] = 1 - colour[u]
                    queue.append(w)
                elif colour[w] == colour[u]:
                    raise NotBipartite("the constraint graph has an odd cycle")
    left = [i for i in range(len(nodes)) if colour[i] == 0]
    right = [i for i in range(len(nodes)) if colour[i] == 1]
    lpos = {v: i for i, v in enumerate(left)}
    rpos = {v: i for i, v in enumerate(right)}
    out = np.zeros((len(left), len(right)), dtype=np.int64)
    for a, b in seen_pairs:
        if colour[a] == 0:
            out[lpos[a], rpos[b]] = 1
        else:
            out[lpos[b], rpos[a]] = 1
    return [nodes[i] for i in left], [nodes[i] for i in right], out


def _orient(b: np.ndarray) -> np.ndarray:
    b = (np.asarray(b) != 0).astype(np.int64)
    return b.T if b.shape[0] > b.shape[1] else b


def count_4_cycles(b) -> int:
    """Number of 4-cycles only (the cheapest census)."""
    b = _orient(biadjacency(b))
    p = b @ b.T
    np.fill_diagonal(p, 0)
    return int((p * (p - 1)).sum() // 4)


def _counts(b: np.ndarray, max_len: int) -> dict[int, int]:
    b = _orient(b)
    p = b @ b.T
    np.fill_diagonal(p, 0)
    out = {4: int((p * (p - 1)).sum() // 4)}
    if max_len < 6:
        return out
    d = b.sum(axis=0)  # column degrees
    p2 = p @ p
    tr3 = int(np.trace(p2 @ p))
    # S_c: sum of P over ordered row pairs inside column c
    pb = p @ b
    s_tot = (b * pb).sum(axis=0)
    x6 = int(((d - 2) * s_tot).sum())
    t6 = int((d * (d - 1) * (d - 2)).sum())
    out[6] = (tr3 - 3 * x6 + 2 * t6) // 6
    if max_len < 8:
        return out
    t0 = int(np.trace(p2 @ p2)) - 2 * int((np.diag(p2) ** 2).sum()) + int((p**4).sum())
    p2off = p2.copy()
    np.fill_diagonal(p2off, 0)
    quad2 = (b * (p2off @ b)).sum(axis=0)
    s2 = (b * pb**2).sum(axis=0)
    qq = (b * ((p * p) @ b)).sum(axis=0)
    # one pair of adjacent walk positions sharing a column
    a_term = int(((d - 2) * quad2).sum() - (s2 - qq).sum())
    # one pair of opposite positions sharing a column
    b_term = int((s_tot**2 - 4 * s2 + 2 * qq).sum())
    m = b.T @ b  # column intersection sizes
    np.fill_diagonal(m, 0)
    dd = np.outer(d - 2, d - 2)
    mask = ~np.eye(len(d), dtype=bool)
    c_term = int((m * (m - 1) * (dd - (m - 2)) * mask).sum())
    e_term = int((m * (m - 1) * (m - 2) * (m - 3)).sum())
    f_term = int(((d - 2) * (d - 3) * s_tot).sum())
    g_term = int((d * (d - 1) * (d - 2) * (d - 3)).sum())
    total = t0 - 4 * a_term - 2 * b_term + 2 * c_term + e_term + 8 * f_term - 3 * g_term
    out[8] = total // 8
    return out


def girth_bfs(b) -> float:
    """Exact girth of the bipartite graph by breadth-first search from every vertex."""
    b = (biadjacency(b) != 0)
    r, c = b.shape
    adj = [list(np.nonzero(b[i])[0] + r) for i in range(r)]
    adj += [list(np.nonzero(b[:, j])[0]) for j in range(c)]
    best = math.inf
    for root in range(r + c):
        dist = {root: 0}
        parent = {root: -1}
        queue = deque([root])
        while queue:
            u = queue.popleft()
            if 2 * dist[u] + 1 >= best:
                break
            for w in adj[u]:
                if w not in dist:
                    dist[w] = dist[u] + 1
                    parent[w] = u
                    queue.append(w)
                elif parent[u] != w:
                    best = min(best, dist[u] + dist[w] + 1)
    return best


def census(gm, max_len: int = 8) -> CycleCensus:
    """Girth and exact 4/6/8-cycle counts up to ``max_len``.

    ``gm`` may be a bipartite :class:`GraphicalModel`, a parity-check
    :class:`BinaryMatrix` or a 0/1 array.
    """
    if max_len not in LENGTHS:
        raise ValueError("max_len must be 4, 6 or 8")
    b = biadjacency(gm)
    counts = _counts(b, max_len) if b.size else {L: 0 for L in LENGTHS if L <= max_len}
    counts = {L: v for L, v in counts.items() if L <= max_len}
    nonzero = [L for L in sorted(counts) if counts[L]]
    if nonzero:
        g = nonzero[0]
    else:
        g = girth_bfs(b) if b.size else math.inf
    if not math.isinf(g) and g + 2 <= 8 and g + 2 not in counts:
        counts.update({L: v for L, v in _counts(b, g + 2).items() if L not in counts})
    return CycleCensus(g, counts)


def brute_force_census(gm, max_len: int = 8) -> CycleCensus:
    """Census by enumerating every simple cycle (at most 20 vertices)."""
    if max_len not in LENGTHS:
        raise ValueError("max_len must be 4, 6 or 8")
    b = (biadjacency(gm) != 0)
    r, c = b.shape
    nv = r + c
    if nv > 20:
        raise TooLarge(f"brute-force census supports at most 20 vertices, got {nv}")
    adj = [[r + j for j in range(c) if b[i, j]] for i in range(r)]
    adj += [[i for i in range(r) if b[i, j]] for j in range(c)]
    twice = {L: 0 for L in LENGTHS}
    shortest = math.inf
    for s in range(nv):
        stack = [(s, (s,))]
        while stack:
            v, path = stack.pop()
            for w in adj[v]:
                if w == s and len(path) >= 3:
                    L = len(path)
                    shortest = min(shortest, L)
                    if L in twice:
                        twice[L] += 1
                elif w > s and w not in path and len(path) < 8:
                    stack.append((w, path + (w,)))
    counts = {L: twice[L] // 2 for L in LENGTHS if L <= max_len}
    if math.isinf(shortest) and nv:
        shortest = girth_bfs(b)
    if not math.isinf(shortest) and shortest + 2 <= 8:
        counts.setdefault(int(shortest) + 2, twice[int(shortest) + 2] // 2)
        counts.setdefault(int(shortest), twice.get(int(shortest), 0) // 2)
    return CycleCensus(shortest, counts)
