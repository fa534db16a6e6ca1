"""Tree-inducing cuts and the cut-set style bounds built on them.

A tree-inducing cut is a set of edges whose removal leaves exactly two
components, both acyclic.  In a connected graph every such cut has
``|E| - |V| + 2`` edges.  Its size ``X_T`` drives three bounds:

* a ``q^m``-ary model with cut size ``X_T`` gives minimal tree complexity at
  most ``m * X_T``;
* a graph with cut size ``X_T`` has at least ``C(X_T, 2)`` cycles;
* read backwards, a code with tree complexity at least ``t`` needs at least
  ``C(floor(t / m), 2)`` cycles in any ``q^m``-ary model.

The true tree complexity is never computed here; callers supply an assumed
lower value (for instance :func:`wolf_estimate`).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

import networkx as nx

from .errors import Disconnected
from .gf2codes import BinaryMatrix
from .model import GraphicalModel, natural_key, verify_qm

__all__ = [
    "BoundReport",
    "constraint_graph",
    "ti_cut_size",
    "ti_cut_witness",
    "is_tree_inducing",
    "cycle_lower_bound",
    "tree_complexity_bounds",
    "wolf_estimate",
    "model_bounds",
]


def constraint_graph(obj) -> nx.MultiGraph:
    """Graph whose vertices are constraints and whose edges are hidden variables.

    A parity-check matrix is read as its Tanner graph: vertices ``x<j>`` for
    columns and ``c<i>`` for rows, one edge ``e<i>_<j>`` per nonzero entry.
    Trivial constraints and visible half-edges are left out.
    """
    g = nx.MultiGraph()
    if isinstance(obj, GraphicalModel):
        g.add_nodes_from(c.cid for c in obj.constraints if not c.is_trivial)
        for h in obj.hiddens:
            g.add_edge(h.endpoints[0], h.endpoints[1], key=h.label)
        return g
    if isinstance(obj, BinaryMatrix):
        g.add_nodes_from(f"x{j}" for j in range(obj.cols))
        g.add_nodes_from(f"c{i}" for i in range(obj.rows))
        for i in range(obj.rows):
            for j in obj.row_support(i):
                g.add_edge(f"c{i}", f"x{j}", key=f"e{i}_{j}")
        return g
    if isinstance(obj, nx.Graph):
        return nx.MultiGraph(obj)
    raise TypeError(f"cannot build a constraint graph from {type(obj).__name__}")


def ti_cut_size(obj) -> int:
    """Size of every tree-inducing cut: ``|E| - |V| + 2``."""
    g = constraint_graph(obj)
    if g.number_of_nodes() == 0 or not nx.is_connected(g):
        raise Disconnected("tree-inducing cuts need a connected graph")
    return g.number_of_edges() - g.number_of_nodes() + 2


def ti_cut_witness(obj) -> list[tuple[str, str, str]]:
    """One tree-inducing cut, as ``(u, v, edge_label)`` triples.

    The non-tree edges of a breadth-first spanning tree (rooted at the
    lowest vertex) are cut, together with the tree edge whose removal splits
    the tree most evenly (ties to the lowest edge label).
    """
    g = constraint_graph(obj)
    if g.number_of_nodes() < 2 or not nx.is_connected(g):
        raise Disconnected("a tree-inducing cut needs a connected graph with at least two vertices")
    root = min(g.nodes, key=natural_key)
    tree_edges: set[str] = set()
    parent: dict[str, tuple[str, str]] = {}
    order = [root]
    seen = {root}
    for u in order:
        for _, w, key in sorted(g.edges(u, keys=True), key=lambda e: natural_key(e[2])):
            if w not in seen:
                seen.add(w)
                parent[w] = (u, key)
                tree_edges.add(key)
                order.append(w)
    size = {v: 1 for v in g.nodes}
    for v in reversed(order[1:]):
        size[parent[v][0]] += size[v]
    total = g.number_of_nodes()
    child, (par, key) = min(
        parent.items(), key=lambda item: (-min(size[item[0]], total - size[item[0]]), natural_key(item[1][1]))
    )
    cut = [(u, v, k) for u, v, k in g.edges(keys=True) if k not in tree_edges]
    cut.append((par, child, key))
    return sorted(cut, key=lambda e: natural_key(e[2]))


def is_tree_inducing(obj, cut) -> bool:
    """True when removing ``cut`` leaves exactly two components, both acyclic."""
    g = constraint_graph(obj)
    keys = {e[2] for e in cut}
    h = nx.MultiGraph()
    h.add_nodes_from(g.nodes)
    h.add_edges_from((u, v, k) for u, v, k in g.edges(keys=True) if k not in keys)
    comps = list(nx.connected_components(h))
    if len(comps) != 2:
        return False
    return all(h.subgraph(c).number_of_edges() == len(c) - 1 for c in comps)


def cycle_lower_bound(x_t: int) -> int:
    """Least number of cycles in a graph with tree-inducing cut size ``x_t``.

    Every pair of cut edges closes a distinct cycle through the two trees,
    which needs each cut edge to join the two components.  Graphs with no
    such cut can have fewer cycles: two triangles sharing a vertex have
    ``x_t = 3`` but only two cycles.
    """
    if x_t < 1:
        raise ValueError("cut size must be at least 1")
    return comb(x_t, 2)


def wolf_estimate(n: int, k: int, bits_per_symbol: int) -> int:
    """Redundancy in bits, ``bits_per_symbol * (n - k)``, as a tree complexity estimate."""
    if n < k:
        raise ValueError("need n >= k")
    return bits_per_symbol * (n - k)


@dataclass(frozen=True)
class BoundReport:
    x_t: int
    n_cycle_lb: int
    tree_complexity_ub: int
    context: dict = field(default_factory=dict)
    t_lower: int | None = None
    n_m_lb: int | None = None
    m_threshold: dict[int, float] = field(default_factory=dict)

    def lines(self) -> list[str]:
        out = [
            f"x_t={self.x_t}",
            f"n_cycle_lb={self.n_cycle_lb}",
            f"tree_complexity_ub={self.tree_complexity_ub}",
        ]
        out += [f"{k}={v}" for k, v in self.context.items()]
        if self.t_lower is not None:
            out.append(f"t_lower_assumed={self.t_lower}")
            out.append(f"n_m_lb={self.n_m_lb}")
        for r, val in sorted(self.m_threshold.items()):
            out.append(f"m_min_r{r}={val:g}")
        return out


def tree_complexity_bounds(
    m: int,
    x_t: int,
    t_lower: int | None = None,
    r: int | list[int] | None = None,
    context: dict | None = None,
) -> BoundReport:
    """Bounds for a ``2^m``-ary model with tree-inducing cut size ``x_t``.

    With an assumed tree complexity ``t_lower`` the report also carries the
    least cycle count of any ``2^m``-ary model, ``C(floor(t_lower / m), 2)``,
    and for each ``r`` the least ``m`` allowing ``r`` cut edges, ``t_lower / r``.
    """
    if m < 1:
        raise ValueError("m must be at least 1")
    ctx = {"m": m}
    ctx.update(context or {})
    n_m = None
    thresholds: dict[int, float] = {}
    if t_lower is not None:
        n_m = comb(t_lower // m, 2)
        rs = [r] if isinstance(r, int) else list(r or [])
        for rr in rs:
            if rr < 1:
                raise ValueError("r must be at least 1")
            thresholds[rr] = t_lower / rr
    return BoundReport(x_t, cycle_lower_bound(x_t), m * x_t, ctx, t_lower, n_m, thresholds)


def model_bounds(gm: GraphicalModel, m: int | None = None, t_lower: int | None = None, r=None) -> BoundReport:
    """Bounds for a concrete model: cut size from its graph, ``m`` from :func:`verify_qm`."""
    if m is None:
        m = max(1, verify_qm(gm, 0).m)
    g = constraint_graph(gm)
    x_t = ti_cut_size(gm)
    ctx = {"vertices": g.number_of_nodes(), "edges": g.number_of_edges()}
    return tree_complexity_bounds(m, x_t, t_lower, r, ctx)

