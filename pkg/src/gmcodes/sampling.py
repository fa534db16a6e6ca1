"""Random instances for property tests and demos.

All generators take a :class:`numpy.random.Generator`, so a seed fixes the
output.  Models are small by construction: the caller bounds the behavior
dimension and generation retries until the bound holds.
"""

from __future__ import annotations

import numpy as np

from .gf2codes import BinaryMatrix, LinearCode, _rank_rows
from .model import Constraint, GraphicalModel, Hidden, behavior_dimension, binding_key, hbind, vbind

__all__ = [
    "random_bipartite",
    "random_parity_check",
    "random_code",
    "random_model",
    "random_tree_model",
]


def random_bipartite(rng: np.random.Generator, max_vertices: int = 16, density: float | None = None) -> np.ndarray:
    """0/1 biadjacency matrix with at most ``max_vertices`` vertices in total."""
    total = int(rng.integers(2, max_vertices + 1))
    rows = int(rng.integers(1, total))
    cols = total - rows
    p = float(rng.uniform(0.1, 0.5)) if density is None else density
    return (rng.random((rows, cols)) < p).astype(np.uint8)


def random_parity_check(rng: np.random.Generator, rows: int, cols: int, density: float = 0.4) -> BinaryMatrix:
    """Random matrix with no zero rows or columns."""
    while True:
        a = (rng.random((rows, cols)) < density).astype(np.uint8)
        if a.any(axis=0).all() and a.any(axis=1).all():
            return BinaryMatrix.from_array(a)


def random_code(rng: np.random.Generator, n: int, k: int, labels=None) -> LinearCode:
    """Uniformly drawn ``[n, k]`` code (random full-rank generator)."""
    while True:
        rows = [int(x) for x in rng.integers(1, 1 << n, size=k)] if k else []
        if _rank_rows(rows) == k:
            return LinearCode.from_generator_rows(rows, n, labels)


def _local_code(rng: np.random.Generator, keys: list[str]) -> LinearCode:
    n = len(keys)
    k = int(rng.integers(1, n)) if n > 1 else 1
    return random_code(rng, n, k, keys)


def random_model(
    rng: np.random.Generator,
    constraints: tuple[int, int] = (2, 6),
    visibles: tuple[int, int] = (2, 8),
    max_hidden_size: int = 2,
    extra_edges: tuple[int, int] = (0, 3),
    max_dim: int = 18,
) -> GraphicalModel:
    """Connected model with random topology and random local codes.

    A random spanning tree of constraints is drawn first, then up to
    ``extra_edges`` further hidden variables between distinct constraints
    (parallel hiddens allowed), so the model usually has cycles.
    """
    while True:
        nc = int(rng.integers(constraints[0], constraints[1] + 1))
        nv = int(rng.integers(visibles[0], visibles[1] + 1))
        cids = [f"C{i + 1}" for i in range(nc)]
        edges = [(int(rng.integers(0, i)), i) for i in range(1, nc)]
        if nc > 1:
            for _ in range(int(rng.integers(extra_edges[0], extra_edges[1] + 1))):
                a, b = rng.choice(nc, size=2, replace=False)
                edges.append((int(min(a, b)), int(max(a, b))))
        binds: list[list] = [[] for _ in range(nc)]
        vis = [f"V{i + 1}" for i in range(nv)]
        for v in vis:
            binds[int(rng.integers(0, nc))].append(vbind(v))
        hiddens = []
        for e, (a, b) in enumerate(edges):
            lab = f"S{e + 1}"
            size = int(rng.integers(1, max_hidden_size + 1))
            hiddens.append(Hidden(lab, size, (cids[a], cids[b])))
            for end in (a, b):
                binds[end].extend(hbind(lab, c) for c in range(size))
        cons = []
        for cid, bl in zip(cids, binds):
            if not bl:
                cons.append(Constraint.build(cid, (), LinearCode.zero(())))
                continue
            keys = [binding_key(x) for x in bl]
            cons.append(Constraint(cid, _local_code(rng, keys), tuple(bl)))
        gm = GraphicalModel(tuple(vis), tuple(hiddens), tuple(cons))
        if behavior_dimension(gm) <= max_dim:
            return gm


def random_tree_model(
    rng: np.random.Generator,
    constraints: tuple[int, int] = (2, 6),
    visibles: tuple[int, int] = (2, 12),
    max_hidden_size: int = 2,
    max_dim: int = 18,
) -> GraphicalModel:
    """Cycle-free random model (a random tree of constraints)."""
    return random_model(rng, constraints, visibles, max_hidden_size, (0, 0), max_dim)
