from __future__ import annotations

import math

import networkx as nx
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gmcodes.cycles import biadjacency, bipartition, brute_force_census, census, count_4_cycles, girth_bfs
from gmcodes.errors import NotBipartite, TooLarge
from gmcodes.fixtures import EXTENDED_HAMMING_G, get_fixture, tailbiting_hamming_model
from gmcodes.gf2codes import LinearCode
from gmcodes.model import Constraint, GraphicalModel, Hidden, build_tanner_graph, hbind, vbind
from gmcodes.sampling import random_bipartite


def cycle_graph(n: int) -> np.ndarray:
    """Biadjacency of a single cycle of length 2n."""
    b = np.zeros((n, n), dtype=int)
    for i in range(n):
        b[i, i] = 1
        b[i, (i + 1) % n] = 1
    return b


def networkx_counts(b: np.ndarray, lengths=(4, 6, 8)) -> dict[int, int]:
    """Independent oracle: simple cycles from networkx's enumeration."""
    r, c = b.shape
    g = nx.Graph()
    g.add_nodes_from(range(r + c))
    g.add_edges_from((i, r + j) for i in range(r) for j in range(c) if b[i, j])
    out = {L: 0 for L in lengths}
    for cyc in nx.simple_cycles(g, length_bound=max(lengths)):
        if len(cyc) in out:
            out[len(cyc)] += 1
    return out


@st.composite
def bipartite(draw, max_vertices=12):
    r = draw(st.integers(1, max_vertices - 1))
    c = draw(st.integers(1, max_vertices - r))
    cells = draw(st.lists(st.booleans(), min_size=r * c, max_size=r * c))
    return np.array(cells, dtype=int).reshape(r, c)


def test_complete_bipartite_two_by_two():
    c = census(np.ones((2, 2), dtype=int))
    assert c.girth == 4 and c.n(4) == 1


def test_complete_bipartite_two_by_three():
    c = census(np.ones((2, 3), dtype=int), 6)
    assert c.n(4) == 3 and c.n(6) == 0
    assert c.csv_row() == "4,3,0"


def test_six_cycle():
    c = census(cycle_graph(3))
    assert c.girth == 6 and c.n(6) == 1 and c.n(4) == 0


def test_eight_cycle():
    assert brute_force_census(cycle_graph(4)).n(8) == 1
    assert census(cycle_graph(4)).n(8) == 1


def test_tree_has_no_cycles():
    b = np.array([[1, 1, 0], [0, 1, 1]])
    for fn in (census, brute_force_census):
        c = fn(b)
        assert math.isinf(c.girth)
        assert all(v == 0 for v in c.counts.values())
    assert census(b).csv_row() == "inf"


def test_long_girth_reported_beyond_counted_lengths():
    c = census(cycle_graph(6))
    assert c.girth == 12
    assert all(v == 0 for v in c.counts.values())


@given(bipartite())
def test_census_matches_brute_force(b):
    assert census(b) == brute_force_census(b)


@given(bipartite(max_vertices=10))
def test_brute_force_matches_networkx(b):
    bf = brute_force_census(b)
    nxc = networkx_counts(b)
    assert all(bf.n(L) == nxc[L] for L in (4, 6, 8))


def test_census_on_random_graphs(rng):
    for _ in range(100):
        b = random_bipartite(rng, 16)
        assert census(b) == brute_force_census(b)


@given(bipartite())
def test_four_cycle_count_and_girth(b):
    bf = brute_force_census(b)
    assert count_4_cycles(b) == bf.n(4)
    if bf.n(4) or bf.n(6) or bf.n(8):
        assert girth_bfs(b) == bf.girth


def test_transposed_matrix_gives_same_counts():
    h = get_fixture("golay23").parity_check
    a = census(h)
    b = census(h.to_array().T)
    assert a == b


def test_extended_hamming_tanner_graph():
    c = census(EXTENDED_HAMMING_G)
    assert c == census(build_tanner_graph(EXTENDED_HAMMING_G))
    assert c.girth == 4


def test_published_census_of_extended_bch_matrices():
    assert census(get_fixture("ebch32_21").parity_check).counts == {4: 1128, 6: 37404, 8: 1126372}


def triangle_model() -> GraphicalModel:
    cons, hid = [], []
    for i in range(3):
        a, b = f"S{i}", f"S{(i + 2) % 3}"
        binds = [vbind(f"V{i}"), hbind(a, 0), hbind(b, 0)] if i < 2 else [vbind(f"V{i}"), hbind(b, 0), hbind(a, 0)]
        cons.append(Constraint.build(f"C{i}", binds, LinearCode.single_parity(["x", "y", "z"])))
        hid.append(Hidden(a, 1, (f"C{i}", f"C{(i + 1) % 3}")))
    return GraphicalModel(("V0", "V1", "V2"), tuple(hid), tuple(cons))


def test_model_bipartition_rejects_odd_cycles():
    with pytest.raises(NotBipartite):
        biadjacency(triangle_model())
    tb = tailbiting_hamming_model()
    rows, cols, b = bipartition(tb)
    assert len(rows) + len(cols) == 8


def test_brute_force_size_cap():
    with pytest.raises(TooLarge):
        brute_force_census(np.ones((11, 11), dtype=int))


def test_bad_length():
    with pytest.raises(ValueError):
        census(np.ones((2, 2), dtype=int), 5)
