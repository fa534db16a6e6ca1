from __future__ import annotations

import numpy as np
import pytest

from conftest import brute_nullspace, brute_realized_words, code_word_tuples, words_of
from gmcodes.errors import (
    CapExceeded,
    Disconnected,
    GmfFormatError,
    InconsistentExtension,
    InvalidModel,
    UnknownConstraint,
    ZeroColumn,
)
from gmcodes.fixtures import (
    EXTENDED_HAMMING_G,
    binary_tree_model_hamming_minus,
    get_fixture,
    tailbiting_hamming_model,
)
from gmcodes.gf2codes import BinaryMatrix, LinearCode, dual, generalized_extend, rank
from gmcodes.model import (
    Constraint,
    GraphicalModel,
    Hidden,
    behavior,
    behavior_dimension,
    build_gtg,
    build_tanner_graph,
    cartesian_factors,
    dualize,
    format_gmf,
    hbind,
    parse_gmf,
    read_gmf,
    realized_code,
    topology,
    vbind,
    verify_qm,
    write_gmf,
)
from gmcodes.sampling import random_model, random_parity_check, random_tree_model

VIS8 = [f"V{i}" for i in range(1, 9)]
C_H = LinearCode.from_generator(EXTENDED_HAMMING_G, VIS8)

# Behavior generator of the tail-biting model, coordinates S1 V1 S2 V2 ... S8 V8
# with state sizes 1,2,2,2,1,2,2,2.
TB_SIZES = {1: 1, 2: 2, 3: 2, 4: 2, 5: 1, 6: 2, 7: 2, 8: 2}
TB_BEHAVIOR = [
    "0 1 01 1 01 1 10 1 0 0 00 0 00 0 00 0",
    "0 0 00 0 00 1 01 1 1 0 10 1 10 1 00 0",
    "0 0 00 0 00 0 00 0 0 1 01 1 01 1 10 1",
    "1 0 10 1 10 1 00 0 0 0 00 0 00 1 01 1",
]


def path_model(k: int) -> GraphicalModel:
    """k repetition constraints in a path, one visible each."""
    cons, hid = [], []
    for i in range(1, k + 1):
        b = [vbind(f"V{i}")]
        if i > 1:
            b.append(hbind(f"S{i - 1}", 0))
        if i < k:
            b.append(hbind(f"S{i}", 0))
            hid.append(Hidden(f"S{i}", 1, (f"C{i}", f"C{i + 1}")))
        cons.append(Constraint.build(f"C{i}", b, LinearCode.repetition([str(j) for j in range(len(b))])))
    return GraphicalModel(tuple(f"V{i}" for i in range(1, k + 1)), tuple(hid), tuple(cons))


# validation --------------------------------------------------------------------


def test_visible_must_be_bound_once():
    c = Constraint.build("C1", [vbind("V1")], LinearCode.full(["a"]))
    with pytest.raises(InvalidModel):
        GraphicalModel(("V1", "V2"), (), (c,))


def test_hidden_must_join_two_declared_constraints():
    c1 = Constraint.build("C1", [vbind("V1"), hbind("S1", 0)], LinearCode.repetition(["a", "b"]))
    c2 = Constraint.build("C2", [vbind("V2")], LinearCode.full(["a"]))
    with pytest.raises(InvalidModel):
        GraphicalModel(("V1", "V2"), (Hidden("S1", 1, ("C1", "C2")),), (c1, c2))


def test_hidden_components_must_be_consecutive():
    code = LinearCode.full(["a", "b", "c"])
    c1 = Constraint.build("C1", [hbind("S1", 0), vbind("V1"), hbind("S1", 1)], code)
    c2 = Constraint.build("C2", [hbind("S1", 0), hbind("S1", 1), vbind("V2")], code)
    with pytest.raises(InvalidModel):
        GraphicalModel(("V1", "V2"), (Hidden("S1", 2, ("C1", "C2")),), (c1, c2))


def test_disconnected_model_is_rejected_unless_allowed():
    c1 = Constraint.build("C1", [vbind("V1")], LinearCode.full(["a"]))
    c2 = Constraint.build("C2", [vbind("V2")], LinearCode.full(["a"]))
    with pytest.raises(Disconnected):
        GraphicalModel(("V1", "V2"), (), (c1, c2))
    gm = GraphicalModel(("V1", "V2"), (), (c1, c2), check_connected=False)
    assert not gm.is_connected()


def test_unknown_constraint_lookup():
    with pytest.raises(UnknownConstraint):
        tailbiting_hamming_model().constraint("C99")


# Tanner graphs and generalized Tanner graphs ---------------------------------------


def test_tanner_graph_of_single_check():
    gm = build_tanner_graph(BinaryMatrix.from_strings(["111"]))
    reps = [c for c in gm.constraints if c.visible_labels]
    checks = [c for c in gm.constraints if not c.visible_labels]
    assert len(reps) == 3 and len(checks) == 1 and len(gm.hiddens) == 3
    assert realized_code(gm).same_code(LinearCode.single_parity(["V1", "V2", "V3"]))


def test_tanner_graph_of_self_dual_hamming_matrix():
    gm = build_tanner_graph(EXTENDED_HAMMING_G)
    assert len(gm.constraints) == 12
    assert len(gm.hiddens) == 16
    assert realized_code(gm).same_code(C_H)
    assert verify_qm(gm, 1).ok


def test_tanner_graph_realizes_null_space(rng):
    for _ in range(10):
        h = random_parity_check(rng, 5, 10)
        gm = build_tanner_graph(h)
        code = realized_code(gm)
        assert code.k == 10 - rank(h)
        assert words_of(code) == brute_nullspace(h)


def test_tanner_graph_rejects_zero_column():
    with pytest.raises(ZeroColumn):
        build_tanner_graph(BinaryMatrix.from_strings(["110"]))


def test_degree_zero_gtg_is_tanner_graph():
    h = get_fixture("hamming7").parity_check
    ext = generalized_extend(LinearCode.from_parity(h, [f"V{j}" for j in range(1, 8)]), [])
    assert format_gmf(build_gtg(ext, h)) == format_gmf(build_tanner_graph(h))


def test_degree_one_gtg_realizes_base_code():
    h = get_fixture("hamming7").parity_check
    labs = [f"V{j}" for j in range(1, 8)]
    base = LinearCode.from_parity(h, labs)
    ext = generalized_extend(base, [["V1", "V2"]])
    # parity-check for the extension: old rows plus p1 = V1 + V2
    hx = BinaryMatrix(4, 8, tuple(h.bits) + (0b10000011,))
    gm = build_gtg(ext, hx)
    assert len(gm.visibles) == 7
    assert realized_code(gm).same_code(base)
    assert words_of(realized_code(gm)) == brute_nullspace(h)


def test_partial_parity_on_last_two_symbols_of_extended_hamming():
    ext = generalized_extend(C_H, [["V7", "V8"]])
    hx = BinaryMatrix(
        5, 9, tuple(list(EXTENDED_HAMMING_G.bits) + [(1 << 6) | (1 << 7) | (1 << 8)])
    )
    gm = build_gtg(ext, hx)
    p = [c for c in gm.constraints if not c.visible_labels and c.code.n == 3]
    assert realized_code(gm).same_code(C_H)
    assert any(c.code.same_code(LinearCode.single_parity(c.code.labels)) for c in p)


def test_gtg_rejects_inconsistent_matrix():
    ext = generalized_extend(C_H, [["V7", "V8"]])
    bad = BinaryMatrix(4, 9, tuple(EXTENDED_HAMMING_G.bits))
    with pytest.raises(InconsistentExtension):
        build_gtg(ext, bad)


# behavior --------------------------------------------------------------------------


def test_tailbiting_behavior_matches_published_generator():
    labels = []
    for i in range(1, 9):
        labels += [f"h:S{i}.{c}" for c in range(TB_SIZES[i])] + [f"v:V{i}"]
    ref = LinearCode.from_generator(
        BinaryMatrix.from_strings([r.replace(" ", "") for r in TB_BEHAVIOR]), labels
    )
    b = behavior(tailbiting_hamming_model())
    assert b.code.reorder(labels).same_code(ref)
    assert b.visible_projection.same_code(C_H)


def test_behavior_of_single_check():
    gm = GraphicalModel(
        ("a", "b", "c"),
        (),
        (Constraint.build("C1", [vbind("a"), vbind("b"), vbind("c")], LinearCode.single_parity(["x", "y", "z"])),),
    )
    b = behavior(gm)
    assert b.code.k == 2 and b.visible_projection.k == 2


def test_behavior_members_satisfy_each_local_code():
    gm = tailbiting_hamming_model()
    b = behavior(gm).code
    for w in b.codewords():
        for c in gm.constraints:
            local = 0
            for j, lab in enumerate(c.code.labels):
                local |= ((w >> b.index(lab)) & 1) << j
            assert c.code.contains(local)


def test_model_without_wraparound_state_has_dimension_five():
    from gmcodes.transform import remove_internal, repetition_insert

    gm = repetition_insert(tailbiting_hamming_model(), "S1")
    reduced, code = remove_internal(gm, gm.constraints[-1].cid)
    assert code.k == 5
    assert realized_code(reduced).k == 5


def test_behavior_cap():
    gm = build_tanner_graph(get_fixture("bch31_21").parity_check)
    with pytest.raises(CapExceeded):
        behavior(gm, dim_cap=10)
    assert realized_code(gm).k == 21


def test_realized_code_matches_enumeration_on_random_models(rng):
    for _ in range(40):
        gm = random_model(rng, constraints=(2, 4), visibles=(2, 5), max_dim=10)
        if len(gm.global_labels) > 16:
            continue
        assert code_word_tuples(realized_code(gm)) == brute_realized_words(gm)


# complexity -------------------------------------------------------------------------


def test_tailbiting_model_is_four_ary():
    gm = tailbiting_hamming_model()
    assert verify_qm(gm, 2).ok
    assert not verify_qm(gm, 1).ok


def test_tanner_graphs_are_binary(rng):
    for _ in range(5):
        assert verify_qm(build_tanner_graph(random_parity_check(rng, 4, 9)), 1).ok


def test_product_of_repetition_and_parity_is_four_ary():
    # C_24 redefined over S14, S17, S20, S23 (two components each): the first
    # components form a length-4 single parity check and the second ones a
    # length-4 repetition code.
    labs = [f"h:S{s}.{c}" for s in (14, 17, 20, 23) for c in (0, 1)]
    rows = [
        "10100000", "10001000", "10000010",  # first components: SPC
        "01010101",  # second components: repetition
    ]
    code = LinearCode.from_generator(BinaryMatrix.from_strings(rows), labs)
    factors = cartesian_factors(code)
    assert sorted((len(cols), k) for cols, k in factors) == [(4, 1), (4, 3)]
    binds = [hbind(f"S{s}", c) for s in (14, 17, 20, 23) for c in (0, 1)]
    c = Constraint.build("C24", binds, code)
    assert max(min(k, len(cols) - k) for cols, k in factors) == 1
    assert c.code.redundancy == 4  # as one block it would look 16-ary


# dualization and topology ------------------------------------------------------------


def test_dual_tanner_graph_realizes_row_space(rng):
    for _ in range(10):
        h = random_parity_check(rng, 4, 8)
        d = dualize(build_tanner_graph(h))
        assert realized_code(d).same_code(LinearCode.from_generator(h, [f"V{j + 1}" for j in range(8)]))


def test_dualize_twice_is_identity(rng):
    for _ in range(10):
        gm = random_model(rng, max_dim=12)
        assert realized_code(dualize(dualize(gm))).same_code(realized_code(gm))


def test_dualize_realizes_dual_code(rng):
    for _ in range(20):
        gm = random_model(rng, max_dim=12)
        d = dualize(gm)
        assert topology(d) == topology(gm)
        assert realized_code(d).same_code(dual(realized_code(gm)))


def test_topology_of_tailbiting_model():
    assert tuple(topology(tailbiting_hamming_model())) == (8, 8, True, False)


def test_path_is_cycle_free():
    assert topology(path_model(3)).cycle_free


def test_binary_tree_model_shape():
    gm = binary_tree_model_hamming_minus()
    t = topology(gm)
    assert t.connected and t.cycle_free and t.vertices == 13
    assert realized_code(gm).k == 5


# GMF -------------------------------------------------------------------------------


def test_gmf_round_trip(tmp_path, rng):
    models = [tailbiting_hamming_model(), binary_tree_model_hamming_minus()]
    models += [random_model(rng) for _ in range(20)]
    for i, gm in enumerate(models):
        path = tmp_path / f"m{i}.gmf"
        write_gmf(gm, path)
        back = read_gmf(path)
        assert back == gm
        assert format_gmf(back) == format_gmf(gm)


@pytest.mark.parametrize(
    "text",
    [
        "",
        "gmf 2\n",
        "gmf 1\nvisible V1\nconstraint C1 interface\nbind 0 v:V1\ngenrow 11\n",
        "gmf 1\nvisible V1\nconstraint C1 internal\nbind 0 v:V1\ngenrow 1\n",
        "gmf 1\nvisible V1\nconstraint C1 interface\nbind 1 v:V1\ngenrow 1\n",
        "gmf 1\nvisible V1\nwhatever\n",
    ],
)
def test_gmf_rejects_malformed_input(text):
    with pytest.raises(GmfFormatError):
        parse_gmf(text)


def test_behavior_dimension_matches_behavior(rng):
    for _ in range(20):
        gm = random_model(rng, max_dim=14)
        assert behavior_dimension(gm) == behavior(gm).code.k


def test_random_tree_models_are_trees(rng):
    for _ in range(20):
        assert topology(random_tree_model(rng)).cycle_free


def test_random_model_respects_dimension_bound():
    rng = np.random.default_rng(3)
    for _ in range(20):
        assert behavior_dimension(random_model(rng, max_dim=9)) <= 9
