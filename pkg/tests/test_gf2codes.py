from __future__ import annotations

import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import brute_nullspace, words_of
from gmcodes.errors import (
    AlistFormatError,
    EmptySubset,
    ImpossiblePivot,
    LengthMismatch,
    UnknownCoordinate,
)
from gmcodes.fixtures import EXTENDED_HAMMING_G, get_fixture
from gmcodes.gf2codes import (
    BinaryMatrix,
    LinearCode,
    dual,
    format_alist,
    generalized_extend,
    intersect,
    join_codes,
    nullspace_rows,
    parse_alist,
    project_and_subcode,
    rank,
    read_alist,
    systematic_form,
    write_alist,
)
from gmcodes.sampling import random_code, random_parity_check


@st.composite
def matrices(draw, max_rows=6, max_cols=10):
    rows = draw(st.integers(1, max_rows))
    cols = draw(st.integers(1, max_cols))
    bits = draw(st.lists(st.integers(0, (1 << cols) - 1), min_size=rows, max_size=rows))
    return BinaryMatrix(rows, cols, tuple(bits))


def brute_rank(m: BinaryMatrix) -> int:
    """log2 of the size of the row space, by enumerating all combinations."""
    span = {0}
    for r in m.bits:
        span |= {s ^ r for s in span}
    return len(span).bit_length() - 1


# BinaryMatrix ------------------------------------------------------------


def test_rows_have_no_padding_bits():
    with pytest.raises(ValueError):
        BinaryMatrix(1, 3, (0b1000,))


def test_indices_are_bounds_checked():
    m = BinaryMatrix.identity(3)
    assert m[1, 1] == 1 and m[0, 2] == 0
    with pytest.raises(IndexError):
        m[3, 0]
    with pytest.raises(IndexError):
        m[0, -1]


def test_string_and_array_round_trip():
    m = BinaryMatrix.from_strings(["1010", "0111"])
    assert m.to_strings() == ["1010", "0111"]
    assert BinaryMatrix.from_array(m.to_array()) == m
    assert m.transpose().transpose() == m


# rank ----------------------------------------------------------------------


def test_rank_identity():
    assert rank(BinaryMatrix.identity(3)) == 3


def test_rank_zero_matrix():
    assert rank(BinaryMatrix.zeros(4, 6)) == 0


def test_rank_extended_hamming_generator():
    assert rank(EXTENDED_HAMMING_G) == 4


@given(matrices())
def test_rank_matches_span_enumeration(m):
    assert rank(m) == brute_rank(m)


# systematic_form -------------------------------------------------------------


def test_systematic_form_identity_is_fixed():
    s, piv = systematic_form(BinaryMatrix.identity(3))
    assert s == BinaryMatrix.identity(3)
    assert piv == [0, 1, 2]


def test_systematic_form_honours_preferred_pivot():
    m = BinaryMatrix.from_strings(["110", "011"])
    s, piv = systematic_form(m, [1])
    assert 1 in piv
    assert s.row_space_equals(m)
    # a pivot column is a unit column of the reduced matrix
    col = [s[i, 1] for i in range(s.rows)]
    assert sorted(col) == [0, 1]


def test_systematic_form_warns_on_dependent_pivot():
    m = BinaryMatrix.from_strings(["110", "110"])
    with pytest.warns(ImpossiblePivot):
        systematic_form(m, [0, 1])


@given(matrices(), st.data())
def test_systematic_form_preserves_row_space(m, data):
    pref = data.draw(st.lists(st.integers(0, m.cols - 1), unique=True, max_size=m.cols))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ImpossiblePivot)
        s, piv = systematic_form(m, pref)
    assert s.rows == rank(m)
    assert s.row_space_equals(m)
    for i, p in enumerate(piv):
        assert [s[r, p] for r in range(s.rows)] == [int(r == i) for r in range(s.rows)]


def test_behavior_projection_defines_first_state_as_sum_of_first_two_symbols():
    # The tail-biting behavior restricted to (V1, V2, S1) has a single check
    # which, reduced with S1 as the pivot, reads S1 = V1 + V2.
    from gmcodes.fixtures import tailbiting_hamming_model
    from gmcodes.model import behavior

    b = behavior(tailbiting_hamming_model())
    proj, _ = project_and_subcode(b.code, ["v:V1", "v:V2", "h:S1.0"])
    checks = BinaryMatrix(len(proj.check_rows), 3, proj.check_rows)
    s, piv = systematic_form(checks, [2])
    assert piv == [2]
    assert s.to_strings() == ["111"]


# dual ------------------------------------------------------------------------


def test_dual_of_repetition_is_single_parity():
    labs = ["a", "b", "c"]
    assert dual(LinearCode.repetition(labs)).same_code(LinearCode.single_parity(labs))


def test_extended_hamming_is_self_dual():
    c = LinearCode.from_generator(EXTENDED_HAMMING_G)
    assert dual(c).same_code(c)


def test_dual_round_trip_random_code(rng):
    for _ in range(20):
        c = random_code(rng, 8, 3)
        assert dual(dual(c)).same_code(c)


@given(matrices(max_cols=9))
def test_dual_is_orthogonal_complement(m):
    c = LinearCode.from_generator(m)
    d = dual(c)
    assert c.k + d.k == c.n
    for a in c.codewords():
        for b in d.codewords():
            assert (a & b).bit_count() % 2 == 0


# intersect --------------------------------------------------------------------


def test_intersect_with_itself():
    c = get_fixture("hamming7").code
    assert intersect(c, c).same_code(c)


def test_intersection_identity_of_hamming_example():
    from gmcodes.fixtures import HAMMING_MINUS_G

    labs = [f"V{i}" for i in range(1, 9)]
    minus = LinearCode.from_generator(HAMMING_MINUS_G, labs)
    spc = LinearCode.from_parity(BinaryMatrix.from_strings(["11001001"]), labs)
    both = intersect(minus, spc)
    assert both.k == 4
    assert both.same_code(LinearCode.from_generator(EXTENDED_HAMMING_G, labs))


def test_intersect_random_codes_against_enumeration(rng):
    for _ in range(10):
        a = random_code(rng, 10, 5)
        b = random_code(rng, 10, 5)
        assert words_of(intersect(a, b)) == words_of(a) & words_of(b)


def test_intersect_needs_same_labels():
    with pytest.raises(LengthMismatch):
        intersect(LinearCode.repetition(["a", "b"]), LinearCode.repetition(["a", "c"]))


# project_and_subcode ------------------------------------------------------------


def test_projection_onto_all_coordinates_is_identity():
    c = get_fixture("hamming7").code
    p, s = project_and_subcode(c, range(7))
    assert p.same_code(c) and s.same_code(c)


def test_single_parity_projection_and_subcode():
    c = LinearCode.single_parity(["a", "b", "c"])
    p, s = project_and_subcode(c, ["a", "b"])
    assert p.k == 2
    assert words_of(s) == {0b00, 0b11}


@given(matrices(max_cols=9), st.data())
def test_projection_and_subcode_against_enumeration(m, data):
    c = LinearCode.from_generator(m)
    j = data.draw(st.lists(st.integers(0, c.n - 1), unique=True, min_size=1, max_size=c.n))
    p, s = project_and_subcode(c, j)

    def restrict(w):
        return sum(((w >> col) & 1) << i for i, col in enumerate(j))

    outside = sum(1 << i for i in range(c.n) if i not in j)
    words = c.codewords()
    assert words_of(p) == {restrict(w) for w in words}
    assert words_of(s) == {restrict(w) for w in words if w & outside == 0}


def test_extended_hamming_projection_onto_first_four():
    c = LinearCode.from_generator(EXTENDED_HAMMING_G)
    p, _ = project_and_subcode(c, range(4))
    assert p.k == len({w & 0b1111 for w in c.codewords()}).bit_length() - 1


def test_projection_errors():
    c = LinearCode.single_parity(["a", "b", "c"])
    with pytest.raises(EmptySubset):
        project_and_subcode(c, [])
    with pytest.raises(UnknownCoordinate):
        project_and_subcode(c, ["z"])


# generalized_extend --------------------------------------------------------------


def test_extension_over_all_coordinates_is_classical_extension():
    base = get_fixture("hamming7").code
    ext = generalized_extend(base, [range(7)])
    assert ext.extended.n == 8 and ext.extended.k == 4
    weights = [w.bit_count() for w in ext.extended.codewords() if w]
    assert min(weights) in (3, 4)
    assert min(weights) == 4  # odd minimum distance grows by one


def test_empty_extension_equals_base():
    base = get_fixture("hamming7").code
    ext = generalized_extend(base, [])
    assert ext.degree == 0
    assert ext.extended.same_code(base)


def test_partial_parity_on_bch_codewords(rng):
    base = get_fixture("bch31_21").code
    ext = generalized_extend(base, [{0, 1}])
    assert ext.parity_labels == ("p1",)
    for _ in range(50):
        w = ext.extended.encode(int(rng.integers(0, 1 << base.k)))
        assert (w >> 31) & 1 == ((w >> 0) ^ (w >> 1)) & 1


@given(matrices(max_rows=4, max_cols=8), st.data())
def test_deleting_appended_coordinates_recovers_base(m, data):
    base = LinearCode.from_generator(m)
    g = data.draw(st.integers(0, 3))
    subsets = [
        data.draw(st.lists(st.integers(0, base.n + i - 1), unique=True, min_size=1, max_size=4))
        for i in range(g)
    ]
    ext = generalized_extend(base, subsets)
    assert ext.extended.n == base.n + g and ext.extended.k == base.k
    mask = (1 << base.n) - 1
    assert {w & mask for w in ext.extended.codewords()} == words_of(base)


def test_extension_may_reference_earlier_parities():
    base = LinearCode.full(["a", "b", "c"])
    ext = generalized_extend(base, [["a", "b"], ["p1", "c"]])
    for w in ext.extended.codewords():
        bit = [(w >> i) & 1 for i in range(5)]
        assert bit[3] == bit[0] ^ bit[1]
        assert bit[4] == bit[3] ^ bit[2]


def test_extension_errors():
    base = LinearCode.full(["a", "b"])
    with pytest.raises(EmptySubset):
        generalized_extend(base, [[]])
    with pytest.raises(UnknownCoordinate):
        generalized_extend(base, [["q"]])


# LinearCode ------------------------------------------------------------------------


@given(matrices(max_cols=10))
def test_from_parity_matches_enumerated_null_space(h):
    assert words_of(LinearCode.from_parity(h)) == brute_nullspace(h)


def test_nullspace_rows_dimension():
    h = get_fixture("bch31_21").parity_check
    assert rank(h) == 10
    assert len(nullspace_rows(h.bits, h.cols)) == 21


def test_labels_must_be_unique_and_match_length():
    g = BinaryMatrix.identity(2)
    with pytest.raises(ValueError):
        LinearCode(g, ("a", "a"))
    with pytest.raises(LengthMismatch):
        LinearCode(g, ("a",))


def test_join_codes_projects_out_shared_coordinates():
    # x = s and s = y force x = y
    a = LinearCode.repetition(["x", "s"])
    b = LinearCode.repetition(["s", "y"])
    assert join_codes([a, b], ["x", "y"]).same_code(LinearCode.repetition(["x", "y"]))


# alist -------------------------------------------------------------------------------


def test_alist_round_trip_fixtures(tmp_path):
    for name in ("hamming7", "golay23", "ebch32_21"):
        h = get_fixture(name).parity_check
        path = tmp_path / f"{name}.alist"
        write_alist(h, path)
        assert read_alist(path) == h
        assert format_alist(parse_alist(format_alist(h))) == format_alist(h)


@given(matrices())
def test_alist_round_trip_random(m):
    assert parse_alist(format_alist(m)) == m


def test_alist_accepts_zero_padding():
    text = "3 1\n1 3\n1 1 1\n3\n1\n1\n1\n1 2 3\n"
    assert parse_alist(text) == BinaryMatrix.from_strings(["111"])
    padded = "3 2\n1 3\n1 1 1\n3 0\n1 0\n1 0\n1 0\n1 2 3\n0 0 0\n"
    assert parse_alist(padded).to_strings() == ["111", "000"]


@pytest.mark.parametrize(
    "text",
    [
        "",
        "3 1\n1 3\n1 1\n3\n1\n1\n1\n1 2 3\n",  # wrong number of column degrees
        "3 1\n1 3\n1 1 1\n3\n1\n1\n",  # truncated
        "3 1\n1 3\n1 1 1\n3\n1\n1\n2\n1 2 3\n",  # row index out of range
        "3 1\n1 3\n1 1 1\n2\n1\n1\n1\n1 2\n",  # row list disagrees with columns
    ],
)
def test_alist_rejects_malformed_input(text):
    with pytest.raises(AlistFormatError):
        parse_alist(text)


def test_random_parity_check_has_no_zero_lines(rng):
    for _ in range(20):
        h = random_parity_check(rng, 4, 9)
        a = h.to_array()
        assert a.any(axis=0).all() and a.any(axis=1).all()
        assert np.array_equal(BinaryMatrix.from_array(a).to_array(), a)
