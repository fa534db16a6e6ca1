from __future__ import annotations

import numpy as np
import pytest

from gmcodes.cycles import census
from gmcodes.errors import UnknownFixture
from gmcodes.fixtures import (
    EXTENDED_HAMMING_G,
    GOLAY_POLY,
    PRIM5,
    bch_generator,
    fixtures,
    get_fixture,
    minimal_polynomial,
    poly_divmod,
    poly_mul,
)
from gmcodes.gf2codes import BinaryMatrix, LinearCode, rank
from gmcodes.model import realized_code, topology
from gmcodes.sampling import random_bipartite, random_code, random_model, random_parity_check, random_tree_model


def _min_distance(code: LinearCode) -> int:
    return min(w.bit_count() for w in code.codewords() if w)


def test_registry_contents():
    names = set(fixtures())
    assert {"hamming7", "ext_hamming8", "golay23", "bch31_21", "ebch32_21", "bch63_30", "bch63_51", "ebch64_51"} <= names
    for f in fixtures().values():
        assert f.provenance
        assert f.parity_check.cols == f.n
        assert rank(f.parity_check) == f.n - f.k


def test_unknown_fixture():
    with pytest.raises(UnknownFixture):
        get_fixture("nope")


def test_extended_hamming_generator_matches_worked_example_matrix():
    want = BinaryMatrix.from_strings(["11110000", "00110110", "00001111", "01100011"])
    f = get_fixture("ext_hamming8")
    assert EXTENDED_HAMMING_G == want
    # the code is self-dual, so the same matrix also serves as its parity check
    assert f.code.same_code(LinearCode.from_generator(want))


@pytest.mark.parametrize("name,d", [("hamming7", 3), ("ext_hamming8", 4), ("golay23", 7), ("golay24", 8)])
def test_minimum_distance_by_enumeration(name, d):
    f = get_fixture(name)
    assert f.d == d
    assert _min_distance(f.code) == d


def test_bch31_parity_check_rank():
    assert rank(get_fixture("bch31_21").parity_check) == 10


def test_extended_fixtures_have_even_weight():
    for name in ("golay24", "ebch32_21", "ebch64_51"):
        code = get_fixture(name).code
        assert all(g.bit_count() % 2 == 0 for g in code.generator.bits)


def test_generator_polynomials_divide_x_n_minus_1():
    for n, g in ((23, GOLAY_POLY), (31, bch_generator(31, 5, PRIM5))):
        _, rem = poly_divmod((1 << n) | 1, g)
        assert rem == 0
    assert bch_generator(31, 5, PRIM5).bit_length() - 1 == 10
    # the minimal polynomial of a primitive element is the primitive polynomial itself
    assert minimal_polynomial(1, PRIM5) == PRIM5


def test_poly_arithmetic_round_trip(rng):
    for _ in range(50):
        a = int(rng.integers(1, 1 << 12))
        b = int(rng.integers(1, 1 << 8))
        q, r = poly_divmod(poly_mul(a, b), b)
        assert (q, r) == (a, 0)


# ---------------------------------------------------------------------------
# Random instance generators
# ---------------------------------------------------------------------------


def test_random_bipartite_shape(rng):
    for _ in range(50):
        b = random_bipartite(rng, max_vertices=16)
        assert b.ndim == 2
        assert b.shape[0] + b.shape[1] <= 16
        assert set(np.unique(b)) <= {0, 1}


def test_random_parity_check_has_no_zero_rows_or_columns(rng):
    for _ in range(50):
        h = random_parity_check(rng, 4, 9, 0.3)
        assert h.rows == 4 and h.cols == 9
        assert all(h.bits)
        assert all(h.column(j) for j in range(9))


def test_random_code_dimension(rng):
    for _ in range(20):
        code = random_code(rng, 10, 4)
        assert (code.n, code.k) == (10, 4)


def test_random_models_are_valid(rng):
    for _ in range(30):
        gm = random_model(rng, max_dim=16)
        assert gm.is_connected()
        realized_code(gm)


def test_random_tree_models_are_cycle_free(rng):
    for _ in range(30):
        gm = random_tree_model(rng)
        assert topology(gm).cycle_free
        assert census(gm, 8).girth == float("inf")
