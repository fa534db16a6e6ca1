from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gmcodes.cycles import bipartition, brute_force_census, census, count_4_cycles
from gmcodes.errors import EmptySubset, UnknownCoordinate
from gmcodes.extract import (
    Candidate,
    alg1_reduce_tanner,
    alg2_candidates,
    alg3_extract_gtg,
    alg4_extract_gm,
    base_extension,
    format_ext_meta,
    insert_partial_parity,
    parse_ext_meta,
)
from gmcodes.fixtures import get_fixture
from gmcodes.gf2codes import BinaryMatrix, LinearCode, rank
from gmcodes.model import build_gtg, build_tanner_graph, realized_code, verify_qm
from gmcodes.sampling import random_parity_check
from gmcodes.transform import format_trace, parse_trace, replay

from conftest import brute_nullspace


def _cut(h: BinaryMatrix) -> int:
    """Tree-inducing cut size of a connected Tanner graph: |E| - |V| + 1."""
    edges = sum(r.bit_count() for r in h.bits)
    return edges - (h.rows + h.cols) + 1


def _apply_ops(h: BinaryMatrix, trace) -> BinaryMatrix:
    b = h.to_array().astype(np.int64)
    for step in trace:
        i, j = (int(x) for x in step.operands)
        b[j] ^= b[i]
    return BinaryMatrix.from_array(b)


# ---------------------------------------------------------------------------
# Row operations
# ---------------------------------------------------------------------------


def test_alg1_fixed_point_on_hamming7():
    h = get_fixture("hamming7").parity_check
    out, trace = alg1_reduce_tanner(h)
    assert len(trace) == 0
    assert out == h


def test_alg1_first_step_is_brute_force_optimal():
    h = BinaryMatrix.from_strings(["110100", "011010", "110011"])
    start = brute_force_census(h, 6).key()
    keys = {}
    for i, j in itertools.permutations(range(3), 2):
        b = h.to_array().astype(np.int64)
        b[j] ^= b[i]
        if b[j].any():
            keys[(i, j)] = brute_force_census(b, 6).key()
    best = max(keys.values())
    assert best > start
    out, trace = alg1_reduce_tanner(h, max_steps=1)
    assert len(trace) == 1
    assert brute_force_census(out, 6).key() == best
    first = next(op for op, k in keys.items() if k == best)
    assert tuple(int(x) for x in trace.steps[0].operands) == first


def test_alg1_keys_increase_and_code_is_kept():
    h = BinaryMatrix.from_strings(["1110100", "0111010", "1111111", "1010011"])
    out, trace = alg1_reduce_tanner(h)
    assert rank(out) == rank(h)
    assert brute_nullspace(out) == brute_nullspace(h)
    keys = []
    cur = h
    keys.append(census(cur, 6).key())
    for k in range(1, len(trace) + 1):
        cur = _apply_ops(h, trace.steps[:k])
        keys.append(census(cur, 6).key())
    assert all(a < b for a, b in zip(keys, keys[1:]))
    assert _apply_ops(h, trace) == out
    g, ng, ng2 = keys[-1]
    if g != float("inf"):
        assert trace.checkpoints[len(trace)] == f"girth={int(g)} N{int(g)}={-ng} N{int(g) + 2}={-ng2}"


def test_alg1_is_deterministic_across_workers():
    h = get_fixture("golay23").parity_check
    a, ta = alg1_reduce_tanner(h, workers=1, max_steps=3)
    b, tb = alg1_reduce_tanner(h, workers=2, max_steps=3)
    assert a == b
    assert format_trace(ta) == format_trace(tb)


def test_alg1_rejects_zero_matrix():
    with pytest.raises(EmptySubset):
        alg1_reduce_tanner(BinaryMatrix.from_strings(["000", "000"]))


# ---------------------------------------------------------------------------
# Partial-parity insertion
# ---------------------------------------------------------------------------


def test_insert_partial_parity_cut_change():
    h = BinaryMatrix.from_strings(["111100", "110110", "110011", "001111"])
    ext = base_extension(h)
    h2, ext2 = insert_partial_parity(h, ext, ["V1", "V2"])
    # three rows cover {V1, V2}: the cut drops by (2 - 1)(3 - 1)
    assert _cut(h) - _cut(h2) == 2
    assert ext2.degree == 1
    assert ext2.parity_defs == (("V1", "V2"),)
    assert h2.rows == h.rows + 1 and h2.cols == h.cols + 1
    # the new row defines the parity, and covering rows no longer contain V1, V2
    assert h2.bits[-1] == 0b1000011
    for r in h2.bits[:-1]:
        assert r & 0b11 in (0, 0b01, 0b10) or r == h2.bits[-1]
    gtg = build_gtg(ext2, h2)
    assert realized_code(gtg).same_code(LinearCode.from_parity(h, gtg.visibles))


def test_insert_partial_parity_single_cover_gives_zero_reduction():
    h = BinaryMatrix.from_strings(["1110", "0111"])
    h2, ext2 = insert_partial_parity(h, base_extension(h), [0, 1])
    assert _cut(h) - _cut(h2) == 0
    assert ext2.degree == 1


def test_insert_partial_parity_errors():
    h = BinaryMatrix.from_strings(["1110", "0111"])
    ext = base_extension(h)
    with pytest.raises(EmptySubset):
        insert_partial_parity(h, ext, ["V1"])
    with pytest.raises(UnknownCoordinate):
        insert_partial_parity(h, ext, ["V1", "Q"])
    with pytest.raises(UnknownCoordinate):
        insert_partial_parity(h, ext, [0, 9])


@given(st.integers(0, 2**32 - 1))
def test_insert_partial_parity_preserves_code(seed):
    rng = np.random.default_rng(seed)
    h = random_parity_check(rng, int(rng.integers(2, 5)), int(rng.integers(4, 8)), 0.6)
    size = int(rng.integers(2, h.cols + 1))
    j = sorted(rng.choice(h.cols, size=size, replace=False).tolist())
    h2, ext2 = insert_partial_parity(h, base_extension(h), j)
    r = sum(1 for row in h.bits if row & sum(1 << c for c in j) == sum(1 << c for c in j))
    assert _cut(h) - _cut(h2) == (len(j) - 1) * (r - 1)
    # the extended code is the nullspace of the new matrix
    assert set(ext2.extended.codewords()) == brute_nullspace(h2)


# ---------------------------------------------------------------------------
# Candidates
# ---------------------------------------------------------------------------


def _exhaustive_best(h: BinaryMatrix) -> int:
    """Largest (|J| - 1)(r(J) - 1) over subsets with |J| <= 4 or r(J) in {2, 3, 4}."""
    rows = list(h.bits)
    best = None
    for k in range(2, h.cols + 1):
        for cols in itertools.combinations(range(h.cols), k):
            mask = sum(1 << c for c in cols)
            r = sum(1 for x in rows if x & mask == mask)
            if k <= 4 or r in (2, 3, 4):
                d = (k - 1) * (r - 1)
                best = d if best is None else max(best, d)
    return best


def test_candidate_checks_its_delta():
    Candidate(("a", "b", "c"), 3, 4)
    with pytest.raises(ValueError):
        Candidate(("a", "b"), 3, 3)


def test_alg2_identical_rows():
    w = 5
    h = BinaryMatrix.from_strings(["1111100", "1111100", "0000111"])
    cands = alg2_candidates(h)
    assert all(c.delta_xt == w - 1 for c in cands)
    assert Candidate(tuple(f"x{j}" for j in range(w)), 2, w - 1) in cands


def test_alg2_pair_coverage_three():
    # every column pair inside {0, 1} is covered by three rows and no tuple does better
    h = BinaryMatrix.from_strings(["1100", "1110", "1101", "0011"])
    cands = alg2_candidates(h)
    assert max(c.delta_xt for c in cands) == 2 == _exhaustive_best(h)
    assert Candidate(("x0", "x1"), 3, 2) in cands


def test_alg2_uses_extension_labels():
    h = BinaryMatrix.from_strings(["1100", "1110", "1101"])
    cands = alg2_candidates(h, base_extension(h))
    assert cands[0].subset == ("V1", "V2")


@given(st.integers(0, 2**32 - 1))
def test_alg2_matches_exhaustive_search(seed):
    rng = np.random.default_rng(seed)
    h = random_parity_check(rng, int(rng.integers(2, 7)), int(rng.integers(3, 10)), float(rng.uniform(0.3, 0.8)))
    cands = alg2_candidates(h)
    assert cands
    assert len({c.delta_xt for c in cands}) == 1
    assert cands[0].delta_xt == _exhaustive_best(h)
    for c in cands:
        mask = sum(1 << int(x[1:]) for x in c.subset)
        assert c.r_of_j == sum(1 for r in h.bits if r & mask == mask)


def test_alg2_golay_first_iteration():
    h = get_fixture("golay23").parity_check
    cands = alg2_candidates(h)
    assert cands
    rows = list(h.bits)
    best = 0
    for k in (2, 3, 4):
        for cols in itertools.combinations(range(h.cols), k):
            mask = sum(1 << c for c in cols)
            r = sum(1 for x in rows if x & mask == mask)
            if r <= 4:
                best = max(best, (k - 1) * (r - 1))
    for k in (2, 3, 4):
        for rs in itertools.combinations(rows, k):
            mask = (1 << h.cols) - 1
            for x in rs:
                mask &= x
            if mask.bit_count() >= 2 and sum(1 for x in rows if x & mask == mask) == k:
                best = max(best, (mask.bit_count() - 1) * (k - 1))
    assert max(c.delta_xt for c in cands) == best


# ---------------------------------------------------------------------------
# Generalized Tanner graphs
# ---------------------------------------------------------------------------


def test_alg3_four_cycle_free_input_is_unchanged():
    h = BinaryMatrix.from_strings(["110", "011", "101"])
    hx, ext, trace = alg3_extract_gtg(h)
    assert ext.degree == 0
    assert hx == h
    assert len(trace) == 0


@pytest.mark.parametrize("name", ["hamming7", "ext_hamming8", "golay23"])
def test_alg3_output_is_valid(name):
    h = get_fixture(name).parity_check
    hx, ext, trace = alg3_extract_gtg(h)
    assert count_4_cycles(hx.to_array()) == 0
    assert ext.degree == len(trace) == hx.cols - h.cols
    gtg = build_gtg(ext, hx)
    assert realized_code(gtg).same_code(LinearCode.from_parity(h, gtg.visibles))
    assert trace.checkpoints[len(trace)] == "N4=0"


def test_alg3_golay_degree_band():
    _, ext, _ = alg3_extract_gtg(get_fixture("golay23").parity_check)
    assert ext.degree <= 11


def test_ext_meta_round_trip():
    h = get_fixture("ext_hamming8").parity_check
    hx, ext, _ = alg3_extract_gtg(h)
    back = parse_ext_meta(format_ext_meta(ext), hx)
    assert back.parity_defs == ext.parity_defs
    assert back.extended.same_code(ext.extended)
    assert back.base.same_code(ext.base)


def test_ext_meta_rejects_wrong_names():
    h = get_fixture("ext_hamming8").parity_check
    hx, ext, _ = alg3_extract_gtg(h)
    assert ext.degree >= 1
    text = format_ext_meta(ext).replace("p1 ", "q1 ")
    with pytest.raises(ValueError):
        parse_ext_meta(text, hx)


# ---------------------------------------------------------------------------
# 2^m-ary models
# ---------------------------------------------------------------------------


def test_alg4_binary_limit_keeps_code():
    h = get_fixture("hamming7").parity_check
    tg = build_tanner_graph(h)
    gm, trace = alg4_extract_gm(tg, 1)
    assert verify_qm(gm, 1).ok
    assert realized_code(gm).same_code(realized_code(tg))


def test_alg4_quaternary_hamming8():
    h = get_fixture("ext_hamming8").parity_check
    tg = build_tanner_graph(h)
    gm, trace = alg4_extract_gm(tg, 2)
    assert len(trace) >= 1
    assert verify_qm(gm, 2).ok
    assert realized_code(gm).same_code(realized_code(tg))
    n4 = [int(trace.checkpoints[k].split("=")[1]) for k in range(len(trace) + 1)]
    assert all(a > b for a, b in zip(n4, n4[1:]))
    assert n4[-1] == count_4_cycles(bipartition(gm)[2])


def test_alg4_trace_replays():
    h = get_fixture("ext_hamming8").parity_check
    tg = build_tanner_graph(h)
    gm, trace = alg4_extract_gm(tg, 2)
    again = replay(tg, parse_trace(format_trace(trace)))
    assert again == gm


def test_alg4_deterministic_across_workers():
    tg = build_tanner_graph(get_fixture("golay23").parity_check)
    a, ta = alg4_extract_gm(tg, 2, workers=1)
    b, tb = alg4_extract_gm(tg, 2, workers=2)
    assert a == b
    assert format_trace(ta) == format_trace(tb)
