"""Greedy extraction of Tanner graphs, generalized Tanner graphs and 2^m-ary models.

* :func:`alg1_reduce_tanner` applies row operations ``h_j <- h_i + h_j`` to a
  parity-check matrix while the cycle key ``(girth, -N_g, -N_{g+2})`` of its
  Tanner graph improves.
* :func:`insert_partial_parity` adds one partial-parity column and
  :func:`alg2_candidates` proposes the subsets worth adding;
  :func:`alg3_extract_gtg` inserts them until no 4-cycles remain.
* :func:`alg4_extract_gm` merges same-side constraint pairs of a bipartite
  model while this removes 4-cycles and keeps the model ``2^m``-ary.

Ties are always broken toward the lowest index or lowest-labeled subset, so
serial and parallel runs give identical results.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from .cycles import bipartition, census, count_4_cycles
from .errors import EmptySubset, ExtractionStalled, UnknownCoordinate
from .gf2codes import BinaryMatrix, GeneralizedExtension, LinearCode, generalized_extend
from .model import GraphicalModel, natural_key, verify_qm
from .parallel import pmap
from .transform import ExtractionTrace, TransformStep, merge

__all__ = [
    "Candidate",
    "alg1_reduce_tanner",
    "insert_partial_parity",
    "alg2_candidates",
    "alg3_extract_gtg",
    "alg4_extract_gm",
    "base_extension",
    "format_ext_meta",
    "parse_ext_meta",
    "read_ext_meta",
    "write_ext_meta",
]

log = logging.getLogger(__name__)

EXHAUSTIVE_LIMIT = 512


def _array(rows: Sequence[int], ncols: int) -> np.ndarray:
    out = np.zeros((len(rows), ncols), dtype=np.int64)
    for i, r in enumerate(rows):
        j = 0
        while r:
            if r & 1:
                out[i, j] = 1
            r >>= 1
            j += 1
    return out


# ---------------------------------------------------------------------------
# Tanner graph row operations
# ---------------------------------------------------------------------------


def _cycle_key(b: np.ndarray) -> tuple:
    c = census(b, 6)
    return c.key()


def _row_op_keys(args) -> list[tuple[int, int, tuple | None]]:
    b, i = args
    out = []
    for j in range(b.shape[0]):
        if j == i:
            continue
        new = b[i] ^ b[j]
        if not new.any():
            out.append((i, j, None))  # would leave an isolated check
            continue
        trial = b.copy()
        trial[j] = new
        out.append((i, j, _cycle_key(trial)))
    return out


def alg1_reduce_tanner(
    h: BinaryMatrix, workers: int = 1, max_steps: int | None = None
) -> tuple[BinaryMatrix, ExtractionTrace]:
    """Greedy row operations reducing short cycles in a Tanner graph.

    Every ordered pair ``(i, j)`` is tried each round; the operation with the
    best key ``(girth, -N_g, -N_{g+2})`` is applied when it beats the current
    matrix, scanning ``i`` then ``j`` in increasing order and keeping the
    first strictly better key.  Row operations giving a zero row are skipped.
    """
    if h.is_zero():
        raise EmptySubset("parity-check matrix is all zero")
    b = h.to_array().astype(np.int64)
    trace = ExtractionTrace(
        header=[
            "alg1 row operations h_j <- h_i + h_j",
            "key: girth up, then N_g down, then N_{g+2} down; both counters refreshed on every accepted step",
        ]
    )
    best = _cycle_key(b)
    trace.checkpoint(_key_note(best))
    steps = 0
    while max_steps is None or steps < max_steps:
        results = pmap(_row_op_keys, [(b, i) for i in range(b.shape[0])], workers)
        chosen = None
        running = best
        for block in results:
            for i, j, key in block:
                if key is not None and key > running:
                    running = key
                    chosen = (i, j)
        if chosen is None:
            break
        i, j = chosen
        b[j] ^= b[i]
        best = running
        steps += 1
        trace.append(TransformStep("row_op", (str(i), str(j))))
        trace.checkpoint(_key_note(best))
        log.debug("alg1 step %d: row %d into row %d, key %s", steps, i, j, best)
    return BinaryMatrix.from_array(b), trace


def _key_note(key: tuple) -> str:
    g, ng, ng2 = key
    if g == float("inf"):
        return "girth=inf"
    return f"girth={int(g)} N{int(g)}={-ng} N{int(g) + 2}={-ng2}"


# ---------------------------------------------------------------------------
# Partial parities
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Candidate:
    subset: tuple[str, ...]
    r_of_j: int
    delta_xt: int

    def __post_init__(self) -> None:
        if self.delta_xt != (len(self.subset) - 1) * (self.r_of_j - 1):
            raise ValueError("delta_xt must equal (|J| - 1)(r(J) - 1)")


def base_extension(h: BinaryMatrix, labels: Sequence[str] | None = None) -> GeneralizedExtension:
    """Degree-0 generalized extension of the code with parity-check matrix ``h``."""
    labels = list(labels) if labels else [f"V{j + 1}" for j in range(h.cols)]
    return generalized_extend(LinearCode.from_parity(h, labels), [])


def _mask_of(j: Iterable, labels: Sequence[str]) -> list[int]:
    pos = {lab: i for i, lab in enumerate(labels)}
    out = []
    for x in j:
        if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
            if not 0 <= int(x) < len(labels):
                raise UnknownCoordinate(f"coordinate index {x} out of range")
            out.append(int(x))
        elif x in pos:
            out.append(pos[x])
        else:
            raise UnknownCoordinate(f"unknown coordinate {x!r}")
    if len(set(out)) != len(out):
        raise ValueError("subset has repeated coordinates")
    return out


def _insert_rows(rows: list[int], ncols: int, cols: Sequence[int]) -> tuple[list[int], int]:
    """Row-level partial-parity insertion; returns new rows and r(J)."""
    mask = 0
    for c in cols:
        mask |= 1 << c
    hp = mask | (1 << ncols)
    out = []
    r = 0
    for row in rows:
        if row & mask == mask:
            out.append(row ^ hp)
            r += 1
        else:
            out.append(row)
    out.append(hp)
    return out, r


def _cut_size(rows: Sequence[int], ncols: int) -> int:
    edges = sum(r.bit_count() for r in rows)
    return edges - (len(rows) + ncols) + 2


def insert_partial_parity(
    h_ext: BinaryMatrix, ext: GeneralizedExtension, j: Iterable
) -> tuple[BinaryMatrix, GeneralizedExtension]:
    """Append the partial parity over ``j`` and clear ``j`` from every row covering it.

    A row with support ``j`` plus a unit entry in a new column is appended,
    then added to each other row containing all of ``j``.  The tree-inducing
    cut size drops by exactly ``(|j| - 1)(r(j) - 1)``.
    """
    labels = list(ext.extended.labels)
    if h_ext.cols != len(labels):
        raise ValueError("matrix and extension have different lengths")
    cols = _mask_of(j, labels)
    if len(cols) < 2:
        raise EmptySubset("a partial parity needs at least two coordinates")
    before = _cut_size(h_ext.bits, h_ext.cols)
    rows, r = _insert_rows(list(h_ext.bits), h_ext.cols, cols)
    after = _cut_size(rows, h_ext.cols + 1)
    assert before - after == (len(cols) - 1) * (r - 1), "cut-size change disagrees with (|J|-1)(r(J)-1)"
    new_ext = _extend(ext, [labels[c] for c in cols])
    return BinaryMatrix(len(rows), h_ext.cols + 1, tuple(rows)), new_ext


def _extend(ext: GeneralizedExtension, subset: Sequence[str]) -> GeneralizedExtension:
    """Append one partial parity to ``ext`` without recomputing earlier ones."""
    labels = list(ext.extended.labels)
    pos = [labels.index(s) for s in subset]
    mask = sum(1 << p for p in pos)
    col = len(labels)
    rows = [r | (((r & mask).bit_count() & 1) << col) for r in ext.extended.generator.bits]
    name = f"p{ext.degree + 1}"
    while name in labels:
        name += "'"
    extended = LinearCode(BinaryMatrix(len(rows), col + 1, tuple(rows)), tuple(labels + [name]))
    return GeneralizedExtension(ext.base, ext.parity_defs + (tuple(subset),), extended)


# ---------------------------------------------------------------------------
# Candidate generation
# ---------------------------------------------------------------------------


def _column_tuples(m: np.ndarray, size: int, limit: int) -> tuple[list[tuple[int, ...]], int, bool]:
    """Every column tuple of ``size`` covered by the most rows, in lexicographic order.

    Returns the tuples (at most ``limit``), their row count ``r`` and whether
    the list was cut short.
    """
    n = m.shape[1]
    if n < size:
        return [], 0, False
    cnt = m.T @ m
    best, found = 0, []

    def offer(t: tuple[int, ...], r: int) -> None:
        nonlocal best, found
        if r > best:
            best, found = r, [t]
        elif r == best:
            found.append(t)

    for a in range(n):
        for b in range(a + 1, n):
            if size == 2:
                offer((a, b), int(cnt[a, b]))
                continue
            if cnt[a, b] < best or b + 1 >= n:
                continue
            v2 = m[:, a] & m[:, b]
            c3 = v2 @ m[:, b + 1 :]
            for off in np.nonzero(c3 >= best)[0]:
                c = b + 1 + int(off)
                if size == 3:
                    offer((a, b, c), int(c3[off]))
                    continue
                if c + 1 >= n:
                    continue
                v3 = v2 & m[:, c]
                c4 = v3 @ m[:, c + 1 :]
                for off4 in np.nonzero(c4 >= best)[0]:
                    offer((a, b, c, c + 1 + int(off4)), int(c4[off4]))
    return found[:limit], best, len(found) > limit


def _row_tuples(rows: Sequence[int], size: int, limit: int) -> tuple[list[int], bool]:
    """Largest subsets ``J`` (as masks) covered by exactly ``size`` rows.

    Such a ``J`` is the common support of the rows covering it, so the
    search runs over row tuples.  All maximal-size masks are returned in the
    order their row tuples are met, with at most ``limit`` kept.
    """
    best_w, found = 2, []

    def covering(mask: int) -> int:
        return sum(1 for r in rows if r & mask == mask)

    def offer(mask: int) -> None:
        nonlocal best_w, found
        w = mask.bit_count()
        if w < best_w or mask in found or covering(mask) != size:
            return
        if w > best_w:
            best_w, found = w, [mask]
        else:
            found.append(mask)

    nr = len(rows)
    for a in range(nr):
        for b in range(a + 1, nr):
            ab = rows[a] & rows[b]
            if ab.bit_count() < best_w:
                continue
            if size == 2:
                offer(ab)
                continue
            for c in range(b + 1, nr):
                abc = ab & rows[c]
                if abc.bit_count() < best_w:
                    continue
                if size == 3:
                    offer(abc)
                    continue
                for d in range(c + 1, nr):
                    abcd = abc & rows[d]
                    if abcd.bit_count() >= best_w:
                        offer(abcd)
    return found[:limit], len(found) > limit


def _bits_of(mask: int) -> tuple[int, ...]:
    return tuple(i for i in range(mask.bit_length()) if (mask >> i) & 1)


def _candidate_indices(
    rows: Sequence[int], ncols: int, limit: int = EXHAUSTIVE_LIMIT
) -> tuple[list[tuple[tuple[int, ...], int, int]], bool]:
    """Candidate generation on integer rows: ``([(columns, r(J), delta)], truncated)``."""
    m = _array(rows, ncols)
    out: list[tuple[tuple[int, ...], int, int]] = []
    best = 0
    truncated = False

    def offer(cols: tuple[int, ...], r: int) -> None:
        nonlocal best, out
        delta = (len(cols) - 1) * (r - 1)
        if not out or delta > best:
            out, best = [(cols, r, delta)], delta
        elif delta == best and all(c != cols for c, _, _ in out):
            out.append((cols, r, delta))

    for size in (2, 3, 4):
        tuples, r, cut = _column_tuples(m, size, limit)
        truncated |= cut
        for cols in tuples:
            offer(cols, r)
    for size in (2, 3, 4):
        masks, cut = _row_tuples(rows, size, limit)
        truncated |= cut
        for mask in masks:
            offer(_bits_of(mask), size)
    return out, truncated


def alg2_candidates(h_ext: BinaryMatrix, ext: GeneralizedExtension | None = None) -> list[Candidate]:
    """Candidate partial-parity subsets with the largest cut-size reduction.

    Column pairs, 3-tuples and 4-tuples covered by the most rows are
    compared with the largest common supports of exactly 2, 3 and 4 rows; the
    list restarts whenever a strictly larger reduction appears and grows on
    ties.
    """
    labels = list(ext.extended.labels) if ext is not None else [f"x{j}" for j in range(h_ext.cols)]
    return [
        Candidate(tuple(labels[c] for c in cols), r, d)
        for cols, r, d in _candidate_indices(list(h_ext.bits), h_ext.cols)[0]
    ]


def alg3_extract_gtg(
    h: BinaryMatrix, labels: Sequence[str] | None = None, max_steps: int = 10_000
) -> tuple[BinaryMatrix, GeneralizedExtension, ExtractionTrace]:
    """Insert partial parities until the generalized Tanner graph has no 4-cycles.

    Each round takes the candidates of :func:`alg2_candidates` and inserts
    the one leaving the fewest 4-cycles (ties to the lowest subset).  A round
    whose best candidate neither shrinks the cut nor removes a 4-cycle stops
    the run with :class:`ExtractionStalled`.
    """
    ext = base_extension(h, labels)
    rows = list(h.bits)
    ncols = h.cols
    trace = ExtractionTrace(header=["alg3 partial-parity insertion"])
    n4 = count_4_cycles(_array(rows, ncols))
    trace.checkpoint(f"N4={n4}")
    subsets: list[tuple[int, ...]] = []
    flagged = False
    while n4 > 0:
        if len(subsets) >= max_steps:
            raise ExtractionStalled(f"alg3 exceeded {max_steps} insertions")
        trials = []
        cands, truncated = _candidate_indices(rows, ncols)
        if truncated and not flagged:
            trace.header.append("truncated search: tied candidate lists capped at %d" % EXHAUSTIVE_LIMIT)
            flagged = True
        for cols, r, delta in cands:
            new_rows, _ = _insert_rows(rows, ncols, cols)
            trials.append((count_4_cycles(_array(new_rows, ncols + 1)), cols, delta, new_rows))
        trials.sort(key=lambda t: (t[0], t[1]))
        after, cols, delta, new_rows = trials[0]
        if delta <= 0 and after >= n4:
            raise ExtractionStalled(
                f"no candidate reduces the cut or the 4-cycle count ({n4} 4-cycles remain)"
            )
        rows, ncols, n4 = new_rows, ncols + 1, after
        subsets.append(cols)
        trace.append(TransformStep("partial_parity", (",".join(str(c) for c in cols),)))
        trace.checkpoint(f"N4={n4}")
        log.debug("alg3 insertion %d: %s, N4 %d", len(subsets), cols, n4)
    for cols in subsets:
        ext = _extend(ext, [ext.extended.labels[c] for c in cols])
    return BinaryMatrix(len(rows), ncols, tuple(rows)), ext, trace


# ---------------------------------------------------------------------------
# 2^m-ary model extraction
# ---------------------------------------------------------------------------


def _merged_n4(args) -> list[tuple[int, int, int]]:
    b, a = args
    out = []
    keep = [x for x in range(b.shape[0])]
    for c in range(a + 1, b.shape[0]):
        trial = b[[x for x in keep if x != c]].copy()
        trial[a] = b[a] | b[c]
        out.append((count_4_cycles(trial), a, c))
    return out


def alg4_extract_gm(
    tg: GraphicalModel, m_star: int, workers: int = 1, max_steps: int = 100_000
) -> tuple[GraphicalModel, ExtractionTrace]:
    """Merge same-side constraint pairs while 4-cycles drop and the model stays ``2^m*``-ary.

    Each round ranks every pair of constraints on the same side of the
    bipartite constraint graph by the 4-cycle count after merging (the
    merged vertex takes the union of both neighbourhoods), then performs the
    best-ranked merge whose result passes ``verify_qm(m_star)``.
    """
    gm = tg
    trace = ExtractionTrace(header=[f"alg4 constraint merging, m*={m_star}"])
    left, right, b = bipartition(gm)
    n4 = count_4_cycles(b)
    trace.checkpoint(f"N4={n4}")
    steps = 0
    while n4 > 0 and steps < max_steps:
        ranked = []
        for ids, mat in ((left, b), (right, b.T.copy())):
            blocks = pmap(_merged_n4, [(mat, a) for a in range(mat.shape[0])], workers)
            for block in blocks:
                for after, a, c in block:
                    if after < n4:
                        i, j = sorted((ids[a], ids[c]), key=natural_key)
                        ranked.append((after, natural_key(i), natural_key(j), i, j))
        ranked.sort()
        accepted = None
        for after, _, _, i, j in ranked:
            cand = merge(gm, i, j)
            if verify_qm(cand, m_star).ok:
                accepted = (cand, i, j, after)
                break
        if accepted is None:
            break
        gm, i, j, after = accepted
        new_id = gm.constraints[-1].cid
        left, right, b = bipartition(gm)
        n4 = count_4_cycles(b)
        assert n4 == after, "merged graph disagrees with the contraction estimate"
        steps += 1
        trace.append(TransformStep("merge", (i, j, f"new={new_id}")))
        trace.checkpoint(f"N4={n4}")
        log.debug("alg4 step %d: merged %s and %s, N4 %d", steps, i, j, n4)
    return gm, trace


# ---------------------------------------------------------------------------
# Extension metadata files
# ---------------------------------------------------------------------------


def format_ext_meta(ext: GeneralizedExtension) -> str:
    """One line per partial parity: its label, then the labels it sums."""
    lines = [f"# base {' '.join(ext.base.labels)}"]
    for lab, subset in zip(ext.parity_labels, ext.parity_defs):
        lines.append(f"{lab} {' '.join(subset)}")
    return "\n".join(lines) + "\n"


def parse_ext_meta(text: str, h_ext: BinaryMatrix) -> GeneralizedExtension:
    """Rebuild the extension described by ``text`` whose parity-check matrix is ``h_ext``."""
    base_labels: list[str] | None = None
    defs: list[list[str]] = []
    names: list[str] = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("# base "):
            base_labels = line[len("# base ") :].split()
            continue
        if line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) < 3:
            raise ValueError(f"bad extension line {raw!r}")
        names.append(parts[0])
        defs.append(parts[1:])
    n = h_ext.cols - len(defs)
    if base_labels is None:
        base_labels = [f"V{j + 1}" for j in range(n)]
    if len(base_labels) != n:
        raise ValueError("extension file and matrix disagree on the code length")
    # the base code is the projection of the extended code onto the first n coordinates
    ext_code = LinearCode.from_parity(h_ext)
    rows = [r & ((1 << n) - 1) for r in ext_code.generator.bits]
    base = LinearCode.from_generator_rows(rows, n, base_labels)
    ext = generalized_extend(base, defs)
    if list(ext.parity_labels) != names:
        raise ValueError(f"partial parities must be named {', '.join(ext.parity_labels)} in order")
    return ext


def write_ext_meta(ext: GeneralizedExtension, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_ext_meta(ext))


def read_ext_meta(path, h_ext: BinaryMatrix) -> GeneralizedExtension:
    with open(path, encoding="utf-8") as fh:
        return parse_ext_meta(fh.read(), h_ext)
