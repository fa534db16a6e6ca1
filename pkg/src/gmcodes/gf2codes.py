"""Bit-packed GF(2) linear algebra and code-level constructions.

Every matrix row is stored as one Python integer whose bit ``j`` holds the
entry in column ``j``.  XOR of two rows is then a single integer operation,
which keeps elimination fast for the block lengths used here (a few hundred
coordinates at most).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    AlistFormatError,
    EmptySubset,
    ImpossiblePivot,
    LengthMismatch,
    UnknownCoordinate,
)

__all__ = [
    "BinaryMatrix",
    "LinearCode",
    "GeneralizedExtension",
    "rank",
    "systematic_form",
    "dual",
    "intersect",
    "project_and_subcode",
    "generalized_extend",
    "nullspace_rows",
    "row_reduce",
    "read_alist",
    "write_alist",
    "parse_alist",
    "format_alist",
    "join_codes",
]


# ---------------------------------------------------------------------------
# Row-level helpers (lists of Python ints)
# ---------------------------------------------------------------------------


def row_reduce(
    rows: Iterable[int],
    ncols: int,
    preferred: Sequence[int] = (),
    warn: bool = True,
) -> tuple[list[int], list[int]]:
    """Gauss-Jordan eliminate ``rows``.

    Pivot columns are taken from ``preferred`` first (in the given order) and
    then from the remaining columns in increasing order.  Returns the nonzero
    reduced rows in pivot-selection order together with their pivot columns.
    A preferred column that is dependent on earlier pivots triggers an
    :class:`ImpossiblePivot` warning and is skipped.
    """
    work = [r for r in rows if r]
    pivots: list[int] = []
    out: list[int] = []
    seen = set()
    pref_set = set(preferred)
    order = list(preferred) + [c for c in range(ncols) if c not in pref_set]
    for col in order:
        if col in seen:
            continue
        seen.add(col)
        mask = 1 << col
        idx = next((i for i, r in enumerate(work) if r & mask), None)
        if idx is None:
            if warn and col in pref_set:
                warnings.warn(
                    f"column {col} is dependent on earlier pivots; skipped",
                    ImpossiblePivot,
                    stacklevel=2,
                )
            continue
        prow = work.pop(idx)
        work = [r ^ prow if r & mask else r for r in work]
        out = [r ^ prow if r & mask else r for r in out]
        out.append(prow)
        pivots.append(col)
        work = [r for r in work if r]
        if not work:
            if warn:
                left = [c for c in preferred if c not in seen]
                if left:
                    warnings.warn(
                        f"columns {left} are dependent on earlier pivots; skipped",
                        ImpossiblePivot,
                        stacklevel=2,
                    )
            break
    return out, pivots


def _rank_rows(rows: Iterable[int]) -> int:
    """Rank of a list of integer rows via an xor basis keyed by leading bit."""
    basis: dict[int, int] = {}
    for r in rows:
        while r:
            top = r.bit_length() - 1
            if top in basis:
                r ^= basis[top]
            else:
                basis[top] = r
                break
    return len(basis)


def nullspace_rows(rows: Iterable[int], ncols: int) -> list[int]:
    """Basis of ``{x : r . x = 0 for every row r}`` as integer rows."""
    reduced, pivots = row_reduce(rows, ncols, warn=False)
    pivot_set = set(pivots)
    basis = []
    for free in range(ncols):
        if free in pivot_set:
            continue
        vec = 1 << free
        for r, p in zip(reduced, pivots):
            if (r >> free) & 1:
                vec |= 1 << p
        basis.append(vec)
    return basis


def _in_span(reduced: Sequence[int], pivots: Sequence[int], word: int) -> bool:
    for r, p in zip(reduced, pivots):
        if (word >> p) & 1:
            word ^= r
    return word == 0


def _parse_bits(text: str) -> int:
    value = 0
    for j, ch in enumerate(text):
        if ch == "1":
            value |= 1 << j
        elif ch != "0":
            raise ValueError(f"invalid bit character {ch!r}")
    return value


def _format_bits(word: int, ncols: int) -> str:
    return "".join("1" if (word >> j) & 1 else "0" for j in range(ncols))


# ---------------------------------------------------------------------------
# BinaryMatrix
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BinaryMatrix:
    """Immutable GF(2) matrix with rows packed into Python integers."""

    rows: int
    cols: int
    bits: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.rows < 0 or self.cols < 0:
            raise ValueError("matrix dimensions must be nonnegative")
        if len(self.bits) != self.rows:
            raise ValueError(f"expected {self.rows} packed rows, got {len(self.bits)}")
        limit = 1 << self.cols
        for r in self.bits:
            if r < 0 or r >= limit:
                raise ValueError("row has bits set beyond the column count")

    # construction -----------------------------------------------------
    @classmethod
    def zeros(cls, rows: int, cols: int) -> "BinaryMatrix":
        return cls(rows, cols, (0,) * rows)

    @classmethod
    def identity(cls, n: int) -> "BinaryMatrix":
        return cls(n, n, tuple(1 << i for i in range(n)))

    @classmethod
    def from_ints(cls, words: Iterable[int], cols: int) -> "BinaryMatrix":
        words = tuple(int(w) for w in words)
        return cls(len(words), cols, words)

    @classmethod
    def from_strings(cls, lines: Iterable[str]) -> "BinaryMatrix":
        """Build from bitstrings; character ``j`` is column ``j``; spaces ignored."""
        cleaned = ["".join(line.split()) for line in lines]
        if not cleaned:
            return cls(0, 0, ())
        width = len(cleaned[0])
        if any(len(c) != width for c in cleaned):
            raise ValueError("rows have different lengths")
        return cls(len(cleaned), width, tuple(_parse_bits(c) for c in cleaned))

    @classmethod
    def from_array(cls, array) -> "BinaryMatrix":
        arr = np.asarray(array)
        if arr.ndim != 2:
            raise ValueError("expected a 2-D array")
        arr = (arr.astype(np.int64) & 1).astype(np.uint8)
        weights = [1 << j for j in range(arr.shape[1])]
        bits = tuple(sum(w for w, b in zip(weights, row) if b) for row in arr.tolist())
        return cls(arr.shape[0], arr.shape[1], bits)

    # access -----------------------------------------------------------
    def _check_row(self, i: int) -> None:
        if not 0 <= i < self.rows:
            raise IndexError(f"row {i} out of range for {self.rows} rows")

    def _check_col(self, j: int) -> None:
        if not 0 <= j < self.cols:
            raise IndexError(f"column {j} out of range for {self.cols} columns")

    def __getitem__(self, key: tuple[int, int]) -> int:
        i, j = key
        self._check_row(i)
        self._check_col(j)
        return (self.bits[i] >> j) & 1

    def row(self, i: int) -> int:
        self._check_row(i)
        return self.bits[i]

    def row_support(self, i: int) -> list[int]:
        r = self.row(i)
        return [j for j in range(self.cols) if (r >> j) & 1]

    def column(self, j: int) -> int:
        """Column ``j`` packed as an integer whose bit ``i`` is row ``i``."""
        self._check_col(j)
        return sum(1 << i for i, r in enumerate(self.bits) if (r >> j) & 1)

    def to_array(self) -> np.ndarray:
        out = np.zeros((self.rows, self.cols), dtype=np.uint8)
        for i, r in enumerate(self.bits):
            j = 0
            while r:
                if r & 1:
                    out[i, j] = 1
                r >>= 1
                j += 1
        return out

    def to_strings(self) -> list[str]:
        return [_format_bits(r, self.cols) for r in self.bits]

    def __str__(self) -> str:
        return "\n".join(self.to_strings())

    # structure --------------------------------------------------------
    def weight(self) -> int:
        return sum(r.bit_count() for r in self.bits)

    def is_zero(self) -> bool:
        return not any(self.bits)

    def transpose(self) -> "BinaryMatrix":
        return BinaryMatrix(self.cols, self.rows, tuple(self.column(j) for j in range(self.cols)))

    def select_columns(self, cols: Sequence[int]) -> "BinaryMatrix":
        for j in cols:
            self._check_col(j)
        bits = []
        for r in self.bits:
            w = 0
            for new, old in enumerate(cols):
                if (r >> old) & 1:
                    w |= 1 << new
            bits.append(w)
        return BinaryMatrix(self.rows, len(cols), tuple(bits))

    def select_rows(self, rows: Sequence[int]) -> "BinaryMatrix":
        for i in rows:
            self._check_row(i)
        return BinaryMatrix(len(rows), self.cols, tuple(self.bits[i] for i in rows))

    def vstack(self, other: "BinaryMatrix") -> "BinaryMatrix":
        if other.cols != self.cols:
            raise LengthMismatch("cannot stack matrices with different column counts")
        return BinaryMatrix(self.rows + other.rows, self.cols, self.bits + other.bits)

    def hstack(self, other: "BinaryMatrix") -> "BinaryMatrix":
        if other.rows != self.rows:
            raise LengthMismatch("cannot join matrices with different row counts")
        shift = self.cols
        bits = tuple(a | (b << shift) for a, b in zip(self.bits, other.bits))
        return BinaryMatrix(self.rows, self.cols + other.cols, bits)

    def with_row(self, i: int, word: int) -> "BinaryMatrix":
        self._check_row(i)
        bits = list(self.bits)
        bits[i] = word
        return BinaryMatrix(self.rows, self.cols, tuple(bits))

    def row_space_equals(self, other: "BinaryMatrix") -> bool:
        if self.cols != other.cols:
            return False
        ra = rank(self)
        return ra == rank(other) == _rank_rows(self.bits + other.bits)


# ---------------------------------------------------------------------------
# LinearCode and GeneralizedExtension
# ---------------------------------------------------------------------------


def _default_labels(n: int) -> tuple[str, ...]:
    return tuple(f"x{j}" for j in range(n))


@dataclass(frozen=True)
class LinearCode:
    """Binary linear code given by a full-rank generator matrix.

    ``labels`` name the coordinates; ``parity`` optionally records a
    (possibly redundant) parity-check matrix.
    """

    generator: BinaryMatrix
    labels: tuple[str, ...] = field(default=())
    parity: BinaryMatrix | None = None

    def __post_init__(self) -> None:
        if not self.labels:
            object.__setattr__(self, "labels", _default_labels(self.generator.cols))
        else:
            object.__setattr__(self, "labels", tuple(self.labels))
        if len(self.labels) != self.generator.cols:
            raise LengthMismatch(
                f"{len(self.labels)} labels for a code of length {self.generator.cols}"
            )
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("coordinate labels must be unique")
        if _rank_rows(self.generator.bits) != self.generator.rows:
            raise ValueError("generator matrix is not full rank")
        if self.parity is not None:
            if self.parity.cols != self.generator.cols:
                raise LengthMismatch("parity-check matrix has the wrong length")
            for g in self.generator.bits:
                for h in self.parity.bits:
                    if (g & h).bit_count() & 1:
                        raise ValueError("generator row is not orthogonal to the parity checks")

    # constructors -----------------------------------------------------
    @classmethod
    def from_generator_rows(
        cls, rows: Iterable[int], n: int, labels: Sequence[str] | None = None
    ) -> "LinearCode":
        """Code spanned by arbitrary (possibly dependent) rows, stored in reduced form."""
        reduced, pivots = row_reduce(rows, n, warn=False)
        order = sorted(range(len(reduced)), key=lambda i: pivots[i])
        gen = BinaryMatrix(len(reduced), n, tuple(reduced[i] for i in order))
        return cls(gen, tuple(labels) if labels else ())

    @classmethod
    def from_generator(cls, g: BinaryMatrix, labels: Sequence[str] | None = None) -> "LinearCode":
        return cls.from_generator_rows(g.bits, g.cols, labels)

    @classmethod
    def from_parity(cls, h: BinaryMatrix, labels: Sequence[str] | None = None) -> "LinearCode":
        basis = nullspace_rows(h.bits, h.cols)
        code = cls.from_generator_rows(basis, h.cols, labels)
        return cls(code.generator, code.labels, h)

    @classmethod
    def full(cls, labels: Sequence[str]) -> "LinearCode":
        n = len(labels)
        return cls(BinaryMatrix.identity(n), tuple(labels))

    @classmethod
    def zero(cls, labels: Sequence[str]) -> "LinearCode":
        return cls(BinaryMatrix.zeros(0, len(labels)), tuple(labels) if labels else ())

    @classmethod
    def repetition(cls, labels: Sequence[str]) -> "LinearCode":
        n = len(labels)
        if n == 0:
            return cls.zero(())
        return cls(BinaryMatrix(1, n, ((1 << n) - 1,)), tuple(labels))

    @classmethod
    def single_parity(cls, labels: Sequence[str]) -> "LinearCode":
        n = len(labels)
        h = BinaryMatrix(1, n, ((1 << n) - 1,))
        return cls.from_parity(h, labels)

    # properties -------------------------------------------------------
    @property
    def n(self) -> int:
        return self.generator.cols

    @property
    def k(self) -> int:
        return self.generator.rows

    @property
    def redundancy(self) -> int:
        return self.n - self.k

    @cached_property
    def _reduced(self) -> tuple[list[int], list[int]]:
        return row_reduce(self.generator.bits, self.n, warn=False)

    @cached_property
    def canonical_rows(self) -> tuple[int, ...]:
        """Reduced row echelon generator rows sorted by pivot (a code invariant)."""
        reduced, pivots = self._reduced
        return tuple(r for _, r in sorted(zip(pivots, reduced)))

    @cached_property
    def check_rows(self) -> tuple[int, ...]:
        """Reduced basis of the dual code."""
        basis = nullspace_rows(self.generator.bits, self.n)
        reduced, pivots = row_reduce(basis, self.n, warn=False)
        return tuple(r for _, r in sorted(zip(pivots, reduced)))

    def contains(self, word: int) -> bool:
        reduced, pivots = self._reduced
        return _in_span(reduced, pivots, word)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise UnknownCoordinate(f"unknown coordinate {label!r}") from None

    def same_code(self, other: "LinearCode") -> bool:
        """Equal row space over identical coordinate labels."""
        return self.labels == other.labels and self.canonical_rows == other.canonical_rows

    def relabel(self, labels: Sequence[str]) -> "LinearCode":
        return LinearCode(self.generator, tuple(labels), self.parity)

    def reorder(self, labels: Sequence[str]) -> "LinearCode":
        """Same code with coordinates permuted into the order given by ``labels``."""
        if sorted(labels) != sorted(self.labels):
            raise LengthMismatch("reorder needs a permutation of the coordinate labels")
        cols = [self.index(lab) for lab in labels]
        return LinearCode(self.generator.select_columns(cols), tuple(labels))

    def codewords(self) -> list[int]:
        """All ``2**k`` codewords as integers (for small codes)."""
        words = [0]
        for g in self.generator.bits:
            words += [w ^ g for w in words]
        return words

    def encode(self, message: int) -> int:
        word = 0
        for i, g in enumerate(self.generator.bits):
            if (message >> i) & 1:
                word ^= g
        return word


def _resolve(code: LinearCode, coords: Iterable) -> list[int]:
    out = []
    for c in coords:
        if isinstance(c, (int, np.integer)) and not isinstance(c, bool):
            if not 0 <= int(c) < code.n:
                raise UnknownCoordinate(f"coordinate index {c} out of range")
            out.append(int(c))
        else:
            out.append(code.index(str(c)))
    return out


@dataclass(frozen=True)
class GeneralizedExtension:
    """A base code together with appended partial-parity coordinates."""

    base: LinearCode
    parity_defs: tuple[tuple[str, ...], ...]
    extended: LinearCode

    @property
    def degree(self) -> int:
        return len(self.parity_defs)

    @property
    def parity_labels(self) -> tuple[str, ...]:
        return self.extended.labels[self.base.n :]


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------


def rank(m: BinaryMatrix) -> int:
    """Rank of ``m`` over GF(2)."""
    return _rank_rows(m.bits)


def systematic_form(
    m: BinaryMatrix, preferred_pivots: Sequence[int] = ()
) -> tuple[BinaryMatrix, list[int]]:
    """Row-reduce ``m`` choosing pivots from ``preferred_pivots`` first.

    Dependent preferred pivots are skipped with an :class:`ImpossiblePivot`
    warning.  Zero rows are dropped, so the result has ``rank(m)`` rows.
    """
    for p in preferred_pivots:
        m._check_col(p)
    reduced, pivots = row_reduce(m.bits, m.cols, preferred_pivots)
    return BinaryMatrix(len(reduced), m.cols, tuple(reduced)), pivots


def dual(c: LinearCode) -> LinearCode:
    """The dual code, over the same coordinate labels."""
    basis = list(c.check_rows)
    gen = BinaryMatrix(len(basis), c.n, tuple(basis))
    return LinearCode(gen, c.labels, c.generator)


def intersect(a: LinearCode, b: LinearCode) -> LinearCode:
    """Codewords common to ``a`` and ``b``."""
    if a.n != b.n or a.labels != b.labels:
        raise LengthMismatch("intersect needs codes over identical coordinate labels")
    checks = list(a.check_rows) + list(b.check_rows)
    h = BinaryMatrix(len(checks), a.n, tuple(checks))
    basis = nullspace_rows(checks, a.n)
    code = LinearCode.from_generator_rows(basis, a.n, a.labels)
    return LinearCode(code.generator, code.labels, h)


def project_and_subcode(c: LinearCode, j: Iterable) -> tuple[LinearCode, LinearCode]:
    """Projection of ``c`` onto ``j`` and the subcode supported on ``j``.

    ``j`` may contain labels or integer positions; the returned codes use the
    coordinate order of ``j``.
    """
    cols = _resolve(c, j)
    if not cols:
        raise EmptySubset("coordinate subset is empty")
    if len(set(cols)) != len(cols):
        raise ValueError("coordinate subset has repeated entries")
    labels = tuple(c.labels[i] for i in cols)
    g = c.generator
    projection = LinearCode.from_generator(g.select_columns(cols), labels)
    outside = [i for i in range(c.n) if i not in set(cols)]
    reduced, pivots = row_reduce(g.bits, c.n, outside, warn=False)
    pivot_outside = set(outside)
    inside_rows = [r for r, p in zip(reduced, pivots) if p not in pivot_outside]
    sub = BinaryMatrix(len(inside_rows), c.n, tuple(inside_rows)).select_columns(cols)
    subcode = LinearCode.from_generator(sub, labels)
    return projection, subcode


def generalized_extend(c: LinearCode, subsets: Sequence[Iterable]) -> GeneralizedExtension:
    """Append one partial-parity coordinate per subset.

    Subset ``j`` may reference base coordinates and the partial parities
    ``p1 .. p{j-1}`` created before it.  New coordinates are labelled
    ``p1, p2, ...`` (suffixed with ``'`` if a base label already uses the name).
    """
    labels = list(c.labels)
    rows = list(c.generator.bits)
    defs: list[tuple[str, ...]] = []
    for idx, subset in enumerate(subsets, start=1):
        members = list(subset)
        if not members:
            raise EmptySubset(f"partial parity {idx} has an empty subset")
        positions = []
        for mbr in members:
            if isinstance(mbr, (int, np.integer)) and not isinstance(mbr, bool):
                if not 0 <= int(mbr) < len(labels):
                    raise UnknownCoordinate(f"coordinate index {mbr} out of range")
                positions.append(int(mbr))
            else:
                if mbr not in labels:
                    raise UnknownCoordinate(f"unknown coordinate {mbr!r}")
                positions.append(labels.index(mbr))
        mask = sum(1 << p for p in positions)
        col = len(labels)
        rows = [r | ((((r & mask).bit_count()) & 1) << col) for r in rows]
        name = f"p{idx}"
        while name in labels:
            name += "'"
        labels.append(name)
        defs.append(tuple(labels[p] for p in positions))
    gen = BinaryMatrix(len(rows), len(labels), tuple(rows))
    extended = LinearCode(gen, tuple(labels))
    return GeneralizedExtension(c, tuple(defs), extended)


# ---------------------------------------------------------------------------
# alist input/output
# ---------------------------------------------------------------------------


def parse_alist(text: str) -> BinaryMatrix:
    """Parse MacKay alist text into an ``m x n`` parity-check matrix."""
    lines = [ln.split() for ln in text.splitlines() if ln.strip()]
    try:
        n, m = int(lines[0][0]), int(lines[0][1])
        int(lines[1][0]), int(lines[1][1])
        col_deg = [int(t) for t in lines[2]]
        row_deg = [int(t) for t in lines[3]]
    except (IndexError, ValueError) as exc:
        raise AlistFormatError(f"bad alist header: {exc}") from None
    if len(col_deg) != n or len(row_deg) != m:
        raise AlistFormatError("degree lists do not match the declared dimensions")
    if len(lines) < 4 + n + m:
        raise AlistFormatError("alist file is truncated")
    bits = [0] * m
    col_sets = []
    for j in range(n):
        entries = [int(t) for t in lines[4 + j] if int(t) != 0]
        if len(entries) != col_deg[j]:
            raise AlistFormatError(f"column {j + 1} lists {len(entries)} entries, degree {col_deg[j]}")
        col_sets.append(set(entries))
        for i in entries:
            if not 1 <= i <= m:
                raise AlistFormatError(f"row index {i} out of range")
            bits[i - 1] |= 1 << j
    for i in range(m):
        entries = [int(t) for t in lines[4 + n + i] if int(t) != 0]
        if len(entries) != row_deg[i]:
            raise AlistFormatError(f"row {i + 1} lists {len(entries)} entries, degree {row_deg[i]}")
        expected = {j + 1 for j in range(n) if (bits[i] >> j) & 1}
        if set(entries) != expected:
            raise AlistFormatError(f"row {i + 1} disagrees with the column lists")
    return BinaryMatrix(m, n, tuple(bits))


def format_alist(h: BinaryMatrix) -> str:
    """Render ``h`` in alist format without zero padding."""
    cols = [[i + 1 for i in range(h.rows) if (h.bits[i] >> j) & 1] for j in range(h.cols)]
    rows = [[j + 1 for j in range(h.cols) if (h.bits[i] >> j) & 1] for i in range(h.rows)]
    out = [f"{h.cols} {h.rows}"]
    out.append(f"{max((len(c) for c in cols), default=0)} {max((len(r) for r in rows), default=0)}")
    out.append(" ".join(str(len(c)) for c in cols))
    out.append(" ".join(str(len(r)) for r in rows))
    # an empty adjacency list is written as a lone 0 so the line survives
    out += [" ".join(map(str, c)) or "0" for c in cols]
    out += [" ".join(map(str, r)) or "0" for r in rows]
    return "\n".join(out) + "\n"


def read_alist(path) -> BinaryMatrix:
    with open(path, encoding="utf-8") as fh:
        return parse_alist(fh.read())


def write_alist(h: BinaryMatrix, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_alist(h))


def join_codes(codes: Sequence[LinearCode], out_labels: Sequence[str]) -> LinearCode:
    """Project the intersection of codes living on overlapping label sets.

    Each code constrains the coordinates named by its labels; coordinates are
    identified across codes by label.  The returned code is the set of
    assignments to ``out_labels`` that extend to a configuration satisfying
    every code.  Labels in ``out_labels`` that no code mentions are free.
    """
    universe: dict[str, int] = {}
    for lab in out_labels:
        universe.setdefault(lab, len(universe))
    for code in codes:
        for lab in code.labels:
            universe.setdefault(lab, len(universe))
    checks = []
    for code in codes:
        pos = [universe[lab] for lab in code.labels]
        for h in code.check_rows:
            w = 0
            for j, p in enumerate(pos):
                if (h >> j) & 1:
                    w |= 1 << p
            checks.append(w)
    n_out = len(out_labels)
    out_positions = [universe[lab] for lab in out_labels]
    hidden_cols = [c for c in range(len(universe)) if c not in set(out_positions)]
    reduced, pivots = row_reduce(checks, len(universe), hidden_cols, warn=False)
    hidden_set = set(hidden_cols)
    visible_checks = []
    for r, p in zip(reduced, pivots):
        if p in hidden_set:
            continue
        w = 0
        for new, old in enumerate(out_positions):
            if (r >> old) & 1:
                w |= 1 << new
        visible_checks.append(w)
    if len(set(out_labels)) != n_out:
        raise ValueError("output labels must be unique")
    basis = nullspace_rows(visible_checks, n_out)
    return LinearCode.from_generator_rows(basis, n_out, tuple(out_labels) if out_labels else ())
