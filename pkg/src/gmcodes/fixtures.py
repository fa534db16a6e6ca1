"""Built-in codes and the worked-example graphical models.

Cyclic codes are built from generator polynomials.  The parity-check matrix
of an ``[n, k]`` cyclic code is the ``(n-k) x n`` matrix whose rows are the
cyclic shifts of the reversed check polynomial ``h(x) = (x^n - 1) / g(x)``.
Extended versions append an all-ones row and an overall parity column.

BCH generator polynomials are products of minimal polynomials of powers of a
primitive element, computed here from cyclotomic cosets; the primitive
polynomials are ``x^5 + x^2 + 1`` and ``x^6 + x + 1``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import permutations

from .errors import UnknownFixture
from .gf2codes import BinaryMatrix, LinearCode
from .model import Constraint, GraphicalModel, Hidden, binding_key, hbind, realized_code, vbind

__all__ = [
    "Fixture",
    "fixtures",
    "get_fixture",
    "cyclic_parity_check",
    "extend_parity_check",
    "bch_generator",
    "minimal_polynomial",
    "poly_mul",
    "poly_divmod",
    "tailbiting_hamming_model",
    "binary_tree_model_hamming_minus",
    "EXTENDED_HAMMING_G",
    "HAMMING_MINUS_G",
]


# ---------------------------------------------------------------------------
# Polynomials over GF(2), stored as ints with bit i = coefficient of x^i
# ---------------------------------------------------------------------------


def poly_mul(a: int, b: int) -> int:
    out = 0
    while b:
        if b & 1:
            out ^= a
        a <<= 1
        b >>= 1
    return out


def poly_divmod(a: int, b: int) -> tuple[int, int]:
    if b == 0:
        raise ZeroDivisionError("division by the zero polynomial")
    q = 0
    db = b.bit_length()
    while a.bit_length() >= db:
        shift = a.bit_length() - db
        q |= 1 << shift
        a ^= b << shift
    return q, a


def _gf_mul(a: int, b: int, prim: int, m: int) -> int:
    out = 0
    while b:
        if b & 1:
            out ^= a
        b >>= 1
        a <<= 1
        if a >> m:
            a ^= prim
    return out


def minimal_polynomial(i: int, prim: int) -> int:
    """Minimal polynomial over GF(2) of ``alpha**i`` where ``alpha`` is a root of ``prim``."""
    m = prim.bit_length() - 1
    order = (1 << m) - 1
    coset = []
    j = i % order
    while j not in coset:
        coset.append(j)
        j = (2 * j) % order
    # power table of alpha
    powers = [1]
    for _ in range(order - 1):
        powers.append(_gf_mul(powers[-1], 2, prim, m))
    # product of (x + alpha^j) with coefficients in GF(2^m)
    coeffs = [1]  # coeffs[d] = coefficient of x^d
    for j in coset:
        root = powers[j]
        new = [0] * (len(coeffs) + 1)
        for d, c in enumerate(coeffs):
            new[d + 1] ^= c
            new[d] ^= _gf_mul(c, root, prim, m)
        coeffs = new
    if any(c not in (0, 1) for c in coeffs):
        raise ArithmeticError("minimal polynomial has coefficients outside GF(2)")
    return sum(c << d for d, c in enumerate(coeffs))


def bch_generator(n: int, designed: int, prim: int) -> int:
    """Narrow-sense BCH generator: lcm of minimal polynomials of alpha^1..alpha^(designed-1)."""
    seen: list[int] = []
    g = 1
    for i in range(1, designed):
        mp = minimal_polynomial(i, prim)
        if mp not in seen:
            seen.append(mp)
            g = poly_mul(g, mp)
    q, r = poly_divmod((1 << n) | 1, g)
    if r:
        raise ArithmeticError("generator does not divide x^n - 1")
    return g


def cyclic_parity_check(n: int, g: int) -> BinaryMatrix:
    """Parity-check matrix of the cyclic code generated by ``g``."""
    h, r = poly_divmod((1 << n) | 1, g)
    if r:
        raise ArithmeticError("generator does not divide x^n - 1")
    k = h.bit_length() - 1
    rev = sum(((h >> (k - i)) & 1) << i for i in range(k + 1))
    rows = [rev << i for i in range(n - k)]
    return BinaryMatrix(n - k, n, tuple(rows))


def extend_parity_check(h: BinaryMatrix) -> BinaryMatrix:
    """Append a zero column, then an all-ones row (overall parity)."""
    rows = list(h.bits) + [(1 << (h.cols + 1)) - 1]
    return BinaryMatrix(h.rows + 1, h.cols + 1, tuple(rows))


# ---------------------------------------------------------------------------
# Registry
# ---------------------------------------------------------------------------

EXTENDED_HAMMING_G = BinaryMatrix.from_strings(
    ["11110000", "00110110", "00001111", "01100011"]
)

HAMMING_MINUS_G = BinaryMatrix.from_strings(
    ["11110000", "00110110", "00001111", "01100011", "10100110"]
)

GOLAY_POLY = 0b110001110101  # x^11+x^10+x^6+x^5+x^4+x^2+1
PRIM5 = 0b100101  # x^5+x^2+1
PRIM6 = 0b1000011  # x^6+x+1


@dataclass(frozen=True)
class Fixture:
    name: str
    n: int
    k: int
    d: int | None
    parity_check: BinaryMatrix
    provenance: str

    @property
    def code(self) -> LinearCode:
        return LinearCode.from_parity(self.parity_check)


def _hamming7() -> BinaryMatrix:
    return cyclic_parity_check(7, 0b1011)


@lru_cache(maxsize=None)
def fixtures() -> dict[str, Fixture]:
    """Registry of pinned parity-check matrices, keyed by name."""
    reg: dict[str, Fixture] = {}

    def add(name, n, k, d, h, note):
        reg[name] = Fixture(name, n, k, d, h, note)

    add("hamming7", 7, 4, 3, _hamming7(), "cyclic, g(x) = x^3 + x + 1")
    add(
        "ext_hamming8",
        8,
        4,
        4,
        EXTENDED_HAMMING_G,
        "self-dual extended Hamming code; the generator of the tail-biting example used as H",
    )
    golay = cyclic_parity_check(23, GOLAY_POLY)
    add("golay23", 23, 12, 7, golay, "cyclic, g(x) = x^11+x^10+x^6+x^5+x^4+x^2+1")
    add("golay24", 24, 12, 8, extend_parity_check(golay), "golay23 extended by an overall parity")
    b31 = cyclic_parity_check(31, bch_generator(31, 5, PRIM5))
    add("bch31_21", 31, 21, 5, b31, "narrow-sense BCH, g = m1*m3 over x^5+x^2+1")
    add("ebch32_21", 32, 21, 6, extend_parity_check(b31), "bch31_21 extended by an overall parity")
    b63_51 = cyclic_parity_check(63, bch_generator(63, 5, PRIM6))
    add("bch63_51", 63, 51, 5, b63_51, "narrow-sense BCH, g = m1*m3 over x^6+x+1")
    add("ebch64_51", 64, 51, 6, extend_parity_check(b63_51), "bch63_51 extended by an overall parity")
    b63_30 = cyclic_parity_check(63, bch_generator(63, 13, PRIM6))
    add("bch63_30", 63, 30, 13, b63_30, "narrow-sense BCH, g = m1*m3*m5*m7*m9*m11 over x^6+x+1")
    return reg


def get_fixture(name: str) -> Fixture:
    try:
        return fixtures()[name]
    except KeyError:
        raise UnknownFixture(f"unknown fixture {name!r}; known: {', '.join(sorted(fixtures()))}") from None


# ---------------------------------------------------------------------------
# Worked-example models for the length-8 extended Hamming code
# ---------------------------------------------------------------------------


def _constraint(cid: str, binds, genrows) -> Constraint:
    keys = list(binds)
    gen = BinaryMatrix.from_strings(genrows)
    return Constraint(cid, LinearCode.from_generator(gen, [binding_key(b) for b in keys]), tuple(keys))


def _hid(label: str, size: int) -> list:
    return [hbind(label, c) for c in range(size)]


def tailbiting_hamming_model() -> GraphicalModel:
    """Single-cycle 4-ary model: eight sections, state sizes 1,2,2,2,1,2,2,2."""
    sizes = {1: 1, 2: 2, 3: 2, 4: 2, 5: 1, 6: 2, 7: 2, 8: 2}
    gens = {
        1: ["1010", "0101"],
        2: ["10110", "01101"],
        3: ["10001", "01011", "00101"],
        4: ["1010", "0111"],
        5: ["1010", "0101"],
        6: ["10110", "01101"],
        7: ["10001", "01011", "00101"],
        8: ["1010", "0111"],
    }
    cons = []
    for i in range(1, 9):
        left = f"S{i}"
        right = f"S{i % 8 + 1}"
        binds = _hid(left, sizes[i]) + [vbind(f"V{i}")] + _hid(right, sizes[i % 8 + 1])
        cons.append(_constraint(f"C{i}", binds, gens[i]))
    hiddens = []
    for i in range(1, 9):
        prev = 8 if i == 1 else i - 1
        hiddens.append(Hidden(f"S{i}", sizes[i], (f"C{i}", f"C{prev}")))
    return GraphicalModel(tuple(f"V{i}" for i in range(1, 9)), tuple(hiddens), tuple(cons))


def binary_tree_model_hamming_minus() -> GraphicalModel:
    """Cycle-free binary model for the dimension-5 code obtained by removing the
    wrap-around state constraint from the tail-biting model.

    Four branches hang off a central repetition constraint ``C24``.  Each
    branch is a parity check joining two leaf repetition constraints, one of
    which holds ``V1``, ``V2``, ``V8`` or ``V5``; the partner visibles are
    assigned so the realized code equals the span of ``HAMMING_MINUS_G``.
    """
    anchors = ["V1", "V2", "V8", "V5"]
    target = LinearCode.from_generator(HAMMING_MINUS_G, [f"V{i}" for i in range(1, 9)])
    others = ["V3", "V4", "V6", "V7"]
    for perm in permutations(others):
        gm = _branch_model(anchors, list(perm))
        if realized_code(gm).same_code(target):
            return gm
    raise AssertionError("no pairing realizes the target code")  # pragma: no cover


def _branch_model(anchors: list[str], partners: list[str]) -> GraphicalModel:
    cons = []
    hiddens = []
    hub_binds = []
    # branch b uses constraints (leafA, leafB, check) and hiddens (sa, sb, up)
    layout = [
        # (leaf holding the anchor, partner leaf, check, anchor hidden, partner hidden, up hidden, anchor first)
        ("C12", "C13", "C14", "S12", "S13", "S14", True),
        ("C15", "C16", "C17", "S15", "S16", "S17", True),
        ("C18", "C19", "C20", "S18", "S19", "S20", True),
        ("C22", "C21", "C23", "S22", "S21", "S23", False),
    ]
    for (la, lb, chk, sa, sb, up, anchor_first), anc, par in zip(layout, anchors, partners):
        cons.append(_constraint(la, [vbind(anc), hbind(sa, 0)], ["11"]))
        cons.append(_constraint(lb, [vbind(par), hbind(sb, 0)], ["11"]))
        first, second = (sa, sb) if anchor_first else (sb, sa)
        cons.append(_constraint(chk, [hbind(first, 0), hbind(second, 0), hbind(up, 0)], ["101", "011"]))
        hiddens.append(Hidden(sa, 1, (la, chk)))
        hiddens.append(Hidden(sb, 1, (lb, chk)))
        hiddens.append(Hidden(up, 1, (chk, "C24")))
        hub_binds.append(hbind(up, 0))
    cons.append(_constraint("C24", hub_binds, ["1111"]))
    order = {f"S{i}": i for i in range(12, 24)}
    hiddens.sort(key=lambda h: order[h.label])
    cons.sort(key=lambda c: int(c.cid[1:]))
    return GraphicalModel(tuple(f"V{i}" for i in range(1, 9)), tuple(hiddens), tuple(cons))
