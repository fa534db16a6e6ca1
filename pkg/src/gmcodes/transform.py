"""Basic graphical model operations and the pipelines built from them.

Every operation takes a :class:`GraphicalModel` and returns a new one.  Local
codes are manipulated by coordinate label (see :mod:`gmcodes.model`), so most
operations reduce to :func:`join_codes` calls: "the set of assignments to
these coordinates that extend to a configuration of those codes".

The model-changing operations can be recorded as :class:`TransformStep`
records and replayed from a trace file.
"""

from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass, field
from itertools import product
from typing import Iterable, Sequence

import networkx as nx
from networkx.algorithms import isomorphism as nx_iso

from .errors import (
    CapExceeded,
    Disconnected,
    InvalidModel,
    InvalidPartition,
    NotARepetition,
    NotCycleFree,
    NotDetermined,
    NotInternal,
    NotIsolated,
    NotSplittable,
    NotTrivial,
    TraceFormatError,
    UnknownConstraint,
    UnknownCoordinate,
)
from .gf2codes import (
    BinaryMatrix,
    LinearCode,
    _format_bits,
    _in_span,
    _parse_bits,
    _rank_rows,
    join_codes,
    nullspace_rows,
    project_and_subcode,
    row_reduce,
)
from .model import (
    DEFAULT_DIM_CAP,
    Constraint,
    GraphicalModel,
    Hidden,
    _global_checks,
    behavior_dimension,
    binding_key,
    format_gmf,
    hbind,
    natural_key,
    realized_code,
    topology,
    vbind,
    verify_qm,
)

__all__ = [
    "TransformStep",
    "ExtractionTrace",
    "merge",
    "split",
    "repetition",
    "repetition_insert",
    "repetition_remove",
    "trivial",
    "trivial_insert",
    "trivial_remove",
    "isolated_ppc",
    "ippc_insert",
    "ippc_remove",
    "internalize",
    "remove_internal",
    "redefine_internal",
    "absorb_spc",
    "normalize_to_tanner",
    "read_parity_check",
    "apply_step",
    "replay",
    "format_trace",
    "parse_trace",
    "read_trace",
    "write_trace",
    "canonical_gmf",
    "isomorphic",
]

STEP_KINDS = (
    "merge",
    "split",
    "rep_insert",
    "rep_remove",
    "trivial_insert",
    "trivial_remove",
    "ippc_insert",
    "ippc_remove",
    "internalize",
    "remove_internal",
    "redefine_internal",
    "absorb_spc",
    # matrix-level steps recorded by the extraction heuristics
    "row_op",
    "partial_parity",
)


# ---------------------------------------------------------------------------
# Small helpers
# ---------------------------------------------------------------------------


def _keys(bindings: Sequence) -> list[str]:
    return [binding_key(b) for b in bindings]


def _hkeys(label: str, size: int) -> list[str]:
    return [f"h:{label}.{t}" for t in range(size)]


def _code_from_key_checks(keys: Sequence[str], checks: Iterable[Iterable[str]]) -> LinearCode:
    pos = {k: i for i, k in enumerate(keys)}
    rows = []
    for chk in checks:
        w = 0
        for k in chk:
            w ^= 1 << pos[k]
        rows.append(w)
    basis = nullspace_rows(rows, len(keys))
    return LinearCode.from_generator_rows(basis, len(keys), tuple(keys) if keys else ())


def _key_checks(code: LinearCode) -> list[set[str]]:
    return [{code.labels[j] for j in range(code.n) if (h >> j) & 1} for h in code.check_rows]


def _equality_code(a_keys: Sequence[str], b_keys: Sequence[str]) -> LinearCode:
    """Code over ``a_keys + b_keys`` forcing the two blocks to be equal."""
    s = len(a_keys)
    rows = [(1 << t) | (1 << (s + t)) for t in range(s)]
    return LinearCode(BinaryMatrix(s, 2 * s, tuple(rows)), tuple(a_keys) + tuple(b_keys))


def _project(c: Constraint, drop: Iterable[str]) -> Constraint:
    """Constraint with the named variables removed and its code projected."""
    drop = set(drop)
    keep = [b for b in c.bindings if b[1] not in drop]
    code = join_codes([c.code], _keys(keep)) if keep else LinearCode.zero(())
    return Constraint(c.cid, code, tuple(keep))


def _replace_var(c: Constraint, old: str, new_bindings: Sequence, code: LinearCode | None = None) -> Constraint:
    """Substitute the bindings of variable ``old`` by ``new_bindings`` in place."""
    out = []
    done = False
    for b in c.bindings:
        if b[1] == old and b[0] in ("h", "v"):
            if not done:
                out += list(new_bindings)
                done = True
            continue
        out.append(b)
    if code is None:
        code = c.code.relabel(_keys(out))
    return Constraint(c.cid, code, tuple(out))


def _remap_endpoints(hiddens: Iterable[Hidden], old: str, new: str) -> list[Hidden]:
    out = []
    for h in hiddens:
        a, b = h.endpoints
        out.append(Hidden(h.label, h.size, (new if a == old else a, new if b == old else b)))
    return out


class _Labels:
    """Fresh label source that remembers labels handed out in one operation."""

    def __init__(self, gm: GraphicalModel):
        self.gm = gm
        self.hidden_taken: list[str] = []
        self.cons_taken: list[str] = []

    def hidden(self) -> str:
        lab = self.gm.fresh_hidden_label(taken=self.hidden_taken)
        self.hidden_taken.append(lab)
        return lab

    def constraint(self) -> str:
        cid = self.gm.fresh_constraint_id(taken=self.cons_taken)
        self.cons_taken.append(cid)
        return cid


def _is_repetition(code: LinearCode) -> bool:
    return code.n >= 1 and code.k == 1 and code.generator.bits[0] == (1 << code.n) - 1


# ---------------------------------------------------------------------------
# Repetition, trivial and isolated partial-parity constraints
# ---------------------------------------------------------------------------


def repetition_insert(gm: GraphicalModel, target: str, new_id: str | None = None) -> GraphicalModel:
    """Insert a degree-2 repetition constraint on a hidden or visible variable.

    On a hidden variable ``S`` joining ``a`` and ``b`` a copy ``S'`` takes
    over ``S``'s place at ``b`` and the new constraint enforces ``S = S'``.
    On a visible variable the new constraint holds the visible and a binary
    hidden variable that takes the visible's place at its old constraint.
    """
    labels = _Labels(gm)
    rid = new_id or labels.constraint()
    if target in gm.hidden_map:
        h = gm.hidden(target)
        a, b = h.endpoints
        copy = labels.hidden()
        cb = gm.constraint(b)
        cb_new = _replace_var(cb, target, [hbind(copy, t) for t in range(h.size)])
        rbinds = [hbind(target, t) for t in range(h.size)] + [hbind(copy, t) for t in range(h.size)]
        rcode = _equality_code(_hkeys(target, h.size), _hkeys(copy, h.size))
        hiddens = []
        for x in gm.hiddens:
            hiddens.append(Hidden(x.label, x.size, (a, rid)) if x.label == target else x)
        hiddens.append(Hidden(copy, h.size, (rid, b)))
        return gm.replace(update={b: cb_new}, add=[Constraint(rid, rcode, tuple(rbinds))], hiddens=hiddens)
    if target in gm.visible_owner:
        a = gm.visible_owner[target]
        s = labels.hidden()
        ca = _replace_var(gm.constraint(a), target, [hbind(s, 0)])
        rbinds = (vbind(target), hbind(s, 0))
        rcode = _equality_code([f"v:{target}"], [f"h:{s}.0"])
        hiddens = list(gm.hiddens) + [Hidden(s, 1, (a, rid))]
        return gm.replace(update={a: ca}, add=[Constraint(rid, rcode, rbinds)], hiddens=hiddens)
    raise UnknownCoordinate(f"no hidden or visible variable named {target!r}")


def repetition_remove(gm: GraphicalModel, cid: str) -> GraphicalModel:
    """Remove a degree-2 repetition constraint, relabelling the second variable as the first."""
    c = gm.constraint(cid)
    vars_ = []
    for b in c.bindings:
        key = (b[0], b[1])
        if key not in vars_:
            vars_.append(key)
    if len(vars_) != 2:
        raise NotARepetition(f"{cid} is not incident on exactly two variables")
    (k1, v1), (k2, v2) = vars_
    size1 = gm.hidden(v1).size if k1 == "h" else 1
    size2 = gm.hidden(v2).size if k2 == "h" else 1
    if size1 != size2:
        raise NotARepetition(f"{cid} joins variables of different sizes")
    keys1 = _hkeys(v1, size1) if k1 == "h" else [f"v:{v1}"]
    keys2 = _hkeys(v2, size2) if k2 == "h" else [f"v:{v2}"]
    eq = _equality_code(keys1, keys2)
    if not c.code.reorder(keys1 + keys2).same_code(eq):
        raise NotARepetition(f"{cid} does not enforce equality")
    if k1 == "v" and k2 == "v":
        raise NotARepetition(f"{cid} joins two visible variables; neither can be relabelled")
    if k1 == "v" or k2 == "v":
        vis, hid = (v1, v2) if k1 == "v" else (v2, v1)
        n = gm.other_end(hid, cid)
        cn = _replace_var(gm.constraint(n), hid, [vbind(vis)])
        hiddens = [h for h in gm.hiddens if h.label != hid]
        return gm.replace(remove=[cid], update={n: cn}, hiddens=hiddens)
    keep, gone = v1, v2
    n = gm.other_end(gone, cid)
    if n == cid:
        raise NotARepetition(f"{cid} forms a self-loop")
    cn = _replace_var(gm.constraint(n), gone, [hbind(keep, t) for t in range(size1)])
    hiddens = []
    for h in gm.hiddens:
        if h.label == gone:
            continue
        if h.label == keep:
            a, b = h.endpoints
            h = Hidden(keep, h.size, (n if a == cid else a, n if b == cid else b))
            if h.endpoints[0] == h.endpoints[1]:
                raise NotARepetition(f"removing {cid} would create a self-loop")
        hiddens.append(h)
    return gm.replace(remove=[cid], update={n: cn}, hiddens=hiddens)


def repetition(gm: GraphicalModel, target: str, mode: str = "insert") -> GraphicalModel:
    """``mode='insert'``: insert on variable ``target``; ``mode='remove'``: remove constraint ``target``."""
    if mode == "insert":
        return repetition_insert(gm, target)
    if mode == "remove":
        return repetition_remove(gm, target)
    raise ValueError(f"unknown mode {mode!r}")


def trivial_insert(gm: GraphicalModel, new_id: str | None = None) -> GraphicalModel:
    cid = new_id or gm.fresh_constraint_id()
    return gm.replace(add=[Constraint(cid, LinearCode.zero(()), ())])


def trivial_remove(gm: GraphicalModel, cid: str) -> GraphicalModel:
    c = gm.constraint(cid)
    if c.bindings:
        raise NotTrivial(f"{cid} still has {len(c.bindings)} bound coordinates")
    return gm.replace(remove=[cid])


def trivial(gm: GraphicalModel, mode: str = "insert", cid: str | None = None) -> GraphicalModel:
    if mode == "insert":
        return trivial_insert(gm, cid)
    if mode == "remove":
        if cid is None:
            raise ValueError("trivial removal needs a constraint id")
        return trivial_remove(gm, cid)
    raise ValueError(f"unknown mode {mode!r}")


def ippc_insert(gm: GraphicalModel, variables: Sequence[str]) -> GraphicalModel:
    """Insert an isolated partial-parity check on the listed variables.

    Each entry names a visible variable (meaning the repetition constraint
    holding it) or directly a repetition constraint on binary variables.
    """
    if len(variables) == 0:
        raise InvalidModel("a partial parity needs at least one variable")
    labels = _Labels(gm)
    reps = []
    for v in variables:
        cid = gm.visible_owner.get(v, v)
        c = gm.constraint(cid)
        if not _is_repetition(c.code) or any(gm.hidden(h).size != 1 for h in c.hidden_labels):
            raise NotARepetition(f"{cid} is not a repetition constraint on binary variables")
        reps.append(cid)
    if len(set(reps)) != len(reps):
        raise InvalidModel("partial-parity variables must sit at distinct repetition constraints")
    cp = labels.constraint()
    ck = labels.constraint()
    updates = {}
    hiddens = list(gm.hiddens)
    copies = []
    for cid in reps:
        s = labels.hidden()
        copies.append(s)
        c = gm.constraint(cid)
        binds = c.bindings + (hbind(s, 0),)
        updates[cid] = Constraint(cid, LinearCode.repetition(_keys(binds)), binds)
        hiddens.append(Hidden(s, 1, (cid, cp)))
    sk = labels.hidden()
    hiddens.append(Hidden(sk, 1, (cp, ck)))
    pbinds = tuple(hbind(s, 0) for s in copies) + (hbind(sk, 0),)
    cons_p = Constraint(cp, LinearCode.single_parity(_keys(pbinds)), pbinds)
    cons_k = Constraint(ck, LinearCode.full([f"h:{sk}.0"]), (hbind(sk, 0),))
    return gm.replace(update=updates, add=[cons_p, cons_k], hiddens=hiddens)


def _isolating_hidden(gm: GraphicalModel, cp: str) -> str | None:
    c = gm.constraint(cp)
    for h in c.hidden_labels:
        other = gm.constraint(gm.other_end(h, cp))
        if other.hidden_labels == (h,) and not other.visible_labels and other.code.k == other.code.n:
            return h
    return None


def ippc_remove(gm: GraphicalModel, cp: str) -> GraphicalModel:
    """Remove an isolated partial-parity check together with its free constraint."""
    c = gm.constraint(cp)
    if c.visible_labels:
        raise NotIsolated(f"{cp} touches visible variables")
    sk = _isolating_hidden(gm, cp)
    if sk is None:
        raise NotIsolated(f"{cp} has no hidden variable feeding a free degree-1 constraint")
    ck = gm.other_end(sk, cp)
    rest = [b for b in c.bindings if b[1] != sk]
    if rest:
        proj = join_codes([c.code], _keys(rest))
        if proj.k != proj.n:
            raise NotIsolated(f"{cp} constrains its other variables")
    updates = {}
    gone = {sk}
    for h in c.hidden_labels:
        if h == sk:
            continue
        n = gm.other_end(h, cp)
        base = updates.get(n, gm.constraint(n))
        updates[n] = _project(base, [h])
        gone.add(h)
    hiddens = [h for h in gm.hiddens if h.label not in gone]
    return gm.replace(remove=[cp, ck], update=updates, hiddens=hiddens)


def isolated_ppc(gm: GraphicalModel, mode: str = "insert", target=None) -> GraphicalModel:
    """``mode='insert'`` with a variable list, or ``mode='remove'`` with a constraint id."""
    if mode == "insert":
        return ippc_insert(gm, list(target or ()))
    if mode == "remove":
        return ippc_remove(gm, target)
    raise ValueError(f"unknown mode {mode!r}")


# ---------------------------------------------------------------------------
# Merging and splitting
# ---------------------------------------------------------------------------


def merge(gm: GraphicalModel, i1: str, i2: str, new_id: str | None = None) -> GraphicalModel:
    """Replace two constraints by one equivalent to their intersection.

    For every constraint ``C_j`` adjacent to both, the hidden variables
    joining ``C_j`` to the pair are fused into one variable whose alphabet is
    the projection of ``C_j`` onto them.
    """
    if i1 == i2:
        raise InvalidModel("cannot merge a constraint with itself")
    gm.constraint(i1)
    gm.constraint(i2)
    for h in [h.label for h in gm.hiddens if set(h.endpoints) == {i1, i2}]:
        rid = gm.fresh_constraint_id(taken=[new_id] if new_id else [])
        gm = repetition_insert(gm, h, rid)
    labels = _Labels(gm)
    mid = new_id or labels.constraint()
    if mid in gm.constraint_map and mid not in (i1, i2):
        raise InvalidModel(f"constraint id {mid} is already taken")
    c1, c2 = gm.constraint(i1), gm.constraint(i2)
    n1 = {h: gm.other_end(h, i1) for h in c1.hidden_labels}
    n2 = {h: gm.other_end(h, i2) for h in c2.hidden_labels}
    common = sorted(set(n1.values()) & set(n2.values()), key=natural_key)
    fused: set[str] = set()
    codes = [c1.code, c2.code]
    out = [b for b in c1.bindings if not (b[0] == "h" and n1[b[1]] in common)]
    out += [b for b in c2.bindings if not (b[0] == "h" and n2[b[1]] in common)]
    updates: dict[str, Constraint] = {}
    new_hiddens: list[Hidden] = []
    for j in common:
        cj = gm.constraint(j)
        hs = {h for h in cj.hidden_labels if gm.other_end(h, j) in (i1, i2)}
        fused |= hs
        keys = [binding_key(b) for b in cj.bindings if b[0] == "h" and b[1] in hs]
        proj, _ = project_and_subcode(cj.code, keys)
        rows = proj.canonical_rows
        keep = [b for b in cj.bindings if not (b[0] == "h" and b[1] in hs)]
        if rows:
            u = labels.hidden()
            p = len(rows)
            ukeys = _hkeys(u, p)
            link_rows = tuple((1 << t) | (r << p) for t, r in enumerate(rows))
            link = LinearCode(BinaryMatrix(p, p + len(keys), link_rows), tuple(ukeys + keys))
            ub = [hbind(u, t) for t in range(p)]
            new_hiddens.append(Hidden(u, p, (mid, j)))
            out += ub
        else:
            link = LinearCode.zero(keys)
            ub = []
        codes.append(link)
        nb = keep + ub
        updates[j] = Constraint(j, join_codes([cj.code, link], _keys(nb)) if nb else LinearCode.zero(()), tuple(nb))
    mcode = join_codes(codes, _keys(out)) if out else LinearCode.zero(())
    merged = Constraint(mid, mcode, tuple(out))
    hiddens = [h for h in gm.hiddens if h.label not in fused]
    hiddens = _remap_endpoints(_remap_endpoints(hiddens, i1, mid), i2, mid)
    hiddens += new_hiddens
    cons = []
    for c in gm.constraints:
        if c.cid in (i1, i2):
            continue
        cons.append(updates.get(c.cid, c))
    cons.append(merged)
    return GraphicalModel(gm.visibles, tuple(hiddens), tuple(cons), gm.check_connected)


def _parse_checks(checks, keys: Sequence[str]) -> list[set[str]]:
    out = []
    for chk in checks:
        if isinstance(chk, str):
            if len(chk) != len(keys) or set(chk) - {"0", "1"}:
                raise InvalidPartition(f"check {chk!r} does not match {len(keys)} coordinates")
            w = _parse_bits(chk)
        else:
            w = int(chk)
        out.append({keys[j] for j in range(len(keys)) if (w >> j) & 1})
    return out


def _shrink(gm: GraphicalModel, cid: str, label: str) -> GraphicalModel:
    """Replace hidden ``label`` by its quotient modulo the part ``cid`` ignores."""
    h = gm.hidden(label)
    c = gm.constraint(cid)
    keys = _hkeys(label, h.size)
    proj, sub = project_and_subcode(c.code, keys)
    kept = list(sub.canonical_rows)
    basis: list[int] = []
    for r in proj.canonical_rows:
        red, piv = row_reduce(kept + basis, h.size, warn=False)
        if not _in_span(red, piv, r):
            basis.append(r)
    new = len(basis)
    if not 0 < new < h.size:
        return gm
    tmp = [f"h:{label}.{t}~" for t in range(h.size)]
    newkeys = _hkeys(label, new)
    rows = [(1 << t) | (r << new) for t, r in enumerate(basis)] + [r << new for r in kept]
    link = LinearCode.from_generator_rows(rows, new + h.size, tuple(newkeys + tmp))
    updates = {}
    for end in h.endpoints:
        ce = gm.constraint(end)
        renamed = ce.code.relabel([tmp[int(k.rsplit(".", 1)[1])] if k in keys else k for k in _keys(ce.bindings)])
        nb = []
        for b in ce.bindings:
            if b[0] == "h" and b[1] == label:
                if b[2] == 0:
                    nb += [hbind(label, t) for t in range(new)]
                continue
            nb.append(b)
        updates[end] = Constraint(end, join_codes([renamed, link], _keys(nb)), tuple(nb))
    hiddens = [Hidden(x.label, new, x.endpoints) if x.label == label else x for x in gm.hiddens]
    return gm.replace(update=updates, hiddens=hiddens)


def split(
    gm: GraphicalModel,
    j: str,
    part: tuple[Sequence[str], Sequence[str]],
    checks1=None,
    checks2=None,
    ids: tuple[str, str] | None = None,
) -> GraphicalModel:
    """Split constraint ``j`` into two constraints over the two sides of ``part``.

    ``part`` lists variable labels (visible or hidden) for each side.  Visible
    variables go to exactly one side; hidden variables on both sides are
    copied, with their other constraint redefined to force the copies equal.
    Without explicit ``checks1``/``checks2`` (parity-check rows over each
    side's local coordinates) the new codes are the projections of ``C_j``,
    which split ``C_j`` whenever any pair of codes on those supports does.
    Shared variables are finally shrunk to the part of their alphabet each
    new constraint actually distinguishes.
    """
    c = gm.constraint(j)
    side1, side2 = list(part[0]), list(part[1])
    vis, hid = set(c.visible_labels), set(c.hidden_labels)
    for side in (side1, side2):
        if len(set(side)) != len(side):
            raise InvalidPartition("a side lists a variable twice")
        for name in side:
            if name in vis and name in hid:
                raise InvalidPartition(f"{name!r} is ambiguous")
            if name not in vis and name not in hid:
                raise InvalidPartition(f"{name!r} is not a variable of {j}")
    for v in vis:
        if (v in side1) == (v in side2):
            raise InvalidPartition(f"visible {v} must be on exactly one side")
    for h in hid:
        if h not in side1 and h not in side2:
            raise InvalidPartition(f"hidden {h} is on neither side")
    labels = _Labels(gm)
    id1, id2 = ids if ids else (j, labels.constraint())
    if id2 in gm.constraint_map and id2 != j or id1 in gm.constraint_map and id1 != j or id1 == id2:
        raise InvalidModel("split ids must be distinct and unused")
    shared = [h for h in side1 if h in hid and h in side2]
    copy = {h: labels.hidden() for h in shared}

    def expand(side, rename):
        out = []
        for name in side:
            if name in vis:
                out.append(vbind(name))
            else:
                out += [hbind(rename.get(name, name), t) for t in range(gm.hidden(name).size)]
        return out

    b1 = expand(side1, {})
    b2 = expand(side2, copy)
    b2_orig = expand(side2, {})
    k1, k2, k2o = _keys(b1), _keys(b2), _keys(b2_orig)
    if checks1 is None:
        code1 = join_codes([c.code], k1) if k1 else LinearCode.zero(())
    else:
        code1 = _code_from_key_checks(k1, _parse_checks(checks1, k1))
    if checks2 is None:
        code2o = join_codes([c.code], k2o) if k2o else LinearCode.zero(())
    else:
        code2o = _code_from_key_checks(k2o, _parse_checks(checks2, k2o))
    orig = _keys(c.bindings)
    back = join_codes([code1, code2o], orig)
    if not back.same_code(c.code):
        raise NotSplittable(f"{j} is not the intersection of codes on the requested supports")
    code2 = code2o.relabel(k2) if k2 else code2o
    updates: dict[str, Constraint] = {}
    hiddens = []
    for h in gm.hiddens:
        if h.label in copy:
            a, b = h.endpoints
            other = b if a == j else a
            hiddens.append(Hidden(h.label, h.size, (id1 if a == j else a, id1 if b == j else b)))
            hiddens.append(Hidden(copy[h.label], h.size, (id2, other)))
        elif h.label in hid:
            a, b = h.endpoints
            tgt = id1 if h.label in side1 else id2
            hiddens.append(Hidden(h.label, h.size, (tgt if a == j else a, tgt if b == j else b)))
        else:
            hiddens.append(h)
    for h in shared:
        n = gm.other_end(h, j)
        cn = updates.get(n, gm.constraint(n))
        size = gm.hidden(h).size
        nb = []
        for b in cn.bindings:
            nb.append(b)
            if b[0] == "h" and b[1] == h and b[2] == size - 1:
                nb += [hbind(copy[h], t) for t in range(size)]
        eq = _equality_code(_hkeys(h, size), _hkeys(copy[h], size))
        updates[n] = Constraint(n, join_codes([cn.code, eq], _keys(nb)), tuple(nb))
    cons = []
    for x in gm.constraints:
        if x.cid == j:
            continue
        cons.append(updates.get(x.cid, x))
    cons += [Constraint(id1, code1, tuple(b1)), Constraint(id2, code2, tuple(b2))]
    out = GraphicalModel(gm.visibles, tuple(hiddens), tuple(cons), gm.check_connected)
    for h in shared:
        out = _shrink(out, id1, h)
        out = _shrink(out, id2, copy[h])
    return out


# ---------------------------------------------------------------------------
# q^m-ary model properties
# ---------------------------------------------------------------------------


def internalize(gm: GraphicalModel, s: str, m: int | None = None) -> GraphicalModel:
    """Make hidden ``s`` incident on an internal constraint of redundancy at most ``m``."""
    h = gm.hidden(s)
    if m is None:
        m = verify_qm(gm, 0).m
    for end in h.endpoints:
        c = gm.constraint(end)
        if c.kind == "internal" and c.code.redundancy <= m:
            return gm
    return repetition_insert(gm, s)


def _detach(gm: GraphicalModel, r: str) -> GraphicalModel:
    c = gm.constraint(r)
    if c.visible_labels:
        raise NotInternal(f"{r} touches visible variables")
    updates: dict[str, Constraint] = {}
    for h in c.hidden_labels:
        n = gm.other_end(h, r)
        updates[n] = _project(updates.get(n, gm.constraint(n)), [h])
    hiddens = [h for h in gm.hiddens if h.label not in set(c.hidden_labels)]
    try:
        return gm.replace(remove=[r], update=updates, hiddens=hiddens)
    except Disconnected:
        raise Disconnected(f"removing {r} disconnects the model") from None


def remove_internal(gm: GraphicalModel, r: str) -> tuple[GraphicalModel, LinearCode]:
    """Delete internal constraint ``r``; returns the cleaned model and its (larger) code."""
    out = _detach(gm, r)
    return out, realized_code(out)


def redefine_internal(gm: GraphicalModel, r: str, dim_cap: int = DEFAULT_DIM_CAP) -> list[tuple[str, ...]]:
    """Express internal constraint ``r`` as parity equations over visible variables.

    Each hidden component at ``r`` is written as a sum of visible variables
    using the behavior with ``r`` left out; substituting these into the
    parity checks of ``r`` yields one equation per check.
    """
    c = gm.constraint(r)
    if c.visible_labels:
        raise NotInternal(f"{r} touches visible variables")
    est = behavior_dimension(gm, exclude=[r])
    if est > dim_cap:
        raise CapExceeded(f"behavior dimension {est} exceeds cap {dim_cap}", est)
    rows, index = _global_checks(gm, exclude=[r])
    nv = len(gm.visibles)
    local = [index[k] for k in _keys(c.bindings)]
    other_hidden = [i for i in range(nv, len(index)) if i not in set(local)]
    red, piv = row_reduce(rows, len(index), other_hidden, warn=False)
    ohs = set(other_hidden)
    proj_checks = [w for w, p in zip(red, piv) if p not in ohs]
    red2, piv2 = row_reduce(proj_checks, len(index), local, warn=False)
    vmask = (1 << nv) - 1
    defs: dict[int, int] = {}
    for w, p in zip(red2, piv2):
        if p in set(local):
            if any((w >> q) & 1 for q in local if q != p):
                continue
            defs[p] = w & vmask
    missing = [k for k, q in zip(_keys(c.bindings), local) if q not in defs]
    if missing:
        raise NotDetermined(f"{', '.join(missing)} not determined by the visible variables")
    # A component is defined only up to the parity checks of the code with
    # ``r`` removed; report the lightest definition of each.
    vchecks = [w for w, p in zip(red2, piv2) if p not in set(local)]
    for q in defs:
        defs[q] = _lightest(defs[q], vchecks, nv)
    equations = []
    for h in c.code.check_rows:
        w = 0
        for t, q in enumerate(local):
            if (h >> t) & 1:
                w ^= defs[q]
        eq = tuple(sorted((gm.visibles[i] for i in range(nv) if (w >> i) & 1), key=natural_key))
        equations.append(eq)
    return equations


def _lightest(word: int, span: list[int], n: int, limit: int = 16) -> int:
    """Minimum-weight element of ``word + span`` (ties to the lowest support).

    Exhaustive when the span has at most ``limit`` generators, otherwise the
    reduced representative is returned.
    """
    red, piv = row_reduce(span, n, warn=False)
    for r, p in zip(red, piv):
        if (word >> p) & 1:
            word ^= r
    if len(red) > limit:
        return word

    def rank_key(w: int):
        return (bin(w).count("1"), [i for i in range(n) if (w >> i) & 1])

    best = word
    for mask in range(1, 1 << len(red)):
        w = word
        for i, r in enumerate(red):
            if (mask >> i) & 1:
                w ^= r
        if rank_key(w) < rank_key(best):
            best = w
    return best


def _express(code: LinearCode, form: set[str], target: Sequence[str]) -> set[str] | None:
    """Linear combination of ``target`` coordinates equal to ``form`` on every codeword."""
    if not form:
        return set()
    pos = {k: i for i, k in enumerate(code.labels)}
    tpos = [pos[k] for k in target]
    tset = set(tpos)
    others = [i for i in range(code.n) if i not in tset]
    red, piv = row_reduce(list(code.check_rows), code.n, others, warn=False)
    w = 0
    for k in form:
        w ^= 1 << pos[k]
    for r, p in zip(red, piv):
        if p not in tset and (w >> p) & 1:
            w ^= r
    if any((w >> i) & 1 for i in others):
        return None
    return {code.labels[i] for i in tpos if (w >> i) & 1}


def absorb_spc(gm: GraphicalModel, eq: Iterable[str]) -> GraphicalModel:
    """Add a single parity check over visible variables to a cycle-free model.

    The subtree spanning the constraints holding the checked variables is
    rooted at its highest-degree constraint (ties to the lowest id).  Working
    upward from the leaves, each subtree edge carries the parity of the
    checked variables below it: when that parity is already a linear
    function of the edge's components nothing changes, otherwise the edge
    gains one component holding it.  The root enforces the parity.
    """
    J = list(dict.fromkeys(eq))
    for v in J:
        if v not in gm.visible_owner:
            raise UnknownCoordinate(f"unknown visible variable {v!r}")
    topo = topology(gm)
    if not topo.cycle_free:
        raise NotCycleFree("absorb_spc needs a cycle-free model")
    if not J:
        return gm
    owners = {gm.visible_owner[v] for v in J}
    adj: dict[str, list[tuple[str, str]]] = {c.cid: [] for c in gm.constraints if not c.is_trivial}
    for h in gm.hiddens:
        a, b = h.endpoints
        adj[a].append((b, h.label))
        adj[b].append((a, h.label))
    alive = set(adj)
    deg = {x: len(adj[x]) for x in alive}
    queue = deque(sorted((x for x in alive if deg[x] <= 1 and x not in owners), key=natural_key))
    while queue:
        x = queue.popleft()
        if x not in alive or x in owners or deg[x] > 1 or len(alive) == 1:
            continue
        alive.discard(x)
        for y, _ in adj[x]:
            if y in alive:
                deg[y] -= 1
                if deg[y] <= 1 and y not in owners:
                    queue.append(y)
    root = min(alive, key=lambda x: (-deg[x], natural_key(x)))
    parent: dict[str, tuple[str, str]] = {}
    order = [root]
    seen = {root}
    dq = deque([root])
    while dq:
        x = dq.popleft()
        for y, lab in sorted(adj[x], key=lambda t: natural_key(t[1])):
            if y in alive and y not in seen:
                seen.add(y)
                parent[y] = (x, lab)
                order.append(y)
                dq.append(y)
    binds = {x: list(gm.constraint(x).bindings) for x in alive}
    codes = {x: gm.constraint(x).code for x in alive}
    sizes = {h.label: h.size for h in gm.hiddens}
    expr: dict[str, set[str]] = {}
    children: dict[str, list[str]] = {x: [] for x in alive}
    for y, (x, _) in parent.items():
        children[x].append(y)

    def add_coord(x: str, label: str, key: str, checks_extra: list[set[str]]):
        old = binds[x]
        nb = []
        size = sizes[label] - 1  # components before the new one
        for b in old:
            nb.append(b)
            if b[0] == "h" and b[1] == label and b[2] == size - 1:
                nb.append(hbind(label, size))
        if size == 0:  # pragma: no cover - hidden sizes are at least one
            nb.append(hbind(label, 0))
        binds[x] = nb
        checks = _key_checks(codes[x]) + checks_extra
        codes[x] = _code_from_key_checks(_keys(nb), checks)

    for x in reversed(order):
        par: set[str] = {f"v:{v}" for v in J if gm.visible_owner[v] == x}
        for ch in children[x]:
            par ^= expr[ch]
        if x == root:
            if par:
                codes[x] = _code_from_key_checks(_keys(binds[x]), _key_checks(codes[x]) + [par])
            continue
        p, lab = parent[x]
        ekeys = _hkeys(lab, sizes[lab])
        a = _express(codes[x], par, ekeys)
        if a is not None:
            expr[x] = a
            continue
        new_key = f"h:{lab}.{sizes[lab]}"
        sizes[lab] += 1
        add_coord(x, lab, new_key, [par | {new_key}])
        add_coord(p, lab, new_key, [])
        expr[x] = {new_key}
    updates = {x: Constraint(x, codes[x], tuple(binds[x])) for x in alive}
    hiddens = [Hidden(h.label, sizes[h.label], h.endpoints) for h in gm.hiddens]
    return gm.replace(update=updates, hiddens=hiddens)


# ---------------------------------------------------------------------------
# Steps, traces and replay
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TransformStep:
    kind: str
    operands: tuple[str, ...] = ()
    summary: str = ""

    def __post_init__(self) -> None:
        if self.kind not in STEP_KINDS:
            raise TraceFormatError(f"unknown step kind {self.kind!r}")
        object.__setattr__(self, "operands", tuple(str(o) for o in self.operands))
        for o in self.operands:
            if not o or any(ch.isspace() for ch in o):
                raise TraceFormatError(f"operand {o!r} must be a nonempty token")
        if not self.summary:
            object.__setattr__(self, "summary", f"{self.kind} {' '.join(self.operands)}".strip())

    def options(self) -> tuple[list[str], dict[str, str]]:
        pos, kw = [], {}
        for o in self.operands:
            if "=" in o:
                k, v = o.split("=", 1)
                kw[k] = v
            else:
                pos.append(o)
        return pos, kw


@dataclass
class ExtractionTrace:
    steps: list[TransformStep] = field(default_factory=list)
    checkpoints: dict[int, str] = field(default_factory=dict)
    header: list[str] = field(default_factory=list)

    def append(self, step: TransformStep) -> None:
        self.steps.append(step)

    def checkpoint(self, note: str) -> None:
        self.checkpoints[len(self.steps)] = note

    def __len__(self) -> int:
        return len(self.steps)

    def __iter__(self):
        return iter(self.steps)


def _csv(text: str) -> list[str]:
    return [t for t in text.split(",") if t] if text else []


def apply_step(gm: GraphicalModel, step: TransformStep) -> GraphicalModel:
    """Apply one recorded model step."""
    pos, kw = step.options()
    k = step.kind
    try:
        if k == "merge":
            return merge(gm, pos[0], pos[1], kw.get("new"))
        if k == "split":
            ids = tuple(_csv(kw["ids"])) if "ids" in kw else None
            c1 = _csv(kw["checks1"]) if "checks1" in kw else None
            c2 = _csv(kw["checks2"]) if "checks2" in kw else None
            if "checks1" in kw and kw["checks1"] == "-":
                c1 = []
            if "checks2" in kw and kw["checks2"] == "-":
                c2 = []
            side1 = [] if kw.get("side1") == "-" else _csv(kw.get("side1", ""))
            side2 = [] if kw.get("side2") == "-" else _csv(kw.get("side2", ""))
            return split(gm, pos[0], (side1, side2), c1, c2, ids)
        if k == "rep_insert":
            return repetition_insert(gm, pos[0], kw.get("new"))
        if k == "rep_remove":
            return repetition_remove(gm, pos[0])
        if k == "trivial_insert":
            return trivial_insert(gm, pos[0] if pos else None)
        if k == "trivial_remove":
            return trivial_remove(gm, pos[0])
        if k == "ippc_insert":
            return ippc_insert(gm, _csv(pos[0]))
        if k == "ippc_remove":
            return ippc_remove(gm, pos[0])
        if k == "internalize":
            return internalize(gm, pos[0], int(kw["m"]) if "m" in kw else None)
        if k == "remove_internal":
            return remove_internal(gm, pos[0])[0]
        if k == "redefine_internal":
            return gm
        if k == "absorb_spc":
            return absorb_spc(gm, _csv(pos[0]))
    except (IndexError, KeyError, ValueError) as exc:
        raise TraceFormatError(f"malformed step {step.summary!r}: {exc}") from None
    raise TraceFormatError(f"step kind {k!r} does not apply to graphical models")


DISCONNECTED_NOTE = "intermediate models may be disconnected"


def replay(
    gm: GraphicalModel, trace: ExtractionTrace | Iterable[TransformStep], check_connected: bool | None = None
) -> GraphicalModel:
    """Apply every step of ``trace`` to ``gm``.

    Connectivity of intermediate models is checked unless ``check_connected``
    is false or the trace header says disconnected intermediates are expected.
    """
    if check_connected is None:
        check_connected = not (isinstance(trace, ExtractionTrace) and DISCONNECTED_NOTE in trace.header)
    if not check_connected:
        gm = GraphicalModel(gm.visibles, gm.hiddens, gm.constraints, check_connected=False)
    for step in trace:
        gm = apply_step(gm, step)
    return gm


def format_trace(trace: ExtractionTrace) -> str:
    lines = [f"# {h}" for h in trace.header]
    for seq, step in enumerate(trace.steps, start=1):
        if seq - 1 in trace.checkpoints:
            lines.append(f"# checkpoint {seq - 1} {trace.checkpoints[seq - 1]}")
        lines.append(" ".join([str(seq), step.kind, *step.operands]))
    if len(trace.steps) in trace.checkpoints:
        lines.append(f"# checkpoint {len(trace.steps)} {trace.checkpoints[len(trace.steps)]}")
    return "\n".join(lines) + "\n"


_CHECKPOINT = re.compile(r"#\s*checkpoint\s+(\d+)\s+(.*)$")


def parse_trace(text: str) -> ExtractionTrace:
    trace = ExtractionTrace()
    expect = 1
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            m = _CHECKPOINT.match(line)
            if m:
                trace.checkpoints[int(m.group(1))] = m.group(2)
            else:
                trace.header.append(line[1:].strip())
            continue
        toks = line.split()
        if len(toks) < 2:
            raise TraceFormatError(f"bad trace line {line!r}")
        try:
            seq = int(toks[0])
        except ValueError:
            raise TraceFormatError(f"bad sequence number in {line!r}") from None
        if seq != expect:
            raise TraceFormatError(f"expected step {expect}, found {seq}")
        expect += 1
        trace.append(TransformStep(toks[1], tuple(toks[2:])))
    return trace


def read_trace(path) -> ExtractionTrace:
    with open(path, encoding="utf-8") as fh:
        return parse_trace(fh.read())


def write_trace(trace: ExtractionTrace, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_trace(trace))


# ---------------------------------------------------------------------------
# Comparison of models
# ---------------------------------------------------------------------------


def canonical_gmf(gm: GraphicalModel) -> str:
    """GMF text with every local generator in reduced row echelon form."""
    cons = []
    for c in gm.constraints:
        if c.bindings:
            g = BinaryMatrix(c.code.k, c.code.n, c.code.canonical_rows)
            c = Constraint(c.cid, LinearCode(g, c.code.labels), c.bindings)
        cons.append(c)
    return format_gmf(GraphicalModel(gm.visibles, gm.hiddens, tuple(cons), check_connected=False))


def _gl2(s: int) -> list[list[int]]:
    """All invertible s x s binary matrices, each as a list of column images."""
    if s > 3:
        return []
    mats = []
    for cols in product(range(1, 1 << s), repeat=s):
        if _rank_rows(list(cols)) == s:
            mats.append(list(cols))
    return mats


def isomorphic(a: GraphicalModel, b: GraphicalModel) -> bool:
    """Equal up to renaming constraints and hidden variables and a change of
    basis of each hidden alphabet (hidden sizes up to 3 for basis changes)."""
    if sorted(a.visibles) != sorted(b.visibles):
        return False
    ga, gb = _nx_graph(a), _nx_graph(b)
    matcher = nx_iso.MultiGraphMatcher(
        ga,
        gb,
        node_match=lambda x, y: x["sig"] == y["sig"],
        edge_match=lambda x, y: sorted(d["size"] for d in x.values()) == sorted(d["size"] for d in y.values()),
    )
    for mapping in matcher.isomorphisms_iter():
        if _codes_match(a, b, mapping):
            return True
    return False


def _nx_graph(gm: GraphicalModel) -> nx.MultiGraph:
    g = nx.MultiGraph()
    for c in gm.constraints:
        g.add_node(c.cid, sig=(tuple(sorted(c.visible_labels)), c.code.n, c.code.k))
    for h in gm.hiddens:
        g.add_edge(h.endpoints[0], h.endpoints[1], key=h.label, size=h.size)
    return g


def _codes_match(a: GraphicalModel, b: GraphicalModel, cmap: dict[str, str]) -> bool:
    # pair hidden variables of a with those of b along the constraint map
    pairs: dict[str, str] = {}
    used: set[str] = set()
    for h in a.hiddens:
        x, y = cmap[h.endpoints[0]], cmap[h.endpoints[1]]
        cands = [
            g.label
            for g in b.hiddens
            if g.label not in used and {x, y} == set(g.endpoints) and g.size == h.size
        ]
        if not cands:
            return False
        pairs[h.label] = cands[0]
        used.add(cands[0])
    order = [h.label for h in a.hiddens]
    transforms: dict[str, list[int]] = {}
    touching = {c.cid: set(c.hidden_labels) for c in a.constraints}

    def check(cid: str) -> bool:
        ca = a.constraint(cid)
        cb = b.constraint(cmap[cid])
        keys = []
        for bnd in ca.bindings:
            if bnd[0] == "v":
                keys.append(f"v:{bnd[1]}")
            else:
                keys.append(f"h:{pairs[bnd[1]]}.{bnd[2]}")
        if sorted(keys) != sorted(cb.code.labels):
            return False
        # push b's codewords through the basis changes into a's coordinates
        pos_b = {k: i for i, k in enumerate(cb.code.labels)}
        rows = []
        for g in cb.code.generator.bits:
            w = 0
            done: set[str] = set()
            for t, bnd in enumerate(ca.bindings):
                if bnd[0] == "v":
                    w |= ((g >> pos_b[f"v:{bnd[1]}"]) & 1) << t
                    continue
                lab = bnd[1]
                if lab in done:
                    continue
                done.add(lab)
                size = a.hidden(lab).size
                val = 0
                for comp in range(size):
                    val |= ((g >> pos_b[f"h:{pairs[lab]}.{comp}"]) & 1) << comp
                img = 0
                for comp in range(size):
                    if (val >> comp) & 1:
                        img ^= transforms[lab][comp]
                for comp in range(size):
                    w |= ((img >> comp) & 1) << (t + comp)
            rows.append(w)
        other = LinearCode.from_generator_rows(rows, ca.code.n, ca.code.labels)
        return other.canonical_rows == ca.code.canonical_rows

    ready = {cid for cid, hs in touching.items() if not hs}
    if not all(check(cid) for cid in ready):
        return False

    def search(idx: int) -> bool:
        if idx == len(order):
            return True
        lab = order[idx]
        size = a.hidden(lab).size
        options = [[1 << t for t in range(size)]] + [m for m in _gl2(size) if m != [1 << t for t in range(size)]]
        for mat in options:
            transforms[lab] = mat
            assigned = set(order[: idx + 1])
            ok = True
            for cid in a.hidden(lab).endpoints:
                if touching[cid] <= assigned and not check(cid):
                    ok = False
                    break
            if ok and search(idx + 1):
                return True
        del transforms[lab]
        return False

    return search(0)


# ---------------------------------------------------------------------------
# Normalization to a Tanner graph
# ---------------------------------------------------------------------------


class _Recorder:
    def __init__(self, gm: GraphicalModel, trace: ExtractionTrace, limit: int):
        self.gm = gm
        self.trace = trace
        self.limit = limit

    def do(self, kind: str, *operands: str) -> GraphicalModel:
        if len(self.trace) >= self.limit:
            raise RuntimeError("normalization exceeded its step ceiling")
        step = TransformStep(kind, operands)
        self.gm = apply_step(self.gm, step)
        self.trace.append(step)
        return self.gm


def _bits(keys: Sequence[str], members: set[str]) -> str:
    return "".join("1" if k in members else "0" for k in keys)


def _side_keys(gm: GraphicalModel, side: Sequence[str], vis: set[str]) -> list[str]:
    out = []
    for name in side:
        if name in vis:
            out.append(f"v:{name}")
        else:
            out += _hkeys(name, gm.hidden(name).size)
    return out


def _split_step(rec: _Recorder, cid: str, side1, side2, checks1, checks2, ids=None) -> None:
    def enc(rows):
        return ",".join(rows) if rows else "-"

    ops = [cid, f"side1={','.join(side1) or '-'}", f"side2={','.join(side2) or '-'}"]
    ops += [f"checks1={enc(checks1)}", f"checks2={enc(checks2)}"]
    if ids:
        ops.append(f"ids={ids[0]},{ids[1]}")
    rec.do("split", *ops)


def _var_class(gm: GraphicalModel, c: Constraint) -> str:
    """'var', 'check' or 'either' for a constraint after rows are separated."""
    code = c.code
    if c.visible_labels:
        return "var"
    if code.n == 0:
        return "check"
    if code.k == code.n:
        return "check"
    if _is_repetition(code):
        return "either" if code.n == 2 else "var"
    return "check"


def read_parity_check(gm: GraphicalModel) -> tuple[BinaryMatrix, list[str], list[str]]:
    """Parity-check matrix of a bipartite binary model.

    Columns are the repetition constraints (visible-holding ones first, in
    visible order), rows are the check constraints carrying one parity
    check.  Entry ``(i, j)`` is the coefficient the check of row ``i`` puts
    on the hidden variables joining it to column ``j``.
    """
    cls = _classes(gm)
    cols = [gm.visible_owner[v] for v in gm.visibles]
    cols += sorted((c.cid for c in gm.constraints if cls.get(c.cid) == "var" and c.cid not in cols), key=natural_key)
    cindex = {cid: j for j, cid in enumerate(cols)}
    rows = []
    row_ids = []
    for c in gm.constraints:
        if cls.get(c.cid) != "check" or c.is_trivial:
            continue
        for chk in c.code.check_rows:
            w = 0
            for t, b in enumerate(c.bindings):
                if (chk >> t) & 1:
                    if b[0] != "h":
                        raise InvalidModel(f"check {c.cid} holds a visible variable")
                    w ^= 1 << cindex[gm.other_end(b[1], c.cid)]
            rows.append(w)
            row_ids.append(c.cid)
    return BinaryMatrix(len(rows), len(cols), tuple(rows)), cols, row_ids


def _classes(gm: GraphicalModel) -> dict[str, str]:
    raw = {c.cid: _var_class(gm, c) for c in gm.constraints if not c.is_trivial}
    cls = {k: v for k, v in raw.items() if v != "either"}
    pending = deque(sorted(cls, key=natural_key))
    while pending:
        x = pending.popleft()
        for y in gm.adjacency[x]:
            if y not in cls:
                cls[y] = "check" if cls[x] == "var" else "var"
                pending.append(y)
    for x in sorted(raw, key=natural_key):
        if x in cls:
            continue
        cls[x] = "var"
        pending.append(x)
        while pending:
            y = pending.popleft()
            for z in gm.adjacency[y]:
                if z not in cls:
                    cls[z] = "check" if cls[y] == "var" else "var"
                    pending.append(z)
    return cls


def normalize_to_tanner(
    gm: GraphicalModel, dim_cap: int = DEFAULT_DIM_CAP, max_steps: int = 200_000
) -> tuple[BinaryMatrix, ExtractionTrace]:
    """Transform ``gm`` into a Tanner graph using only code-preserving operations.

    1. Every hidden variable gets a repetition constraint, which is split
       into binary repetitions; every constraint that is not a repetition is
       split into its single parity checks; visible variables are moved onto
       their own repetition constraints.
    2. Degree-2 repetitions are inserted on edges joining two constraints of
       the same class, giving a generalized Tanner graph.
    3. Row operations (merge then split) zero out dependent checks, whose
       now trivial constraints are removed.
    4. Each partial-parity column is pivoted into a single check, which is
       then an isolated partial-parity check and is removed.

    Returns the parity-check matrix over the visible variables (rows in
    constraint order) and the trace of every step taken.
    """
    est = behavior_dimension(gm)
    if est > dim_cap:
        raise CapExceeded(f"behavior dimension {est} exceeds cap {dim_cap}", est)
    trace = ExtractionTrace(header=["normalize_to_tanner", DISCONNECTED_NOTE])
    # splitting a Cartesian-product local code legitimately disconnects the graph
    gm = GraphicalModel(gm.visibles, gm.hiddens, gm.constraints, check_connected=False)
    rec = _Recorder(gm, trace, max_steps)
    for c in list(rec.gm.constraints):
        if c.is_trivial:
            rec.do("trivial_remove", c.cid)

    # 1a. binary hidden variables behind repetition constraints
    for h in list(rec.gm.hiddens):
        before = set(rec.gm.constraint_map)
        rec.do("rep_insert", h.label)
        (rid,) = set(rec.gm.constraint_map) - before
        cur = rid
        for _ in range(h.size - 1):
            c = rec.gm.constraint(cur)
            s, s2 = c.hidden_labels
            size = rec.gm.hidden(s).size
            keys = _hkeys(s, size) + _hkeys(s2, size)
            first = [_bits(keys, {f"h:{s}.0", f"h:{s2}.0"})]
            rest = [_bits(keys, {f"h:{s}.{t}", f"h:{s2}.{t}"}) for t in range(1, size)]
            before = set(rec.gm.constraint_map)
            _split_step(rec, cur, [s, s2], [s, s2], first, rest)
            (cur,) = set(rec.gm.constraint_map) - before

    # 1b. visible variables onto their own repetition constraints
    for v in rec.gm.visibles:
        owner = rec.gm.constraint(rec.gm.visible_owner[v])
        if _is_repetition(owner.code) and owner.visible_labels == (v,):
            continue
        rec.do("rep_insert", v)

    # 1c. split the remaining constraints into single parity checks
    for cid in [c.cid for c in rec.gm.constraints]:
        cur = cid
        while True:
            c = rec.gm.constraint(cur)
            if _is_repetition(c.code) or c.code.redundancy <= 1:
                break
            checks = _key_checks(c.code)
            vars_ = list(dict.fromkeys(b[1] for b in c.bindings))
            def var_of(key):
                return key[2:].rsplit(".", 1)[0] if key.startswith("h:") else key[2:]
            sup1 = {var_of(k) for k in checks[0]}
            sup2 = set().union(*({var_of(k) for k in chk} for chk in checks[1:]))
            side1 = [v for v in vars_ if v in sup1]
            side2 = [v for v in vars_ if v in sup2 or v not in sup1]
            vis = set(c.visible_labels)
            k1 = _side_keys(rec.gm, side1, vis)
            k2 = _side_keys(rec.gm, side2, vis)
            before = set(rec.gm.constraint_map)
            _split_step(rec, cur, side1, side2, [_bits(k1, checks[0])], [_bits(k2, chk) for chk in checks[1:]])
            (cur,) = set(rec.gm.constraint_map) - before

    # 1d. detach hidden variables that a check leaves unconstrained
    _drop_free_hiddens(rec)

    # 2. bipartite generalized Tanner graph
    cls = _classes(rec.gm)
    for h in list(rec.gm.hiddens):
        a, b = h.endpoints
        if cls[a] == cls[b]:
            rec.do("rep_insert", h.label)
            cls = _classes(rec.gm)

    h_ext, cols, row_ids = read_parity_check(rec.gm)
    nv = len(rec.gm.visibles)
    rows = {rid: w for rid, w in zip(row_ids, h_ext.bits)}
    col_of = {cid: j for j, cid in enumerate(cols)}

    def row_op(i: str, j: str) -> None:
        """Replace row j by row i + row j through a merge and a split."""
        hi, hj = rows[i], rows[j]
        tmp = rec.gm.fresh_constraint_id()
        rec.do("merge", i, j, f"new={tmp}")
        c = rec.gm.constraint(tmp)
        hs = list(c.hidden_labels)
        colmap = {s: col_of[rec.gm.other_end(s, tmp)] for s in hs}
        new = hi ^ hj
        side1 = [s for s in hs if (hi >> colmap[s]) & 1]
        side2 = [s for s in hs if (new >> colmap[s]) & 1]
        loose = [s for s in hs if s not in side1 and s not in side2]
        side1 += loose
        k1 = [f"h:{s}.0" for s in side1]
        k2 = [f"h:{s}.0" for s in side2]
        chk1 = [_bits(k1, {f"h:{s}.0" for s in side1 if (hi >> colmap[s]) & 1})]
        chk2 = [_bits(k2, set(k2))] if side2 else []
        _split_step(rec, tmp, side1, side2, chk1, chk2, ids=(i, j))
        rows[j] = new
        if new == 0:
            rec.do("trivial_remove", j)
            del rows[j]

    # 4. pivot partial-parity columns, then drop their isolated checks
    pivots: list[tuple[str, int]] = []
    used: set[str] = set()
    for col in range(nv, len(cols)):
        pr = next((r for r in rows if r not in used and (rows[r] >> col) & 1), None)
        if pr is None:
            continue
        used.add(pr)
        pivots.append((pr, col))
        for r in [r for r in rows if r != pr and (rows[r] >> col) & 1]:
            row_op(pr, r)
    for pr, col in pivots:
        rec.do("ippc_remove", pr)
        del rows[pr]
    for c in list(rec.gm.constraints):
        if c.is_trivial:
            rec.do("trivial_remove", c.cid)

    # 3. expose and delete dependent rows
    kept: list[str] = []
    for r in sorted(rows, key=natural_key):
        combo = _combination([rows[k] for k in kept], rows[r])
        if combo is None:
            kept.append(r)
            continue
        for idx in combo:
            row_op(kept[idx], r)

    h_final, cols_final, _ = read_parity_check(rec.gm)
    if cols_final[:nv] != cols[:nv] or len(cols_final) != nv:
        raise AssertionError("normalization left non-visible columns behind")  # pragma: no cover
    return BinaryMatrix(h_final.rows, nv, h_final.bits), trace


def _free_hidden(c: Constraint) -> str | None:
    """A hidden variable whose coordinates no parity check of ``c`` involves."""
    used = 0
    for chk in c.code.check_rows:
        used |= chk
    for h in c.hidden_labels:
        if not any((used >> p) & 1 for p in c.positions(h)):
            return h
    return None


def _drop_free_hiddens(rec: _Recorder) -> None:
    """Cut every hidden variable left free by one of its constraints.

    The free side is split off into a constraint holding only that hidden
    variable, which imposes nothing and is removed as an internal constraint.
    """
    while True:
        hit = next(((c, h) for c in rec.gm.constraints if not c.is_trivial for h in [_free_hidden(c)] if h), None)
        if hit is None:
            break
        c, h = hit
        if len(c.bindings) > len(c.positions(h)):
            rest = [b[1] for b in c.bindings if b[1] != h]
            rest = list(dict.fromkeys(rest))
            vis = set(c.visible_labels)
            keys = _side_keys(rec.gm, rest, vis)
            checks = _key_checks(c.code)
            _split_step(rec, c.cid, [h], rest, [], [_bits(keys, set(chk)) for chk in checks])
        rec.do("remove_internal", c.cid)
    # components without visible variables do not affect the realized code
    seen: set[str] = set()
    for c in list(rec.gm.constraints):
        if c.cid in seen or c.is_trivial:
            continue
        comp, stack = {c.cid}, [c.cid]
        while stack:
            for y in rec.gm.adjacency[stack.pop()]:
                if y not in comp:
                    comp.add(y)
                    stack.append(y)
        seen |= comp
        if not any(rec.gm.constraint(x).visible_labels for x in comp):
            for x in sorted(comp, key=natural_key):
                rec.do("remove_internal", x)
    for c in list(rec.gm.constraints):
        if c.is_trivial:
            rec.do("trivial_remove", c.cid)


def _combination(basis: list[int], target: int) -> list[int] | None:
    """Indices of basis rows summing to ``target`` (``None`` if outside their span)."""
    if target == 0:
        return []
    tagged = [(w, 1 << i) for i, w in enumerate(basis)]
    pivots: list[tuple[int, int, int]] = []
    for w, tag in tagged:
        for p, pw, ptag in pivots:
            if (w >> p) & 1:
                w ^= pw
                tag ^= ptag
        if w:
            p = w.bit_length() - 1
            pivots.append((p, w, tag))
    tag = 0
    for p, pw, ptag in pivots:
        if (target >> p) & 1:
            target ^= pw
            tag ^= ptag
    if target:
        return None
    return [i for i in range(len(basis)) if (tag >> i) & 1]
