"""Normal graphical realizations of binary linear codes.

Constraints are vertices, hidden variables are edges between exactly two
constraints, and visible variables are half-edges bound to one constraint.
A hidden variable with alphabet index size ``s`` occupies ``s`` consecutive
local coordinates at each of its two endpoints; its components are addressed
as ``(label, index)``.

Local codes carry coordinate labels derived from their bindings
(``v:<visible>`` or ``h:<hidden>.<component>``), so a constraint's code can be
compared, joined and projected purely by label.
"""

from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

from .errors import (
    CapExceeded,
    Disconnected,
    GmfFormatError,
    InconsistentExtension,
    InvalidModel,
    UnknownConstraint,
    ZeroColumn,
)
from .gf2codes import (
    BinaryMatrix,
    GeneralizedExtension,
    LinearCode,
    _rank_rows,
    dual,
    nullspace_rows,
    row_reduce,
)

__all__ = [
    "Binding",
    "Hidden",
    "Constraint",
    "GraphicalModel",
    "Behavior",
    "ComplexityReport",
    "binding_key",
    "vbind",
    "hbind",
    "build_tanner_graph",
    "build_gtg",
    "behavior",
    "behavior_dimension",
    "realized_code",
    "verify_qm",
    "cartesian_factors",
    "dualize",
    "topology",
    "format_gmf",
    "parse_gmf",
    "read_gmf",
    "write_gmf",
    "natural_key",
    "DEFAULT_DIM_CAP",
]

DEFAULT_DIM_CAP = 24

# A binding is ("v", label) or ("h", label, component).
Binding = tuple


def vbind(label: str) -> Binding:
    return ("v", label)


def hbind(label: str, comp: int) -> Binding:
    return ("h", label, comp)


def binding_key(b: Binding) -> str:
    if b[0] == "v":
        return f"v:{b[1]}"
    return f"h:{b[1]}.{b[2]}"


def parse_binding(text: str) -> Binding:
    if text.startswith("v:") and len(text) > 2:
        return ("v", text[2:])
    m = re.fullmatch(r"h:(.+)\.(\d+)", text)
    if not m:
        raise GmfFormatError(f"bad binding {text!r}")
    return ("h", m.group(1), int(m.group(2)))


_NUM = re.compile(r"(\d+)")


def natural_key(label: str) -> tuple:
    """Sort key that orders ``C2`` before ``C10``."""
    parts = _NUM.split(label)
    return tuple(int(p) if p.isdigit() else p for p in parts)


@dataclass(frozen=True)
class Hidden:
    label: str
    size: int
    endpoints: tuple[str, str]


@dataclass(frozen=True)
class Constraint:
    cid: str
    code: LinearCode
    bindings: tuple[Binding, ...]

    def __post_init__(self) -> None:
        keys = tuple(binding_key(b) for b in self.bindings)
        if self.code.n != len(self.bindings):
            raise InvalidModel(
                f"constraint {self.cid}: code length {self.code.n} != {len(self.bindings)} bindings"
            )
        if self.code.labels != keys and self.bindings:
            if sorted(self.code.labels) == sorted(keys):
                object.__setattr__(self, "code", self.code.reorder(keys))
            else:
                object.__setattr__(self, "code", self.code.relabel(keys))

    @property
    def kind(self) -> str:
        return "interface" if any(b[0] == "v" for b in self.bindings) else "internal"

    @property
    def is_trivial(self) -> bool:
        return not self.bindings

    @cached_property
    def visible_labels(self) -> tuple[str, ...]:
        return tuple(b[1] for b in self.bindings if b[0] == "v")

    @cached_property
    def hidden_labels(self) -> tuple[str, ...]:
        seen: list[str] = []
        for b in self.bindings:
            if b[0] == "h" and b[1] not in seen:
                seen.append(b[1])
        return tuple(seen)

    def positions(self, var: str, kind: str = "h") -> list[int]:
        """Local coordinates occupied by a hidden (or visible) variable."""
        return [i for i, b in enumerate(self.bindings) if b[0] == kind and b[1] == var]

    @classmethod
    def build(cls, cid: str, bindings: Sequence[Binding], code: LinearCode) -> "Constraint":
        bindings = tuple(tuple(b) for b in bindings)
        keys = tuple(binding_key(b) for b in bindings)
        if not bindings:
            code = LinearCode.zero(())
        return cls(cid, code, bindings)


@dataclass(frozen=True)
class GraphicalModel:
    """Immutable normal realization; see the module docstring for conventions."""

    visibles: tuple[str, ...]
    hiddens: tuple[Hidden, ...]
    constraints: tuple[Constraint, ...]
    check_connected: bool = field(default=True, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "visibles", tuple(self.visibles))
        object.__setattr__(self, "hiddens", tuple(self.hiddens))
        object.__setattr__(self, "constraints", tuple(self.constraints))
        self._validate()

    # validation -------------------------------------------------------
    def _validate(self) -> None:
        if len(set(self.visibles)) != len(self.visibles):
            raise InvalidModel("visible labels must be unique")
        cids = [c.cid for c in self.constraints]
        if len(set(cids)) != len(cids):
            raise InvalidModel("constraint ids must be unique")
        hl = [h.label for h in self.hiddens]
        if len(set(hl)) != len(hl):
            raise InvalidModel("hidden labels must be unique")
        cmap = self.constraint_map
        vis_count = {v: 0 for v in self.visibles}
        hid_bound: dict[str, list[str]] = {h: [] for h in hl}
        for c in self.constraints:
            seen_keys = set()
            for b in c.bindings:
                key = binding_key(b)
                if key in seen_keys:
                    raise InvalidModel(f"constraint {c.cid} binds {key} twice")
                seen_keys.add(key)
                if b[0] == "v":
                    if b[1] not in vis_count:
                        raise InvalidModel(f"constraint {c.cid} binds unknown visible {b[1]}")
                    vis_count[b[1]] += 1
                elif b[0] == "h":
                    if b[1] not in hid_bound:
                        raise InvalidModel(f"constraint {c.cid} binds unknown hidden {b[1]}")
                else:
                    raise InvalidModel(f"bad binding {b!r}")
            for h in c.hidden_labels:
                hid_bound[h].append(c.cid)
        for v, cnt in vis_count.items():
            if cnt != 1:
                raise InvalidModel(f"visible {v} is bound {cnt} times")
        for h in self.hiddens:
            if h.size < 1:
                raise InvalidModel(f"hidden {h.label} has size {h.size}")
            a, b = h.endpoints
            if a == b:
                raise InvalidModel(f"hidden {h.label} is a self-loop")
            if sorted(hid_bound[h.label]) != sorted([a, b]):
                raise InvalidModel(
                    f"hidden {h.label} declared on {a},{b} but bound by {hid_bound[h.label]}"
                )
            for cid in (a, b):
                if cid not in cmap:
                    raise InvalidModel(f"hidden {h.label} references unknown constraint {cid}")
                pos = cmap[cid].positions(h.label)
                comps = [cmap[cid].bindings[p][2] for p in pos]
                if comps != list(range(h.size)) or pos != list(range(pos[0], pos[0] + h.size)):
                    raise InvalidModel(
                        f"hidden {h.label} must occupy {h.size} consecutive ordered coordinates at {cid}"
                    )
        if self.check_connected and not self.is_connected():
            raise Disconnected("the constraint graph is not connected")

    # lookups ----------------------------------------------------------
    @cached_property
    def constraint_map(self) -> dict[str, Constraint]:
        return {c.cid: c for c in self.constraints}

    @cached_property
    def hidden_map(self) -> dict[str, Hidden]:
        return {h.label: h for h in self.hiddens}

    @cached_property
    def visible_owner(self) -> dict[str, str]:
        return {b[1]: c.cid for c in self.constraints for b in c.bindings if b[0] == "v"}

    def constraint(self, cid: str) -> Constraint:
        try:
            return self.constraint_map[cid]
        except KeyError:
            raise UnknownConstraint(f"unknown constraint {cid!r}") from None

    def hidden(self, label: str) -> Hidden:
        try:
            return self.hidden_map[label]
        except KeyError:
            raise InvalidModel(f"unknown hidden variable {label!r}") from None

    def other_end(self, label: str, cid: str) -> str:
        a, b = self.hidden(label).endpoints
        return b if a == cid else a

    def neighbors(self, cid: str) -> list[str]:
        return [self.other_end(h, cid) for h in self.constraint(cid).hidden_labels]

    @cached_property
    def adjacency(self) -> dict[str, list[str]]:
        adj: dict[str, list[str]] = {c.cid: [] for c in self.constraints}
        for h in self.hiddens:
            a, b = h.endpoints
            adj[a].append(b)
            adj[b].append(a)
        return adj

    def is_connected(self) -> bool:
        nodes = [c.cid for c in self.constraints if not c.is_trivial]
        if not nodes:
            return True
        adj = self.adjacency
        seen = {nodes[0]}
        queue = deque([nodes[0]])
        while queue:
            u = queue.popleft()
            for w in adj[u]:
                if w not in seen:
                    seen.add(w)
                    queue.append(w)
        return seen >= set(nodes)

    # label generation -------------------------------------------------
    def fresh_constraint_id(self, prefix: str = "C", taken: Iterable[str] = ()) -> str:
        return _fresh([c.cid for c in self.constraints] + list(taken), prefix)

    def fresh_hidden_label(self, prefix: str = "S", taken: Iterable[str] = ()) -> str:
        return _fresh([h.label for h in self.hiddens] + list(taken), prefix)

    # coordinates ------------------------------------------------------
    @cached_property
    def global_labels(self) -> tuple[str, ...]:
        """Visible labels followed by every hidden component ``label.index``."""
        out = [f"v:{v}" for v in self.visibles]
        for h in self.hiddens:
            out += [f"h:{h.label}.{i}" for i in range(h.size)]
        return tuple(out)

    def replace(
        self,
        remove: Iterable[str] = (),
        add: Iterable[Constraint] = (),
        hiddens: Sequence[Hidden] | None = None,
        update: Mapping[str, Constraint] | None = None,
        check_connected: bool | None = None,
    ) -> "GraphicalModel":
        """New model with constraints removed, updated in place, or appended.

        The connectivity check follows this model's setting unless given.
        """
        if check_connected is None:
            check_connected = self.check_connected
        remove = set(remove)
        update = dict(update or {})
        cons = []
        for c in self.constraints:
            if c.cid in remove:
                continue
            cons.append(update.pop(c.cid, c))
        if update:
            raise UnknownConstraint(f"cannot update missing constraints {sorted(update)}")
        cons += list(add)
        return GraphicalModel(
            self.visibles,
            tuple(self.hiddens if hiddens is None else hiddens),
            tuple(cons),
            check_connected,
        )


def _fresh(existing: Iterable[str], prefix: str) -> str:
    best = 0
    pat = re.compile(re.escape(prefix) + r"(\d+)$")
    for e in existing:
        m = pat.match(e)
        if m:
            best = max(best, int(m.group(1)))
    return f"{prefix}{best + 1}"


# ---------------------------------------------------------------------------
# Builders
# ---------------------------------------------------------------------------


def _tanner_like(
    h: BinaryMatrix,
    labels: Sequence[str],
    n_visible: int,
) -> GraphicalModel:
    n = h.cols
    rep_ids = [f"C{j + 1}" for j in range(n)]
    chk_ids = [f"C{n + i + 1}" for i in range(h.rows)]
    hiddens = []
    rep_binds: list[list[Binding]] = [
        [vbind(labels[j])] if j < n_visible else [] for j in range(n)
    ]
    chk_binds: list[list[Binding]] = [[] for _ in range(h.rows)]
    count = 0
    for i in range(h.rows):
        for j in range(n):
            if (h.bits[i] >> j) & 1:
                count += 1
                lab = f"S{count}"
                hiddens.append(Hidden(lab, 1, (rep_ids[j], chk_ids[i])))
                chk_binds[i].append(hbind(lab, 0))
    for hid in hiddens:
        j = rep_ids.index(hid.endpoints[0])
        rep_binds[j].append(hbind(hid.label, 0))
    cons = []
    for j in range(n):
        b = rep_binds[j]
        cons.append(Constraint.build(rep_ids[j], b, LinearCode.repetition([binding_key(x) for x in b])))
    for i in range(h.rows):
        b = chk_binds[i]
        code = LinearCode.single_parity([binding_key(x) for x in b]) if b else LinearCode.zero(())
        cons.append(Constraint.build(chk_ids[i], b, code))
    return GraphicalModel(tuple(labels[:n_visible]), tuple(hiddens), tuple(cons))


def build_tanner_graph(h: BinaryMatrix, labels: Sequence[str] | None = None) -> GraphicalModel:
    """Tanner graph: one repetition constraint per column, one check per row."""
    if h.is_zero():
        raise ZeroColumn("parity-check matrix is all zero")
    for j in range(h.cols):
        if not h.column(j):
            raise ZeroColumn(f"column {j} has no ones")
    labels = list(labels) if labels else [f"V{j + 1}" for j in range(h.cols)]
    return _tanner_like(h, labels, h.cols)


def build_gtg(ext: GeneralizedExtension, h_ext: BinaryMatrix) -> GraphicalModel:
    """Generalized Tanner graph; partial-parity columns carry no visible."""
    if h_ext.cols != ext.extended.n:
        raise InconsistentExtension("parity-check matrix has the wrong number of columns")
    for g in ext.extended.generator.bits:
        for r in h_ext.bits:
            if (g & r).bit_count() & 1:
                raise InconsistentExtension("parity-check rows do not annihilate the extended code")
    if _rank_rows(h_ext.bits) != ext.extended.n - ext.extended.k:
        raise InconsistentExtension("parity-check matrix does not define the extended code")
    for j in range(h_ext.cols):
        if not h_ext.column(j):
            raise ZeroColumn(f"column {j} has no ones")
    return _tanner_like(h_ext, list(ext.extended.labels), ext.base.n)


# ---------------------------------------------------------------------------
# Behavior and realized code
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Behavior:
    code: LinearCode
    visible_projection: LinearCode


def _global_checks(
    gm: GraphicalModel, exclude: Iterable[str] = ()
) -> tuple[list[int], dict[str, int]]:
    index = {lab: i for i, lab in enumerate(gm.global_labels)}
    skip = set(exclude)
    rows = []
    for c in gm.constraints:
        if c.cid in skip:
            continue
        pos = [index[binding_key(b)] for b in c.bindings]
        for h in c.code.check_rows:
            w = 0
            for j, p in enumerate(pos):
                if (h >> j) & 1:
                    w |= 1 << p
            rows.append(w)
    return rows, index


def behavior_dimension(gm: GraphicalModel, exclude: Iterable[str] = ()) -> int:
    """Dimension of the behavior (optionally with some constraints left out)."""
    rows, _ = _global_checks(gm, exclude)
    return len(gm.global_labels) - _rank_rows(rows)


def behavior(gm: GraphicalModel, dim_cap: int = DEFAULT_DIM_CAP) -> Behavior:
    """All visible and hidden configurations satisfying every local constraint."""
    rows, _ = _global_checks(gm)
    total = len(gm.global_labels)
    estimate = total - _rank_rows(rows)
    if estimate > dim_cap:
        raise CapExceeded(f"behavior dimension {estimate} exceeds cap {dim_cap}", estimate)
    basis = nullspace_rows(rows, total)
    code = LinearCode.from_generator_rows(basis, total, gm.global_labels)
    nv = len(gm.visibles)
    proj = LinearCode.from_generator(
        code.generator.select_columns(list(range(nv))), [f"v:{v}" for v in gm.visibles]
    )
    return Behavior(code, proj.relabel(gm.visibles) if nv else proj)


def realized_code(gm: GraphicalModel) -> LinearCode:
    """Projection of the behavior onto the visible variables, without a size cap.

    Hidden coordinates are eliminated from the global check matrix; the rows
    left with no hidden support are parity checks of the realized code.
    """
    rows, _ = _global_checks(gm)
    nv = len(gm.visibles)
    total = len(gm.global_labels)
    hidden_cols = list(range(nv, total))
    reduced, pivots = row_reduce(rows, total, hidden_cols, warn=False)
    checks = [r for r, p in zip(reduced, pivots) if p < nv]
    basis = nullspace_rows(checks, nv)
    code = LinearCode.from_generator_rows(basis, nv, gm.visibles)
    h = BinaryMatrix(len(checks), nv, tuple(checks))
    return LinearCode(code.generator, code.labels, h)


# ---------------------------------------------------------------------------
# q^m-ary verification
# ---------------------------------------------------------------------------


def _minimal_span_rows(code: LinearCode) -> list[int]:
    rows = list(code.canonical_rows)  # distinct leading positions
    changed = True
    while changed:
        changed = False
        ends: dict[int, int] = {}
        for idx, r in enumerate(rows):
            e = r.bit_length() - 1
            if e in ends:
                other = ends[e]
                a, b = rows[other], r
                a_start = (a & -a).bit_length()
                b_start = (b & -b).bit_length()
                # add the later-starting row into the earlier-starting one
                if a_start < b_start:
                    rows[other] = a ^ b
                else:
                    rows[idx] = a ^ b
                changed = True
                break
            ends[e] = idx
    return rows


def cartesian_factors(code: LinearCode) -> list[tuple[list[int], int]]:
    """Finest direct-product decomposition as ``[(coordinates, dimension), ...]``.

    Coordinates are linked when they share the support of a row of a
    minimal-span generator; each connected component is one factor.
    """
    n = code.n
    parent = list(range(n))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    rows = _minimal_span_rows(code)
    for r in rows:
        support = [j for j in range(n) if (r >> j) & 1]
        for j in support[1:]:
            ra, rb = find(support[0]), find(j)
            if ra != rb:
                parent[rb] = ra
    groups: dict[int, list[int]] = {}
    for j in range(n):
        groups.setdefault(find(j), []).append(j)
    dims = {root: 0 for root in groups}
    for r in rows:
        low = (r & -r).bit_length() - 1
        dims[find(low)] += 1
    return [(groups[root], dims[root]) for root in sorted(groups, key=lambda g: groups[g][0])]


@dataclass(frozen=True)
class ComplexityReport:
    m_hidden: int
    m_constraint: int
    m: int
    factors: dict
    limit: int

    @property
    def ok(self) -> bool:
        return self.m <= self.limit


def constraint_complexity(code: LinearCode) -> int:
    if code.n == 0:
        return 0
    return max(min(k, len(cols) - k) for cols, k in cartesian_factors(code))


def verify_qm(gm: GraphicalModel, m: int) -> ComplexityReport:
    """Check whether ``gm`` is a q^m-ary model (report.ok) and report its complexity."""
    m_hidden = max((h.size for h in gm.hiddens), default=0)
    factors = {}
    m_con = 0
    for c in gm.constraints:
        if c.is_trivial:
            factors[c.cid] = []
            continue
        fac = cartesian_factors(c.code)
        factors[c.cid] = [(tuple(c.code.labels[j] for j in cols), k, len(cols)) for cols, k in fac]
        m_con = max(m_con, max(min(k, len(cols) - k) for cols, k in fac))
    return ComplexityReport(m_hidden, m_con, max(m_hidden, m_con), factors, m)


# ---------------------------------------------------------------------------
# Dualization and topology
# ---------------------------------------------------------------------------


def dualize(gm: GraphicalModel) -> GraphicalModel:
    """Replace every local code by its dual; over GF(2) no sign changes are needed."""
    cons = tuple(
        Constraint(c.cid, dual(c.code) if c.bindings else c.code, c.bindings) for c in gm.constraints
    )
    return GraphicalModel(gm.visibles, gm.hiddens, cons, gm.check_connected)


@dataclass(frozen=True)
class Topology:
    vertices: int
    edges: int
    connected: bool
    cycle_free: bool

    def __iter__(self):
        return iter((self.vertices, self.edges, self.connected, self.cycle_free))


def topology(gm: GraphicalModel) -> Topology:
    """Vertex and edge counts of the constraint graph (trivial constraints excluded)."""
    v = sum(1 for c in gm.constraints if not c.is_trivial)
    e = len(gm.hiddens)
    connected = gm.is_connected()
    return Topology(v, e, connected, connected and e == v - 1)


# ---------------------------------------------------------------------------
# GMF text format
# ---------------------------------------------------------------------------


def format_gmf(gm: GraphicalModel) -> str:
    lines = ["gmf 1"]
    lines += [f"visible {v}" for v in gm.visibles]
    lines += [f"hidden {h.label} {h.size} {h.endpoints[0]} {h.endpoints[1]}" for h in gm.hiddens]
    for c in gm.constraints:
        lines.append(f"constraint {c.cid} {c.kind}")
        lines += [f"bind {i} {binding_key(b)}" for i, b in enumerate(c.bindings)]
        lines += [f"genrow {s}" for s in c.code.generator.to_strings()] if c.bindings else []
    return "\n".join(lines) + "\n"


def parse_gmf(text: str, check_connected: bool = True) -> GraphicalModel:
    lines = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines or lines[0] != ["gmf", "1"]:
        raise GmfFormatError("missing 'gmf 1' header")
    visibles: list[str] = []
    hiddens: list[Hidden] = []
    blocks: list[tuple[str, str, dict[int, Binding], list[str]]] = []
    for toks in lines[1:]:
        kw = toks[0]
        try:
            if kw == "visible" and len(toks) == 2:
                visibles.append(toks[1])
            elif kw == "hidden" and len(toks) == 5:
                hiddens.append(Hidden(toks[1], int(toks[2]), (toks[3], toks[4])))
            elif kw == "constraint" and len(toks) == 3:
                if toks[2] not in ("interface", "internal"):
                    raise GmfFormatError(f"bad constraint kind {toks[2]!r}")
                blocks.append((toks[1], toks[2], {}, []))
            elif kw == "bind" and len(toks) == 3 and blocks:
                pos = int(toks[1])
                if pos in blocks[-1][2]:
                    raise GmfFormatError(f"local coordinate {pos} bound twice")
                blocks[-1][2][pos] = parse_binding(toks[2])
            elif kw == "genrow" and len(toks) == 2 and blocks:
                blocks[-1][3].append(toks[1])
            else:
                raise GmfFormatError(f"unrecognised line: {' '.join(toks)}")
        except ValueError as exc:
            raise GmfFormatError(f"bad line {' '.join(toks)}: {exc}") from None
    cons = []
    for cid, kind, binds, genrows in blocks:
        n = len(binds)
        if sorted(binds) != list(range(n)):
            raise GmfFormatError(f"constraint {cid} has non-contiguous local coordinates")
        bindings = tuple(binds[i] for i in range(n))
        if any(len(g) != n for g in genrows):
            raise GmfFormatError(f"constraint {cid} has generator rows of the wrong length")
        try:
            gen = BinaryMatrix.from_strings(genrows) if genrows else BinaryMatrix.zeros(0, n)
            code = LinearCode(gen, tuple(binding_key(b) for b in bindings))
        except ValueError as exc:
            raise GmfFormatError(f"constraint {cid}: {exc}") from None
        c = Constraint(cid, code, bindings)
        if c.kind != kind:
            raise GmfFormatError(f"constraint {cid} declared {kind} but is {c.kind}")
        cons.append(c)
    return GraphicalModel(tuple(visibles), tuple(hiddens), tuple(cons), check_connected)


def read_gmf(path, check_connected: bool = True) -> GraphicalModel:
    with open(path, encoding="utf-8") as fh:
        return parse_gmf(fh.read(), check_connected)


def write_gmf(gm: GraphicalModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_gmf(gm))
