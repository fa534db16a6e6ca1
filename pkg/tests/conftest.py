from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from gmcodes.gf2codes import BinaryMatrix, LinearCode
from gmcodes.model import GraphicalModel, binding_key

settings.register_profile(
    "repo",
    deadline=None,
    derandomize=True,
    max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("repo")

# criterion number -> "criterion N: PASS|FAIL ..." line, filled by test_acceptance.py
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[number])


def words_of(code: LinearCode) -> set[int]:
    return set(code.codewords())


def brute_nullspace(h: BinaryMatrix) -> set[int]:
    """Every word x of length h.cols with H x = 0, by enumeration."""
    return {
        x
        for x in range(1 << h.cols)
        if all((x & r).bit_count() % 2 == 0 for r in h.bits)
    }


def brute_realized_words(gm: GraphicalModel) -> set[tuple[int, ...]]:
    """Visible projections of all valid configurations, by enumeration.

    Independent of the linear-algebra path: every assignment to the visible
    and hidden coordinates is checked against each local code.
    """
    coords = [f"v:{v}" for v in gm.visibles]
    for h in gm.hiddens:
        coords += [f"h:{h.label}.{c}" for c in range(h.size)]
    assert len(coords) <= 18, "model too large for enumeration"
    pos = {k: i for i, k in enumerate(coords)}
    checks = []
    for c in gm.constraints:
        idx = [pos[binding_key(b)] for b in c.bindings]
        words = words_of(c.code)
        checks.append((idx, words))
    out = set()
    for x in range(1 << len(coords)):
        ok = True
        for idx, words in checks:
            local = 0
            for j, p in enumerate(idx):
                local |= ((x >> p) & 1) << j
            if local not in words:
                ok = False
                break
        if ok:
            out.add(tuple((x >> i) & 1 for i in range(len(gm.visibles))))
    return out


def code_word_tuples(code: LinearCode) -> set[tuple[int, ...]]:
    return {tuple((w >> i) & 1 for i in range(code.n)) for w in code.codewords()}


def all_words(n: int):
    return itertools.product((0, 1), repeat=n)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)
