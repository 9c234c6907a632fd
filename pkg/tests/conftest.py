from functools import lru_cache

import pytest

from so3cat.cells import canonical_forms, cell_closed_form
from so3cat.nimrep import build_graph
from so3cat.qnum import make_context

ACCEPTANCE = {}


@lru_cache(maxsize=None)
def system(family, m):
    """(ctx, graph, bilinear forms, closed-form cells) for one family/level."""
    ctx = make_context(m)
    g = build_graph(family, ctx)
    return ctx, g, canonical_forms(g), cell_closed_form(g, ctx)


@pytest.fixture
def record():
    def _record(k, ok, detail=""):
        ACCEPTANCE[k] = (bool(ok), detail)
        return ok
    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
