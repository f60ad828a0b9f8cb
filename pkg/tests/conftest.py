import pytest

import suite
from pareto_assign.model import Assignment

# acceptance outcomes, filled in by test_acceptance and printed at the end of the run
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def tiny():
    return suite.tiny1()


@pytest.fixture(scope="session")
def paper():
    return suite.paper_scale()


@pytest.fixture
def single():
    return suite.singleton()


def tri(inst, *labels):
    """Assignment from (product, feature, line) name triples."""
    pi = {p.name: k for k, p in enumerate(inst.products)}
    fi = {f.name: k for k, f in enumerate(inst.features)}
    li = {ln.name: k for k, ln in enumerate(inst.lines)}
    return Assignment.from_triples(inst, [(pi[p], fi[f], li[ln]) for p, f, ln in labels])


@pytest.fixture
def make():
    return tri


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
