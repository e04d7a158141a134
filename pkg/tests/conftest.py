import itertools

import pytest

from coevo.graph import Graph


def path(n):
    return Graph.from_edges([(i, i + 1) for i in range(n - 1)])


def star(leaves):
    return Graph.from_edges([(0, i) for i in range(1, leaves + 1)])


def complete(n, offset=0):
    return Graph.from_edges([(u + offset, v + offset) for u, v in itertools.combinations(range(n), 2)])


def two_cliques(size=5):
    """Two K_size joined by the edge (size-1, size)."""
    edges = list(itertools.combinations(range(size), 2))
    edges += [(u + size, v + size) for u, v in itertools.combinations(range(size), 2)]
    edges.append((size - 1, size))
    return Graph.from_edges(edges)


def bowtie():
    return Graph.from_edges([(0, 1), (0, 2), (1, 2), (2, 3), (2, 4), (3, 4)])


@pytest.fixture
def usair_like():
    from coevo.datasets import surrogate

    return surrogate("usair")


# acceptance reporting: one line per test marked with criterion(n, title)

_CRITERIA: dict[str, tuple[int, str, str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        status = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[rep.outcome]
        reason = ""
        if rep.outcome == "failed" and call.excinfo is not None:
            reason = str(call.excinfo.value).splitlines()[0][:120] if str(call.excinfo.value) else call.excinfo.typename
        title = mark.args[1]
        callspec = getattr(item, "callspec", None)
        if callspec is not None:
            title += f" [{callspec.id}]"
        _CRITERIA[item.nodeid] = (mark.args[0], title, status, reason)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, status, reason in sorted(_CRITERIA.values(), key=lambda r: (r[0], r[1])):
        line = f"criterion {number:>2} {status}  {title}"
        terminalreporter.line(line + (f"  [{reason}]" if reason else ""))
