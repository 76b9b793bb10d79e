import pytest

from pathclass.taxonomy import build_taxonomy, enumerate_paths, normalize_depth

collect_ignore_glob = []


def two_branch_tree():
    """Depth-2 tree: two internal nodes with three leaves each (six paths)."""
    edges = [("root", "c1_1"), ("root", "c1_2")]
    edges += [("c1_1", f"c2_{i}") for i in (1, 2, 3)]
    edges += [("c1_2", f"c2_{i}") for i in (4, 5, 6)]
    return normalize_depth(build_taxonomy(edges))


@pytest.fixture
def two_branch():
    t = two_branch_tree()
    return t, enumerate_paths(t)


@pytest.fixture
def ragged_tree():
    """Depth-2 tree where leaf b is shallow, so normalization adds one dummy."""
    edges = [("root", "a"), ("root", "b"), ("a", "a1"), ("a", "a2")]
    return build_taxonomy(edges)


@pytest.fixture
def cube_tree():
    """Depth-3 binary tree: 2 x 2 x 2 = 8 paths."""
    edges = [("r", "a"), ("r", "b")]
    edges += [(p, f"{p}{i}") for p in "ab" for i in (0, 1)]
    edges += [(f"{p}{i}", f"{p}{i}x{j}") for p in "ab" for i in (0, 1) for j in (0, 1)]
    t = normalize_depth(build_taxonomy(edges))
    return t, enumerate_paths(t)


def write_corpus(path, lines, vocab=None):
    with open(path, "w", encoding="utf-8") as fh:
        if vocab is not None:
            fh.write("#vocab\t" + " ".join(vocab) + "\n")
        for line in lines:
            fh.write(line + "\n")
    return str(path)


# Acceptance reporting: one PASS/FAIL line per criterion at the end of the run.

_acceptance_results = {}


def pytest_runtest_logreport(report):
    if "test_acceptance" in report.nodeid and report.when == "call":
        _acceptance_results[report.nodeid.split("::")[-1]] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_results:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name, outcome in sorted(_acceptance_results.items()):
        terminalreporter.write_line(f"{name}: {outcome.upper()}")
