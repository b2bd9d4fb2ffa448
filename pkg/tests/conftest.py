import random

import pytest

from compgen.mr_tree import MrNode, MrTree

LABELS = ["DS_JUSTIFY", "DS_CONTRAST", "DG_INFORM", "DG_RECOMMEND", "CONDITION", "LOCATION", "CITY", "DATE_TIME"]
WORDS = ["light", "rain", "Palo", "Alto", "today", "$552", "3:00", "won't", "a.m."]


def random_tree(rng: random.Random, max_depth: int = 6, max_branch: int = 5) -> MrTree:
    """Arbitrary well-formed tree (not necessarily schema-valid)."""

    def node(depth):
        items = []
        for _ in range(rng.randint(0, max_branch)):
            if depth < max_depth and rng.random() < 0.45:
                items.append(node(depth + 1))
            else:
                items.append(rng.choice(WORDS))
        return MrNode(rng.choice(LABELS), tuple(items))

    return MrTree(tuple(node(1) for _ in range(rng.randint(1, max_branch))))


@pytest.fixture
def rng():
    return random.Random(1234)


# -- acceptance summary -------------------------------------------------------

_ACCEPTANCE: dict[int, tuple[str, str]] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py::test_criterion_" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        n = int(report.nodeid.split("test_criterion_")[1].split("_")[0])
        detail = dict(report.user_properties).get("detail", "")
        _ACCEPTANCE[n] = ("PASS" if report.passed else "FAIL", detail)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        status, detail = _ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {status}  {detail}")
