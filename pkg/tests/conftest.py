import random
from pathlib import Path

import pytest

from evopatch.candidates import CandidateStatement
from evopatch.core import SourceSnapshot, StatementLocation, TestReport
from evopatch.localization import SuspiciousStatement

CORPUS_DIR = Path(__file__).parent / "corpus"
GOLDEN_DIR = Path(__file__).parent / "goldens"


def loc(file: str, start: int, end: int | None = None) -> StatementLocation:
    return StatementLocation(file, start, end if end is not None else start)


def report(test_id: str, verdict: str, covered=(), assertions=()) -> TestReport:
    return TestReport(
        test_id=test_id,
        verdict=verdict,
        assertions=tuple(assertions),
        covered=frozenset(covered),
    )


def cand(text: str, origin: str = "fixture") -> CandidateStatement:
    return CandidateStatement.make(text, origin)


def stmt(
    location: StatementLocation,
    susp: float = 1.0,
    original: str = "x = 1",
    region: tuple[int, int] | None = None,
    replace=(),
    insert=(),
) -> SuspiciousStatement:
    return SuspiciousStatement(
        location=location,
        susp=susp,
        original_text=original,
        enclosing_region=region or (location.line_start, location.line_end),
        replacement_candidates=tuple(replace),
        insertion_candidates=tuple(insert),
    )


def random_spectrum_raw(rng: random.Random, max_tests: int = 20, max_statements: int = 30):
    """A random raw spectrum: (reports, locations), with >= 1 failing test."""
    n_stmts = rng.randint(1, max_statements)
    locations = [loc("m.src", i + 1) for i in range(n_stmts)]
    n_tests = rng.randint(1, max_tests)
    reports = []
    for t in range(n_tests):
        covered = {l for l in locations if rng.random() < 0.4}
        verdict = "fail" if rng.random() < 0.35 else "pass"
        reports.append(report(f"t{t}", verdict, covered))
    if all(r.verdict == "pass" for r in reports):
        idx = rng.randrange(len(reports))
        reports[idx] = report(reports[idx].test_id, "fail", reports[idx].covered)
    return reports, locations


@pytest.fixture
def two_file_snapshot() -> SourceSnapshot:
    return SourceSnapshot(
        {
            "a.src": "one\ntwo\nthree\nfour\nfive\n",
            "b.src": "alpha\nbeta\n",
        }
    )
