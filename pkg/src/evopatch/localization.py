"""Spectrum-based fault localization.

Aggregates per-test coverage into a spectrum, scores statements with the
Ochiai formula and selects the ranked list of likely-buggy statements that
the search will try to modify.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

from .candidates import CandidateStatement
from .core import SourceSnapshot, StatementLocation, TestReport


class SpectrumError(ValueError):
    """Raised when test reports cannot form a valid coverage spectrum."""


@dataclass(frozen=True)
class CoverageSpectrum:
    """Per-test outcomes plus the universe of known statement locations."""

    tests: tuple[TestReport, ...]
    universe: frozenset[StatementLocation]

    @property
    def failing(self) -> tuple[TestReport, ...]:
        return tuple(t for t in self.tests if t.verdict != "pass")

    @property
    def passing(self) -> tuple[TestReport, ...]:
        return tuple(t for t in self.tests if t.verdict == "pass")


@dataclass(frozen=True)
class SuspiciousStatement:
    """A ranked likely-buggy statement with its two candidate sets."""

    location: StatementLocation
    susp: float
    original_text: str
    enclosing_region: tuple[int, int]
    replacement_candidates: tuple[CandidateStatement, ...] = ()
    insertion_candidates: tuple[CandidateStatement, ...] = ()

    def with_candidates(
        self,
        replacement: Sequence[CandidateStatement],
        insertion: Sequence[CandidateStatement],
    ) -> "SuspiciousStatement":
        return replace(
            self,
            replacement_candidates=tuple(replacement),
            insertion_candidates=tuple(insertion),
        )


def ingest_spectrum(
    reports: Iterable[TestReport],
    declared: Iterable[StatementLocation] = (),
) -> CoverageSpectrum:
    """Aggregate test reports into a coverage spectrum.

    `declared` carries the adapter's segmentation of the source files; covered
    locations are canonicalized onto the declared statement spans so that the
    universe never holds two overlapping locations for one file.
    """
    declared = tuple(declared)
    by_file: dict[str, list[StatementLocation]] = {}
    for loc in declared:
        by_file.setdefault(loc.file, []).append(loc)
    for spans in by_file.values():
        spans.sort()

    def canonical(loc: StatementLocation) -> tuple[StatementLocation, ...]:
        spans = by_file.get(loc.file)
        if not spans:
            return (loc,)
        hits = tuple(s for s in spans if s.overlaps(loc))
        return hits or (loc,)

    tests: list[TestReport] = []
    seen: set[str] = set()
    universe: set[StatementLocation] = set(declared)
    for report in reports:
        if report.test_id in seen:
            raise SpectrumError(f"duplicate test id {report.test_id!r}")
        seen.add(report.test_id)
        covered: set[StatementLocation] = set()
        for loc in report.covered:
            covered.update(canonical(loc))
        universe.update(covered)
        tests.append(replace(report, covered=frozenset(covered)))
    if not tests:
        raise SpectrumError("no test reports")
    return CoverageSpectrum(tests=tuple(tests), universe=frozenset(universe))


def ochiai_score(spectrum: CoverageSpectrum, loc: StatementLocation) -> float:
    """Suspiciousness of `loc`: ef / sqrt(totalFail * (ef + ep)), 0 when ef = 0."""
    if loc not in spectrum.universe:
        raise SpectrumError(f"location {loc} not in spectrum universe")
    ef = sum(1 for t in spectrum.failing if loc in t.covered)
    if ef == 0:
        return 0.0
    ep = sum(1 for t in spectrum.passing if loc in t.covered)
    total_fail = len(spectrum.failing)
    return ef / math.sqrt(total_fail * (ef + ep))


def enclosing_region(file_lines: Sequence[str], loc: StatementLocation) -> tuple[int, int]:
    """Surrounding region of a statement: the blank-line-delimited block.

    A language-agnostic stand-in for the enclosing function body; works for
    sources that separate definitions with blank lines.
    """
    start = loc.line_start
    end = loc.line_end
    while start > 1 and file_lines[start - 2].strip():
        start -= 1
    while end < len(file_lines) and file_lines[end].strip():
        end += 1
    return (start, end)


def select_lbs(
    spectrum: CoverageSpectrum,
    gamma_min: float,
    n_max: int,
    sources: SourceSnapshot,
) -> list[SuspiciousStatement]:
    """Rank statements by suspiciousness and keep the top candidates.

    Sorted by susp descending, ties by (file, line_start) ascending; filtered
    at `gamma_min` and truncated to `n_max`. Candidate sets start empty.
    """
    if not 0.0 <= gamma_min <= 1.0:
        raise ValueError(f"gamma_min must be in [0,1], got {gamma_min}")
    if n_max < 1:
        raise ValueError(f"n_max must be >= 1, got {n_max}")

    scored = [(loc, ochiai_score(spectrum, loc)) for loc in spectrum.universe]
    scored = [(loc, s) for loc, s in scored if s >= gamma_min]
    scored.sort(key=lambda item: (-item[1], item[0].file, item[0].line_start))
    scored = scored[:n_max]

    selected = []
    for loc, susp in scored:
        if loc.file not in sources.files:
            raise FileNotFoundError(f"source file {loc.file!r} not in snapshot")
        lines = sources.files[loc.file].splitlines()
        if loc.line_end > len(lines):
            raise FileNotFoundError(f"{loc} is outside {loc.file!r} ({len(lines)} lines)")
        text = "\n".join(lines[loc.line_start - 1 : loc.line_end])
        selected.append(
            SuspiciousStatement(
                location=loc,
                susp=susp,
                original_text=text,
                enclosing_region=enclosing_region(lines, loc),
            )
        )
    return selected


def localization_report(lbs: Sequence[SuspiciousStatement]) -> str:
    """Render the localization report file: a JSON array in rank order."""
    entries = [
        {
            "file": s.location.file,
            "line_start": s.location.line_start,
            "line_end": s.location.line_end,
            "susp": s.susp,
        }
        for s in lbs
    ]
    return json.dumps(entries, indent=2, sort_keys=True) + "\n"
