"""Shared domain values: statement locations, assertion records, test reports.

These are the vocabulary types exchanged between the subject adapter, the
fault localizer and the fitness evaluator. Everything here is an immutable
value with a stable wire form.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping


class ProtocolError(ValueError):
    """A test-report line did not match the wire protocol."""


@dataclass(frozen=True, order=True)
class StatementLocation:
    """A statement span in a source file, 1-based and inclusive."""

    file: str
    line_start: int
    line_end: int

    def __post_init__(self) -> None:
        if self.line_start < 1 or self.line_end < self.line_start:
            raise ValueError(f"bad line span {self.line_start}-{self.line_end}")

    def overlaps(self, other: "StatementLocation") -> bool:
        return (
            self.file == other.file
            and self.line_start <= other.line_end
            and other.line_start <= self.line_end
        )

    def __str__(self) -> str:
        return f"{self.file}:{self.line_start}-{self.line_end}"


def parse_location(spec: str) -> StatementLocation:
    """Parse the 'path:start-end' form used on the wire."""
    path, sep, span = spec.rpartition(":")
    if not sep or "-" not in span:
        raise ProtocolError(f"bad location {spec!r}, expected 'path:start-end'")
    start_s, _, end_s = span.partition("-")
    try:
        return StatementLocation(path, int(start_s), int(end_s))
    except ValueError as exc:
        raise ProtocolError(f"bad location {spec!r}: {exc}") from None


@dataclass(frozen=True)
class AssertionRecord:
    """One executed assertion; numeric records carry the expected/actual gap."""

    assertion_id: str
    kind: str  # "numeric" | "categorical"
    passed: bool
    expected: float | None = None
    actual: float | None = None
    delta: float | None = None

    def __post_init__(self) -> None:
        if self.kind == "numeric":
            if self.expected is None or self.actual is None or self.delta is None:
                raise ValueError(f"numeric assertion {self.assertion_id!r} missing values")
        elif self.kind == "categorical":
            pass
        else:
            raise ValueError(f"unknown assertion kind {self.kind!r}")


@dataclass(frozen=True)
class TestReport:
    """Outcome of one test: verdict, executed assertions, covered statements."""

    test_id: str
    verdict: str  # "pass" | "fail" | "timeout" | "crash"
    assertions: tuple[AssertionRecord, ...] = ()
    covered: frozenset[StatementLocation] = field(default_factory=frozenset)
    runtime_ms: int = 0

    VERDICTS = ("pass", "fail", "timeout", "crash")

    def __post_init__(self) -> None:
        if self.verdict not in self.VERDICTS:
            raise ValueError(f"unknown verdict {self.verdict!r}")


def report_to_json(report: TestReport) -> str:
    """Serialize one report as a single NDJSON protocol line."""
    assertions = []
    for a in report.assertions:
        rec: dict = {"id": a.assertion_id, "kind": a.kind, "passed": a.passed}
        if a.kind == "numeric":
            rec.update(expected=a.expected, actual=a.actual, delta=a.delta)
        assertions.append(rec)
    obj = {
        "test": report.test_id,
        "verdict": report.verdict,
        "assertions": assertions,
        "covered": sorted(str(loc) for loc in report.covered),
        "runtime_ms": report.runtime_ms,
    }
    return json.dumps(obj, sort_keys=True)


class SourceSnapshot:
    """An immutable view of a subject's source tree, addressed by relative path."""

    def __init__(self, files: Mapping[str, str]):
        self._files = MappingProxyType(dict(files))
        digest = hashlib.sha256()
        for path in sorted(self._files):
            digest.update(path.encode())
            digest.update(b"\0")
            digest.update(self._files[path].encode())
            digest.update(b"\0")
        self.fingerprint = digest.hexdigest()

    @property
    def files(self) -> Mapping[str, str]:
        return self._files

    def with_files(self, updates: Mapping[str, str]) -> "SourceSnapshot":
        merged = dict(self._files)
        merged.update(updates)
        return SourceSnapshot(merged)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, SourceSnapshot) and self.fingerprint == other.fingerprint

    def __hash__(self) -> int:
        return hash(self.fingerprint)

    def __repr__(self) -> str:
        return f"SourceSnapshot({len(self._files)} files, {self.fingerprint[:12]})"


def report_from_json(line: str, lineno: int = 0) -> TestReport:
    """Parse one NDJSON protocol line; errors name the offending line."""
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ProtocolError(f"line {lineno}: not valid JSON ({exc.msg})") from None
    if not isinstance(obj, dict) or "test" not in obj or "verdict" not in obj:
        raise ProtocolError(f"line {lineno}: missing 'test' or 'verdict' field")
    try:
        assertions = []
        for rec in obj.get("assertions", []):
            assertions.append(
                AssertionRecord(
                    assertion_id=str(rec["id"]),
                    kind=rec.get("kind", "categorical"),
                    passed=bool(rec["passed"]),
                    expected=rec.get("expected"),
                    actual=rec.get("actual"),
                    delta=rec.get("delta"),
                )
            )
        covered = frozenset(parse_location(s) for s in obj.get("covered", []))
        return TestReport(
            test_id=str(obj["test"]),
            verdict=str(obj["verdict"]),
            assertions=tuple(assertions),
            covered=covered,
            runtime_ms=int(obj.get("runtime_ms", 0)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ProtocolError(f"line {lineno}: {exc}") from None
