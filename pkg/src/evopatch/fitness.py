"""The two minimized objectives.

f1 counts the edits a genome actually applies. f2 aggregates assertion-level
distances from a filtered test run on the patched program: the mean failure
rate over passing tests plus a weighted mean over failing ones. A patch that
does not build is infeasible and takes a fixed dominating penalty.
"""

from __future__ import annotations

import logging
import math
import shutil
import tempfile
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .core import AssertionRecord, ProtocolError, SourceSnapshot, TestReport
from .localization import CoverageSpectrum, SuspiciousStatement
from .patches import Edit, PatchGenome, apply_edits, decode_genome, render_diff
from .subject import SubjectConfig, SubjectConfigError, run_build, run_tests, materialize

log = logging.getLogger(__name__)

INFEASIBLE_F2 = 10.0
DEFAULT_W = 0.5


class EvaluationError(RuntimeError):
    """Adapter I/O failed; distinct from an infeasible (non-building) patch."""


@dataclass(frozen=True)
class FitnessVector:
    f1: float
    f2: float

    def as_tuple(self) -> tuple[float, float]:
        return (self.f1, self.f2)


def normalize_gap(z: float) -> float:
    """Squash a non-negative gap into [0, 1): z / (1 + z)."""
    return z / (1.0 + z)


def assertion_distance(record: AssertionRecord) -> float:
    """Distance of one assertion from passing, in [0, 1].

    Numeric: 0 inside the tolerance band, otherwise the normalized excess gap.
    Categorical: 0 if passed, 1 if not. Non-finite gaps score the maximum.
    """
    if record.kind == "categorical":
        return 0.0 if record.passed else 1.0
    assert record.expected is not None and record.actual is not None and record.delta is not None
    if record.delta < 0:
        raise ValueError(f"assertion {record.assertion_id!r} has negative delta")
    gap = abs(record.actual - record.expected)
    if not math.isfinite(gap):
        return 1.0
    if gap < record.delta:
        return 0.0
    return normalize_gap(gap - record.delta)


def test_failure_rate(report: TestReport) -> float:
    """Mean assertion distance of one test; non-terminating runs score 1."""
    if report.verdict in ("timeout", "crash"):
        return 1.0
    if not report.assertions:
        return 0.0 if report.verdict == "pass" else 1.0
    return sum(assertion_distance(a) for a in report.assertions) / len(report.assertions)


def combined_failure_rate(reports: Sequence[TestReport], w: float) -> float:
    """f2 over a set of executed tests: mean(h | passed) + w * mean(h | failed)."""
    pos = [test_failure_rate(r) for r in reports if r.verdict == "pass"]
    neg = [test_failure_rate(r) for r in reports if r.verdict != "pass"]
    pos_term = sum(pos) / len(pos) if pos else 0.0
    neg_term = sum(neg) / len(neg) if neg else 0.0
    return pos_term + w * neg_term


@dataclass
class EvaluationContext:
    """Everything evaluate() needs about the subject under repair."""

    lbs: list[SuspiciousStatement]
    snapshot: SourceSnapshot
    cfg: SubjectConfig
    baseline: CoverageSpectrum
    w: float = DEFAULT_W
    scratch_root: Path | None = None


@dataclass
class EvalOutcome:
    fitness: FitnessVector
    passed_filtered: bool
    infeasible: bool = False


def _edit_key(edits: Sequence[Edit]) -> tuple:
    return tuple((str(e.location), e.kind, e.text) for e in edits)


class SubjectEvaluator:
    """Runs patched subjects in scratch directories and caches by edit list.

    Safe for concurrent evaluate() calls: each subject run owns a private
    scratch directory and cache/counter updates are lock-protected.
    """

    def __init__(self, ctx: EvaluationContext):
        self.ctx = ctx
        self.evaluations = 0
        self.subject_runs = 0
        self.validation_runs = 0
        self._eval_cache: dict[tuple, EvalOutcome] = {}
        self._full_cache: dict[tuple, bool] = {}
        self._lock = threading.Lock()
        failing = [t.test_id for t in ctx.baseline.tests if t.verdict != "pass"]
        if not failing:
            raise EvaluationError("baseline has no failing test; nothing to repair")
        self._failing_ids = failing

    # -- selection ---------------------------------------------------------

    def filtered_selection(self, edits: Sequence[Edit]) -> list[str]:
        """Originally-failing tests plus passing tests covering an edited span."""
        touched = {e.location for e in edits}
        selected = list(self._failing_ids)
        for report in self.ctx.baseline.tests:
            if report.verdict != "pass":
                continue
            if any(loc in report.covered for loc in touched):
                selected.append(report.test_id)
        return selected

    # -- objectives --------------------------------------------------------

    def evaluate(self, genome: PatchGenome) -> EvalOutcome:
        with self._lock:
            self.evaluations += 1
        edits = decode_genome(genome, self.ctx.lbs)
        key = _edit_key(edits)
        with self._lock:
            cached = self._eval_cache.get(key)
        if cached is not None:
            return cached

        f1 = float(len(edits))
        reports, built = self._run_subject(edits, self.filtered_selection(edits))
        if not built:
            outcome = EvalOutcome(FitnessVector(f1, INFEASIBLE_F2), False, infeasible=True)
        else:
            f2 = combined_failure_rate(reports, self.ctx.w)
            passed = all(r.verdict == "pass" for r in reports)
            outcome = EvalOutcome(FitnessVector(f1, f2), passed)
        with self._lock:
            self._eval_cache[key] = outcome
        return outcome

    def is_plausible(self, genome: PatchGenome) -> bool:
        """Full-suite validation of a patch that passed its filtered selection."""
        edits = decode_genome(genome, self.ctx.lbs)
        key = _edit_key(edits)
        with self._lock:
            cached = self._full_cache.get(key)
        if cached is not None:
            return cached
        reports, built = self._run_subject(edits, "all", validation=True)
        plausible = built and all(r.verdict == "pass" for r in reports)
        with self._lock:
            self._full_cache[key] = plausible
        return plausible

    # -- patch artifacts ----------------------------------------------------

    def patch_key(self, genome: PatchGenome) -> tuple:
        return _edit_key(decode_genome(genome, self.ctx.lbs))

    def render_patch(self, genome: PatchGenome) -> str:
        edits = decode_genome(genome, self.ctx.lbs)
        return render_diff(self.ctx.snapshot, apply_edits(self.ctx.snapshot, edits))

    # -- internals ----------------------------------------------------------

    def _run_subject(self, edits, selection, validation: bool = False):
        try:
            patched = apply_edits(self.ctx.snapshot, edits)
            workdir = Path(
                tempfile.mkdtemp(prefix="eval-", dir=self.ctx.scratch_root)
            )
        except OSError as exc:
            raise EvaluationError(f"scratch setup failed: {exc}") from exc
        try:
            materialize(patched, workdir)
            built, build_out = run_build(workdir, self.ctx.cfg)
            if not built:
                log.debug("build failed for %s-edit patch: %s", len(edits), build_out[-200:])
                return [], False
            with self._lock:
                if validation:
                    self.validation_runs += 1
                else:
                    self.subject_runs += 1
            return run_tests(workdir, selection, self.ctx.cfg), True
        except (OSError, SubjectConfigError, ProtocolError) as exc:
            raise EvaluationError(f"subject run failed: {exc}") from exc
        finally:
            shutil.rmtree(workdir, ignore_errors=True)
