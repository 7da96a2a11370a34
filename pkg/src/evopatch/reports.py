"""Repair run reports and their on-disk artifacts.

The report JSON is fully deterministic for a given seed and configuration;
wall-clock timing goes to a sidecar file so repeated runs stay byte-identical
and comparable. Archive diffs are written as individual files referenced by
relative path.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema

from .evolution import ArchiveEntry, EvolutionResult
from .localization import SuspiciousStatement

ARCHIVE_LIMIT = 10


@dataclass
class RepairReport:
    subject: str
    config: dict
    lbs: list[dict]
    archive: list[dict]
    generations: list[dict]
    evaluations: int
    provider_failures: int
    wall_ms: int
    status: str
    stopped_by: str
    error: str | None = None
    diffs: list[str] = field(default_factory=list)  # texts, parallel to archive

    def to_json_obj(self) -> dict:
        return {
            "subject": self.subject,
            "config": self.config,
            "lbs": self.lbs,
            "archive": self.archive,
            "generations": self.generations,
            "totals": {
                "evaluations": self.evaluations,
                "provider_failures": self.provider_failures,
            },
            "status": self.status,
            "stopped_by": self.stopped_by,
            "error": self.error,
        }


def _lbs_summary(lbs) -> list[dict]:
    return [
        {
            "file": s.location.file,
            "line_start": s.location.line_start,
            "line_end": s.location.line_end,
            "susp": s.susp,
        }
        for s in lbs
    ]


def build_report(
    subject: str,
    config: dict,
    lbs: list[SuspiciousStatement],
    result: EvolutionResult,
    provider_failures: int,
) -> RepairReport:
    """Assemble the report: archive sorted by edit count, smallest ten kept."""
    ordered: list[ArchiveEntry] = sorted(result.archive, key=lambda e: e.f1)[:ARCHIVE_LIMIT]
    archive = []
    diffs = []
    for idx, entry in enumerate(ordered):
        archive.append(
            {
                "diff_path": f"diffs/patch_{idx:03d}.diff",
                "f1": entry.f1,
                "f2": entry.f2,
                "evaluations_at_discovery": entry.evaluations_at_discovery,
            }
        )
        diffs.append(entry.diff)
    if result.error:
        status = "error"
    elif archive:
        status = "plausible_found"
    else:
        status = "no_plausible"
    return RepairReport(
        subject=subject,
        config=config,
        lbs=_lbs_summary(lbs),
        archive=archive,
        generations=result.generations,
        evaluations=result.evaluations,
        provider_failures=provider_failures,
        wall_ms=int(result.wall_s * 1000),
        status=status,
        stopped_by=result.stopped_by,
        error=result.error,
        diffs=diffs,
    )


def report_schema() -> dict:
    text = resources.files("evopatch.schemas").joinpath("report.schema.json").read_text()
    return json.loads(text)


def validate_report(obj: dict) -> None:
    jsonschema.validate(obj, report_schema())


def write_report(report: RepairReport, outdir: Path) -> Path:
    """Write report.json, the timing sidecar and the archive diff files."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    obj = report.to_json_obj()
    validate_report(obj)
    (outdir / "report.json").write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
    (outdir / "timing.json").write_text(
        json.dumps({"wall_ms": report.wall_ms}, indent=2, sort_keys=True) + "\n"
    )
    diffs_dir = outdir / "diffs"
    if report.diffs:
        diffs_dir.mkdir(exist_ok=True)
    for entry, diff in zip(report.archive, report.diffs):
        (outdir / entry["diff_path"]).write_text(diff)
    return outdir / "report.json"
