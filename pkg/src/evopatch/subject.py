"""The boundary to the subject program under repair.

Covers statement segmentation of source text, scratch-directory test
execution speaking the NDJSON report protocol, and the default validity
check applied to generated candidate statements.
"""

from __future__ import annotations

import json
import logging
import queue
import shlex
import subprocess
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

from .core import ProtocolError, SourceSnapshot, StatementLocation, TestReport, report_from_json

log = logging.getLogger(__name__)

DEFAULT_COMMENT_PREFIXES = ("//", "#")

_OPEN = "([{"
_CLOSE = ")]}"
_PAIR = {")": "(", "]": "[", "}": "{"}


class SubjectConfigError(ValueError):
    """The subject configuration is unusable (missing command, bad paths)."""


@dataclass
class SubjectConfig:
    root: Path
    test_command: str
    source_globs: list[str] = field(default_factory=lambda: ["src/**/*"])
    build_command: str | None = None
    per_test_timeout_ms: int = 5000
    build_timeout_ms: int = 60000
    catalog_path: str | None = None
    tests: list[str] | None = None
    comment_prefixes: tuple[str, ...] = DEFAULT_COMMENT_PREFIXES
    validator_command: str | None = None
    defaults: dict = field(default_factory=dict)
    subject_id: str = ""

    def __post_init__(self) -> None:
        self.root = Path(self.root)
        if not self.test_command:
            raise SubjectConfigError("test_command is required")
        if self.per_test_timeout_ms <= 0:
            raise SubjectConfigError("per_test_timeout_ms must be positive")
        if not self.subject_id:
            self.subject_id = self.root.name


def load_config(path: Path) -> SubjectConfig:
    """Read a SubjectConfig JSON file; the subject root is the file's directory."""
    path = Path(path)
    if path.is_dir():
        path = path / "subject.json"
    if not path.is_file():
        raise SubjectConfigError(f"no subject config at {path}")
    with open(path) as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SubjectConfigError(f"{path}: {exc}") from None
    known = {
        "test_command",
        "source_globs",
        "build_command",
        "per_test_timeout_ms",
        "build_timeout_ms",
        "catalog_path",
        "tests",
        "comment_prefixes",
        "validator_command",
        "defaults",
    }
    unknown = set(raw) - known
    if unknown:
        raise SubjectConfigError(f"{path}: unknown fields {sorted(unknown)}")
    if "comment_prefixes" in raw:
        raw["comment_prefixes"] = tuple(raw["comment_prefixes"])
    return SubjectConfig(root=path.parent, **raw)


def _scan_balance(text: str) -> tuple[list[str], str | None]:
    """Track bracket nesting outside quoted strings.

    Returns the open-bracket stack at end of text plus the unterminated quote
    character, if any.
    """
    stack: list[str] = []
    quote: str | None = None
    escaped = False
    for ch in text:
        if quote is not None:
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == quote:
                quote = None
            continue
        if ch in ("'", '"'):
            quote = ch
        elif ch in _OPEN:
            stack.append(ch)
        elif ch in _CLOSE:
            if not stack or stack[-1] != _PAIR[ch]:
                stack.append(ch)  # mismatched closer keeps the text unbalanced
            else:
                stack.pop()
    return stack, quote


def is_balanced(text: str) -> bool:
    stack, quote = _scan_balance(text)
    return not stack and quote is None


def segment_statements(
    file_text: str,
    path: str = "",
    comment_prefixes: tuple[str, ...] = DEFAULT_COMMENT_PREFIXES,
) -> list[StatementLocation]:
    """Split a file into statement locations.

    One non-blank, non-comment line is one statement; a line left with open
    brackets pulls following lines into a single multi-line statement until
    the brackets balance.
    """
    lines = file_text.splitlines()
    locations: list[StatementLocation] = []
    i = 0
    while i < len(lines):
        stripped = lines[i].strip()
        if not stripped or any(stripped.startswith(p) for p in comment_prefixes):
            i += 1
            continue
        start = i
        stack, _ = _scan_balance(lines[i])
        while stack and all(c in _OPEN for c in stack) and i + 1 < len(lines):
            i += 1
            stack, _ = _scan_balance("\n".join(lines[start : i + 1]))
        locations.append(StatementLocation(path, start + 1, i + 1))
        i += 1
    return locations


def statement_texts(
    file_text: str,
    comment_prefixes: tuple[str, ...] = DEFAULT_COMMENT_PREFIXES,
) -> list[str]:
    """Texts of the statements in `file_text`, in order."""
    lines = file_text.splitlines()
    return [
        "\n".join(lines[loc.line_start - 1 : loc.line_end])
        for loc in segment_statements(file_text, "", comment_prefixes)
    ]


class SubjectSyntax:
    """Segmentation and validity rules for candidate texts.

    The default validity check is the language-agnostic floor: non-empty and
    balanced delimiters/quotes. A subject may override it with an external
    validator command fed via stdin (exit 0 means valid).
    """

    def __init__(
        self,
        comment_prefixes: tuple[str, ...] = DEFAULT_COMMENT_PREFIXES,
        validator_command: str | None = None,
        root: Path | None = None,
    ):
        self.comment_prefixes = comment_prefixes
        self.validator_command = validator_command
        self.root = root

    def segment_candidate(self, text: str) -> list[str]:
        return statement_texts(text, self.comment_prefixes)

    def validate_candidate(self, text: str) -> bool:
        if not text.strip():
            return False
        if self.validator_command is None:
            return is_balanced(text)
        try:
            proc = subprocess.run(
                shlex.split(self.validator_command),
                input=text,
                capture_output=True,
                text=True,
                timeout=10,
                cwd=self.root,
            )
            return proc.returncode == 0
        except (OSError, subprocess.SubprocessError) as exc:
            log.warning("external validator failed (%s); treating candidate as invalid", exc)
            return False


def syntax_for(cfg: SubjectConfig) -> SubjectSyntax:
    return SubjectSyntax(cfg.comment_prefixes, cfg.validator_command, cfg.root)


def load_snapshot(cfg: SubjectConfig) -> SourceSnapshot:
    """Read the subject's patchable source files into a snapshot."""
    files: dict[str, str] = {}
    for pattern in cfg.source_globs:
        for path in sorted(cfg.root.glob(pattern)):
            if path.is_file():
                files[path.relative_to(cfg.root).as_posix()] = path.read_text()
    if not files:
        raise SubjectConfigError(f"source_globs {cfg.source_globs} matched nothing under {cfg.root}")
    return SourceSnapshot(files)


def materialize(snapshot: SourceSnapshot, workdir: Path) -> None:
    workdir = Path(workdir)
    for rel, text in snapshot.files.items():
        target = workdir / rel
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(text)


def segment_snapshot(snapshot: SourceSnapshot, cfg: SubjectConfig) -> list[StatementLocation]:
    locations: list[StatementLocation] = []
    for path in sorted(snapshot.files):
        locations.extend(segment_statements(snapshot.files[path], path, cfg.comment_prefixes))
    return locations


def _format_command(template: str, cfg: SubjectConfig, selection) -> list[str]:
    tests_arg = "all" if selection == "all" else ",".join(selection)
    rendered = template.replace("{root}", str(cfg.root.resolve())).replace("{tests}", tests_arg)
    return shlex.split(rendered)


def run_build(workdir: Path, cfg: SubjectConfig) -> tuple[bool, str]:
    """Run the subject's build command in the workdir, if one is defined."""
    if not cfg.build_command:
        return True, ""
    argv = _format_command(cfg.build_command, cfg, "all")
    try:
        proc = subprocess.run(
            argv,
            cwd=workdir,
            capture_output=True,
            text=True,
            timeout=cfg.build_timeout_ms / 1000.0,
        )
    except FileNotFoundError as exc:
        raise SubjectConfigError(f"build command not found: {exc.filename}") from None
    except subprocess.TimeoutExpired:
        return False, "build timed out"
    return proc.returncode == 0, proc.stderr or proc.stdout


def run_tests(workdir: Path, selection, cfg: SubjectConfig) -> list[TestReport]:
    """Execute the subject's test command and parse its NDJSON report stream.

    `selection` is "all" or a list of test ids. A test is charged the time
    since the previous report line; exceeding per_test_timeout_ms kills the
    subject process. Selected tests left unreported after a kill or crash are
    synthesized with verdict timeout (the offender) or crash (the rest).
    """
    argv = _format_command(cfg.test_command, cfg, selection)
    per_test_s = cfg.per_test_timeout_ms / 1000.0
    expected: list[str] = list(selection) if selection != "all" else list(cfg.tests or [])

    try:
        proc = subprocess.Popen(
            argv,
            cwd=workdir,
            stdout=subprocess.PIPE,
            stderr=subprocess.PIPE,
            text=True,
        )
    except FileNotFoundError as exc:
        raise SubjectConfigError(f"test command not found: {exc.filename}") from None

    lines: queue.Queue = queue.Queue()
    _EOF = object()

    def pump() -> None:
        assert proc.stdout is not None
        for line in proc.stdout:
            lines.put(line)
        lines.put(_EOF)

    stderr_chunks: list[str] = []

    def drain_stderr() -> None:
        assert proc.stderr is not None
        stderr_chunks.append(proc.stderr.read())

    threading.Thread(target=pump, daemon=True).start()
    threading.Thread(target=drain_stderr, daemon=True).start()

    reports: list[TestReport] = []
    lineno = 0
    timed_out = False
    try:
        while True:
            try:
                item = lines.get(timeout=per_test_s)
            except queue.Empty:
                timed_out = True
                proc.kill()
                break
            if item is _EOF:
                break
            lineno += 1
            if not item.strip():
                continue
            reports.append(report_from_json(item, lineno))
    except ProtocolError:
        proc.kill()
        raise
    finally:
        proc.wait()

    reported = {r.test_id for r in reports}
    missing = [t for t in expected if t not in reported]
    if timed_out and missing:
        reports.append(TestReport(missing[0], "timeout", runtime_ms=cfg.per_test_timeout_ms))
        reports.extend(TestReport(t, "crash") for t in missing[1:])
    elif missing and proc.returncode != 0:
        reports.extend(TestReport(t, "crash") for t in missing)
    elif missing:
        # Shim exited cleanly without reporting everything it was asked to run.
        raise ProtocolError(
            f"test command exited 0 but did not report {missing}; stderr: {stderr_chunks and stderr_chunks[0][-500:]}"
        )
    if not reports:
        raise ProtocolError(
            f"test command produced no reports (exit {proc.returncode}); "
            f"stderr: {stderr_chunks and stderr_chunks[0][-500:]}"
        )
    return reports


def validate_candidate(text: str, syntax: SubjectSyntax | None = None) -> bool:
    """Default candidate validity: non-empty and delimiter/quote balanced."""
    return (syntax or SubjectSyntax()).validate_candidate(text)
