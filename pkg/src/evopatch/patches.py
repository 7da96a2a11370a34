"""Patch genomes and their phenotype: concrete line edits on a source tree.

A genome holds four parallel vectors per likely-buggy statement: an enable
bit, an operation selector (1=delete, 2=replace, 3=insert-before) and two
candidate indices. Decoding yields line-granularity edits; application and
diff rendering stay purely functional over immutable snapshots.
"""

from __future__ import annotations

import difflib
import re
from dataclasses import dataclass
from typing import Sequence

from .core import SourceSnapshot, StatementLocation
from .localization import SuspiciousStatement

OP_DELETE = 1
OP_REPLACE = 2
OP_INSERT = 3


class EditError(ValueError):
    """An edit does not fit the snapshot it is applied to."""


@dataclass(frozen=True)
class PatchGenome:
    b: tuple[int, ...]
    u: tuple[int, ...]
    p: tuple[int, ...]
    q: tuple[int, ...]

    def __post_init__(self) -> None:
        n = len(self.b)
        if not (len(self.u) == len(self.p) == len(self.q) == n):
            raise ValueError("genome vectors must share one length")
        if any(bit not in (0, 1) for bit in self.b):
            raise ValueError("b must be a bit vector")
        if any(op not in (OP_DELETE, OP_REPLACE, OP_INSERT) for op in self.u):
            raise ValueError("u entries must be in {1,2,3}")

    def __len__(self) -> int:
        return len(self.b)


@dataclass(frozen=True)
class Edit:
    location: StatementLocation
    kind: str  # "delete" | "replace" | "insert_before"
    text: str = ""

    def __post_init__(self) -> None:
        if self.kind not in ("delete", "replace", "insert_before"):
            raise ValueError(f"unknown edit kind {self.kind!r}")
        if self.kind != "delete" and not self.text:
            raise ValueError(f"{self.kind} edit needs text")


def decode_genome(genome: PatchGenome, lbs: Sequence[SuspiciousStatement]) -> list[Edit]:
    """Decode enabled genome positions into concrete edits.

    An enabled position whose selected operation has no candidates is inert:
    it contributes no edit and does not count toward the edit objective.
    """
    if len(genome) != len(lbs):
        raise ValueError(f"genome length {len(genome)} != number of LBSs {len(lbs)}")
    edits: list[Edit] = []
    for j, stmt in enumerate(lbs):
        if not genome.b[j]:
            continue
        op = genome.u[j]
        if op == OP_DELETE:
            edits.append(Edit(stmt.location, "delete"))
        elif op == OP_REPLACE:
            cands = stmt.replacement_candidates
            if not cands:
                continue
            if not 0 <= genome.p[j] < len(cands):
                raise ValueError(f"p[{j}]={genome.p[j]} out of range for {len(cands)} candidates")
            edits.append(Edit(stmt.location, "replace", cands[genome.p[j]].text))
        else:
            cands = stmt.insertion_candidates
            if not cands:
                continue
            if not 0 <= genome.q[j] < len(cands):
                raise ValueError(f"q[{j}]={genome.q[j]} out of range for {len(cands)} candidates")
            edits.append(Edit(stmt.location, "insert_before", cands[genome.q[j]].text))
    return edits


def apply_edits(snapshot: SourceSnapshot, edits: Sequence[Edit]) -> SourceSnapshot:
    """Apply disjoint edits, returning a new snapshot.

    Within each file, edits run in descending line order so earlier spans are
    undisturbed by splices below them.
    """
    by_file: dict[str, list[Edit]] = {}
    for edit in edits:
        by_file.setdefault(edit.location.file, []).append(edit)

    updates: dict[str, str] = {}
    for path, file_edits in by_file.items():
        if path not in snapshot.files:
            raise EditError(f"no such file in snapshot: {path!r}")
        spans = sorted((e.location.line_start, e.location.line_end) for e in file_edits)
        for (_, prev_end), (next_start, _) in zip(spans, spans[1:]):
            if next_start <= prev_end:
                raise EditError(f"overlapping edits in {path!r}")

        text = snapshot.files[path]
        lines = text.splitlines()
        trailing_newline = text.endswith("\n")
        for edit in sorted(file_edits, key=lambda e: e.location.line_start, reverse=True):
            start, end = edit.location.line_start, edit.location.line_end
            if end > len(lines):
                raise EditError(f"edit at {path}:{start}-{end} out of bounds ({len(lines)} lines)")
            if edit.kind == "delete":
                del lines[start - 1 : end]
            elif edit.kind == "replace":
                lines[start - 1 : end] = edit.text.splitlines()
            else:
                lines[start - 1 : start - 1] = edit.text.splitlines()
        updates[path] = "\n".join(lines) + ("\n" if trailing_newline else "")
    return snapshot.with_files(updates)


def render_diff(before: SourceSnapshot, after: SourceSnapshot) -> str:
    """Unified diff between two snapshots, files in path order, 3 context lines."""
    chunks: list[str] = []
    for path in sorted(set(before.files) | set(after.files)):
        old = before.files.get(path, "")
        new = after.files.get(path, "")
        if old == new:
            continue
        diff = difflib.unified_diff(
            old.splitlines(keepends=True),
            new.splitlines(keepends=True),
            fromfile=f"a/{path}",
            tofile=f"b/{path}",
            n=3,
        )
        chunks.extend(diff)
    return "".join(chunks)


_HUNK_RE = re.compile(r"@@ -(\d+)(?:,(\d+))? \+(\d+)(?:,(\d+))? @@")


def apply_diff(snapshot: SourceSnapshot, diff_text: str) -> SourceSnapshot:
    """Apply a unified diff produced by render_diff; empty diff is identity."""
    if not diff_text.strip():
        return snapshot
    updates: dict[str, str] = {}
    lines = diff_text.splitlines(keepends=True)
    i = 0
    while i < len(lines):
        if not lines[i].startswith("--- "):
            i += 1
            continue
        if i + 1 >= len(lines) or not lines[i + 1].startswith("+++ "):
            raise EditError(f"malformed diff header at line {i + 1}")
        path = lines[i + 1][4:].split("\t")[0].strip()
        if path.startswith("b/"):
            path = path[2:]
        if path not in snapshot.files:
            raise EditError(f"diff targets unknown file {path!r}")
        src = snapshot.files[path].splitlines(keepends=True)
        out: list[str] = []
        cursor = 0  # index into src of the next unconsumed line
        i += 2
        while i < len(lines) and lines[i].startswith("@@"):
            match = _HUNK_RE.match(lines[i])
            if not match:
                raise EditError(f"malformed hunk header: {lines[i].strip()!r}")
            old_start = int(match.group(1))
            old_count = int(match.group(2) or "1")
            new_count = int(match.group(4) or "1")
            hunk_base = old_start - 1 if old_count else old_start
            out.extend(src[cursor:hunk_base])
            cursor = hunk_base
            i += 1
            while old_count > 0 or new_count > 0:
                if i >= len(lines):
                    raise EditError(f"truncated hunk for {path}")
                tag, body = lines[i][:1], lines[i][1:]
                if tag == " ":
                    if cursor >= len(src) or src[cursor] != body:
                        raise EditError(f"context mismatch in {path} at source line {cursor + 1}")
                    out.append(body)
                    cursor += 1
                    old_count -= 1
                    new_count -= 1
                elif tag == "-":
                    if cursor >= len(src) or src[cursor] != body:
                        raise EditError(f"removed line mismatch in {path} at source line {cursor + 1}")
                    cursor += 1
                    old_count -= 1
                elif tag == "+":
                    out.append(body)
                    new_count -= 1
                elif tag == "\\":
                    pass  # "\ No newline at end of file"
                else:
                    raise EditError(f"unexpected diff line: {lines[i].rstrip()!r}")
                i += 1
            if i < len(lines) and lines[i].startswith("\\"):
                i += 1
        out.extend(src[cursor:])
        updates[path] = "".join(out)
    return snapshot.with_files(updates)
