"""Context-aware infill prompt construction.

A prompt shows the statement's enclosing region with the suspicious lines
masked by a fill token, preceded by a comment header cataloguing the callable
fields and methods of the file, and (for replacement prompts) a comment
quoting the line under suspicion. Prompts are trimmed around the fill line to
a token budget.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .core import SourceSnapshot
from .localization import SuspiciousStatement

DEFAULT_FILL_TOKEN = "<FILL_ME>"
DEFAULT_MAX_TOKENS = 1536
MODES = ("replace", "insert")

_TOKEN_RE = re.compile(r"\w+|[^\w\s]")


class PromptError(ValueError):
    """Prompt construction failed (token collision, impossible budget)."""


def approx_token_count(text: str) -> int:
    """Provider-agnostic token estimate: word runs plus punctuation characters."""
    return len(_TOKEN_RE.findall(text))


@dataclass(frozen=True)
class FileSymbols:
    """Callable surface of one source file, as supplied by the adapter."""

    fields: tuple[tuple[str, str], ...] = ()
    methods: tuple[tuple[str, str, tuple[str, ...]], ...] = ()


@dataclass(frozen=True)
class SymbolCatalog:
    by_file: dict[str, FileSymbols] = field(default_factory=dict)

    def for_file(self, path: str) -> FileSymbols:
        return self.by_file.get(path, FileSymbols())


def load_catalog(path: Path) -> SymbolCatalog:
    """Read the path-addressed symbol catalog JSON file."""
    with open(path) as fh:
        raw = json.load(fh)
    by_file: dict[str, FileSymbols] = {}
    for file_path, entry in raw.items():
        fields = []
        for type_name, field_name in entry.get("fields", []):
            if (type_name, field_name) not in fields:
                fields.append((type_name, field_name))
        methods = []
        for ret, name, params in entry.get("methods", []):
            item = (ret, name, tuple(params))
            if item not in methods:
                methods.append(item)
        by_file[file_path] = FileSymbols(tuple(fields), tuple(methods))
    return SymbolCatalog(by_file)


@dataclass(frozen=True)
class PromptBundle:
    mode: str
    text: str
    fill_token: str
    token_count: int
    truncated_before: bool
    truncated_after: bool

    def split_at_fill(self) -> tuple[str, str]:
        prefix, _, suffix = self.text.partition(self.fill_token)
        return prefix, suffix


def _header_lines(symbols: FileSymbols) -> list[str]:
    lines = [f"// field: {t} {n}" for t, n in symbols.fields]
    lines += [f"// method: {r} {n}({', '.join(p)})" for r, n, p in symbols.methods]
    return lines


def trim_context(
    text: str,
    fill_position: int,
    max_tokens: int,
    header: str = "",
) -> tuple[str, bool, bool]:
    """Trim `text` around the fill line to fit the token budget.

    The header is always kept and charged first. Body lines join alternately,
    one above then one below the fill line, until the next line would push
    the total past `max_tokens`; a direction with no lines left simply cedes
    its turn. Returns the trimmed text plus cut flags for each direction.
    """
    body = text.splitlines()
    if not 0 <= fill_position < len(body):
        raise PromptError(f"fill line {fill_position} outside text of {len(body)} lines")
    header_lines = header.splitlines() if header else []
    used = sum(approx_token_count(line) for line in header_lines)
    used += approx_token_count(body[fill_position])
    if used > max_tokens:
        raise PromptError(
            f"token budget {max_tokens} cannot even hold the fill line ({used} tokens)"
        )
    lo = hi = fill_position
    take_before = True
    while True:
        can_before = lo > 0
        can_after = hi < len(body) - 1
        if not can_before and not can_after:
            break
        if take_before and can_before or not can_after:
            candidate = body[lo - 1]
        else:
            candidate = body[hi + 1]
        cost = approx_token_count(candidate)
        if used + cost > max_tokens:
            break
        if take_before and can_before or not can_after:
            lo -= 1
        else:
            hi += 1
        used += cost
        take_before = not take_before
    trimmed = "\n".join(header_lines + body[lo : hi + 1])
    return trimmed, lo > 0, hi < len(body) - 1


def build_prompt(
    lbs: SuspiciousStatement,
    mode: str,
    catalog: SymbolCatalog,
    max_tokens: int = DEFAULT_MAX_TOKENS,
    snapshot: SourceSnapshot | None = None,
    fill_token: str = DEFAULT_FILL_TOKEN,
) -> PromptBundle:
    """Render the infill prompt for one suspicious statement.

    Replacement prompts mask the statement's lines with the fill token and
    quote the original line in a comment above the region; insertion prompts
    put the fill token on its own line directly above the untouched statement.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    if max_tokens < 64:
        raise ValueError("max_tokens must be >= 64")
    if snapshot is None or lbs.location.file not in snapshot.files:
        raise PromptError(f"snapshot with {lbs.location.file!r} required to build prompts")

    file_lines = snapshot.files[lbs.location.file].splitlines()
    region_start, region_end = lbs.enclosing_region
    region = file_lines[region_start - 1 : region_end]

    header = "\n".join(_header_lines(catalog.for_file(lbs.location.file)))
    if fill_token in header or any(fill_token in line for line in region):
        raise PromptError(f"fill token {fill_token!r} collides with source; choose another")

    span_lo = lbs.location.line_start - region_start  # indices into `region`
    span_hi = lbs.location.line_end - region_start
    indent = re.match(r"\s*", region[span_lo]).group(0)

    body: list[str] = []
    if mode == "replace":
        body.append("// buggy line: " + " ".join(lbs.original_text.splitlines()))
        body += region[:span_lo] + [indent + fill_token] + region[span_hi + 1 :]
        fill_position = 1 + span_lo
    else:
        body += region[:span_lo] + [indent + fill_token] + region[span_lo:]
        fill_position = span_lo

    text, cut_before, cut_after = trim_context(
        "\n".join(body), fill_position, max_tokens, header=header
    )
    return PromptBundle(
        mode=mode,
        text=text,
        fill_token=fill_token,
        token_count=approx_token_count(text),
        truncated_before=cut_before,
        truncated_after=cut_after,
    )
