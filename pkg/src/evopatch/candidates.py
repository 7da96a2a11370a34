"""Candidate statement construction.

Turns raw infill sequences into validated candidate statements: drops
unterminated or syntactically broken outputs, keeps multi-statement outputs
both as a block and as individual statements, and deduplicates by a
token-canonical form so formatting differences never produce duplicates.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Sequence

_TOKEN_RE = re.compile(r"\w+|[^\w\s]")

ORIGINS = ("endpoint", "redundancy", "fixture", "split_from_block")


def tokenize(text: str) -> list[str]:
    """Split into word runs and individual punctuation characters."""
    return _TOKEN_RE.findall(text)


def normalize_statement(text: str) -> str:
    """Token-canonical form: tokens joined by single spaces.

    Collapses all whitespace, including spacing around punctuation, so that
    "x=1;" and "x = 1;" normalize identically.
    """
    return " ".join(tokenize(text))


@dataclass(frozen=True)
class CandidateStatement:
    """One statement (or block) eligible to replace or precede an LBS."""

    text: str
    origin: str
    normalized: str

    @staticmethod
    def make(text: str, origin: str) -> "CandidateStatement":
        if not text:
            raise ValueError("candidate text must be non-empty")
        if origin not in ORIGINS:
            raise ValueError(f"unknown origin {origin!r}")
        return CandidateStatement(text=text, origin=origin, normalized=normalize_statement(text))


def sequences_to_candidates(seqs: Iterable, adapter) -> list[CandidateStatement]:
    """Convert raw sequences into candidate statements.

    `adapter` supplies `segment_candidate(text) -> list[str]` and
    `validate_candidate(text) -> bool`. Unterminated sequences are discarded;
    a sequence yielding two or more valid segments contributes the whole block
    plus each segment, a single-segment sequence contributes just the segment.
    """
    out: list[CandidateStatement] = []
    for seq in seqs:
        if not seq.terminated:
            continue
        segments = [s for s in adapter.segment_candidate(seq.text) if adapter.validate_candidate(s)]
        if not segments:
            continue
        if len(segments) == 1:
            out.append(CandidateStatement.make(segments[0], seq.provider))
        else:
            block = "\n".join(segments)
            out.append(CandidateStatement.make(block, seq.provider))
            out.extend(CandidateStatement.make(s, "split_from_block") for s in segments)
    return out


def dedupe_and_prune(
    cands: Sequence[CandidateStatement],
    original_text: str | None = None,
) -> list[CandidateStatement]:
    """Keep the first occurrence per normalized form, preserving input order.

    When `original_text` is given (replacement sets), candidates matching the
    original statement are removed as well; insertion sets pass None and keep
    them, since re-inserting an existing line can be a valid fix.
    """
    banned = {normalize_statement(original_text)} if original_text is not None else set()
    seen: set[str] = set()
    out: list[CandidateStatement] = []
    for cand in cands:
        if cand.normalized in banned or cand.normalized in seen:
            continue
        seen.add(cand.normalized)
        out.append(cand)
    return out


def merge_spaces(
    a: Sequence[CandidateStatement],
    b: Sequence[CandidateStatement],
) -> list[CandidateStatement]:
    """Union of two candidate spaces: a then b, re-deduplicated, origins kept."""
    return dedupe_and_prune(list(a) + list(b))
