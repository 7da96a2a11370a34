"""Raw infill sequence providers.

Sequences come from one of three places: a live HTTP infill endpoint speaking
a {prefix, suffix, sampling} request / {choices: [...]} response shape, the
redundancy provider that harvests statements already present in the file, or
a fixtures file mapping statement locations to canned sequences. The offline
providers are deterministic; the endpoint is retried with backoff and its
failures are survivable (the candidate space just ends up smaller).
"""

from __future__ import annotations

import json
import logging
import os
import threading
import time
from dataclasses import dataclass
from pathlib import Path

import requests

from .candidates import tokenize
from .core import SourceSnapshot
from .localization import SuspiciousStatement
from .prompts import PromptBundle
from .subject import DEFAULT_COMMENT_PREFIXES, segment_statements

log = logging.getLogger(__name__)

TERMINAL_FINISH_REASONS = {"stop", "eos", "endofmask", "end_of_mask", "<|endofmask|>"}


class ProviderError(RuntimeError):
    """A sequence provider could not produce output."""


@dataclass(frozen=True)
class SamplingParams:
    top_p: float = 0.9
    top_k: int = 50
    temperature: float = 1.0
    num_return_sequences: int = 10
    max_new_tokens: int = 100

    def __post_init__(self) -> None:
        if not 0 < self.top_p <= 1:
            raise ValueError("top_p must be in (0, 1]")
        if not 0 <= self.temperature <= 1:
            raise ValueError("temperature must be in [0, 1]")
        if self.num_return_sequences < 1 or self.max_new_tokens < 1 or self.top_k < 1:
            raise ValueError("counts must be >= 1")


@dataclass(frozen=True)
class RawSequence:
    text: str
    provider: str  # "endpoint" | "redundancy" | "fixture"
    terminated: bool


@dataclass
class EndpointConfig:
    base_url: str
    auth_env: str | None = None
    timeout_s: float = 60.0
    retries: int = 3
    backoff_s: float = 0.5
    max_in_flight: int = 4

    def __post_init__(self) -> None:
        self._gate = threading.Semaphore(self.max_in_flight)

    def headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        if self.auth_env:
            value = os.environ.get(self.auth_env)
            if value:
                headers["Authorization"] = value
        return headers


def _post_with_retries(endpoint: EndpointConfig, payload: dict, token_count: int) -> dict:
    last_error: Exception | None = None
    for attempt in range(endpoint.retries):
        if attempt:
            time.sleep(endpoint.backoff_s * (2 ** (attempt - 1)))
        try:
            with endpoint._gate:
                response = requests.post(
                    endpoint.base_url,
                    json=payload,
                    headers=endpoint.headers(),
                    timeout=endpoint.timeout_s,
                )
        except requests.RequestException as exc:
            last_error = exc
            continue
        if response.status_code == 413 or (
            response.status_code == 400 and "token" in response.text.lower()
        ):
            raise ProviderError(
                f"endpoint rejected prompt as over-length (prompt has {token_count} "
                f"approx tokens): {response.text[:200]}"
            )
        if response.status_code >= 400:
            last_error = ProviderError(f"HTTP {response.status_code}: {response.text[:200]}")
            continue
        try:
            return response.json()
        except json.JSONDecodeError as exc:
            last_error = ProviderError(f"endpoint returned non-JSON body: {exc}")
            continue
    raise ProviderError(f"endpoint failed after {endpoint.retries} attempts: {last_error}")


def request_infill(
    bundle: PromptBundle,
    sampling: SamplingParams,
    endpoint: EndpointConfig,
    total: int | None = None,
) -> list[RawSequence]:
    """Fetch infill sequences for a prompt, batching calls until `total`."""
    wanted = total if total is not None else sampling.num_return_sequences
    prefix, suffix = bundle.split_at_fill()
    sequences: list[RawSequence] = []
    while len(sequences) < wanted:
        batch = min(sampling.num_return_sequences, wanted - len(sequences))
        payload = {
            "prefix": prefix,
            "suffix": suffix,
            "top_p": sampling.top_p,
            "top_k": sampling.top_k,
            "temperature": sampling.temperature,
            "num_return_sequences": batch,
            "max_new_tokens": sampling.max_new_tokens,
        }
        body = _post_with_retries(endpoint, payload, bundle.token_count)
        choices = body.get("choices")
        if not isinstance(choices, list):
            raise ProviderError(f"endpoint response missing 'choices': {str(body)[:200]}")
        if not choices:
            break  # endpoint has nothing more to offer
        for choice in choices[:batch]:
            sequences.append(
                RawSequence(
                    text=str(choice.get("text", "")),
                    provider="endpoint",
                    terminated=str(choice.get("finish_reason", "")) in TERMINAL_FINISH_REASONS,
                )
            )
    return sequences


def redundancy_sequences(
    lbs: SuspiciousStatement,
    snapshot: SourceSnapshot,
    limit: int,
    comment_prefixes: tuple[str, ...] = DEFAULT_COMMENT_PREFIXES,
) -> list[RawSequence]:
    """Harvest same-file statements, most-token-shared with the region first."""
    path = lbs.location.file
    if path not in snapshot.files:
        raise ProviderError(f"snapshot has no file {path!r}")
    text = snapshot.files[path]
    lines = text.splitlines()
    region_lo, region_hi = lbs.enclosing_region
    region_tokens = set(tokenize("\n".join(lines[region_lo - 1 : region_hi])))

    ranked: list[tuple[int, int, str]] = []
    for loc in segment_statements(text, path, comment_prefixes):
        if loc == lbs.location:
            continue
        stmt_text = "\n".join(lines[loc.line_start - 1 : loc.line_end])
        shared = len(set(tokenize(stmt_text)) & region_tokens)
        ranked.append((-shared, loc.line_start, stmt_text))
    ranked.sort()
    return [RawSequence(text=t, provider="redundancy", terminated=True) for _, _, t in ranked[:limit]]


def fixture_sequences(
    lbs: SuspiciousStatement,
    fixtures_file: Path,
    mode: str,
) -> list[RawSequence]:
    """Sequences listed for this statement's location in a fixtures file.

    The file maps "path:start-end" to {"replace": [...], "insert": [...]}
    with plain-string sequence entries. No entry means an empty sequence
    list, not an error.
    """
    try:
        with open(fixtures_file) as fh:
            table = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ProviderError(f"cannot read fixtures file {fixtures_file}: {exc}") from None
    if not isinstance(table, dict):
        raise ProviderError(f"fixtures file {fixtures_file} must hold a JSON object")
    entry = table.get(str(lbs.location), {})
    raw = entry.get(mode, [])
    sequences: list[RawSequence] = []
    for item in raw:
        if not isinstance(item, str):
            raise ProviderError(f"bad fixture entry for {lbs.location}: {item!r}")
        sequences.append(RawSequence(item, "fixture", True))
    return sequences
