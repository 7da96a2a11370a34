#!/usr/bin/env python3
"""Build the committed corpus of small buggy subjects.

Writes each subject's source, NDJSON shim and config, then generates fixture
candidate sets: for every selected suspicious statement, both modes get 50+
distractor sequences, and the statements needing a fix additionally carry the
oracle edit at a deterministic position. Every candidate in the pipeline's
final image is verified by actually running the subject's suite, so exactly
the declared oracles pass; accidental semantic equivalents get dropped.

Run from the repository root:  python3 tools/make_corpus.py
"""

from __future__ import annotations

import json
import shutil
import sys
import tempfile
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from evopatch.candidates import (
    dedupe_and_prune,
    normalize_statement,
    sequences_to_candidates,
)
from evopatch.core import SourceSnapshot
from evopatch.localization import ingest_spectrum, select_lbs
from evopatch.patches import Edit, apply_edits
from evopatch.providers import RawSequence
from evopatch.subject import (
    load_config,
    load_snapshot,
    materialize,
    run_tests,
    segment_snapshot,
    syntax_for,
)

CORPUS = Path(__file__).resolve().parents[1] / "tests" / "corpus"

CONSTS = ["0.0", "1.0", "2.0", "4.5", "7.0", "9.0", "11.0", "0.25", "100.0",
          "-1.0", "13.0", "2.5", "6.0", "8.0", "-2.0", "19.0", "42.0", "256.0"]


@dataclass
class Oracle:
    match: str            # stripped text of the statement to fix
    mode: str             # "replace" | "insert" | "delete"
    text: str | None      # candidate text; None for delete


@dataclass
class Spec:
    name: str
    main_src: str
    shim_tests: str       # body of the shim between imports and TESTS
    tests: list[str]
    oracles: list[Oracle]
    names: list[str]      # in-scope identifiers used to build distractors
    expected_lbs: int | None = None


def shim_file(spec: Spec) -> str:
    pairs = ", ".join(f'("{t}", {t})' for t in spec.tests)
    return f'''import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[2] / "_harness"))
import harness

{spec.shim_tests}

TESTS = [{pairs}]

if __name__ == "__main__":
    harness.run(TESTS)
'''


def subject_config(spec: Spec) -> str:
    return json.dumps(
        {
            "test_command": "python3 {root}/tests/shim.py {tests}",
            "source_globs": ["src/**/*.py"],
            "per_test_timeout_ms": 5000,
            "tests": spec.tests,
        },
        indent=2,
    ) + "\n"


def distractor_pool(indent: str, names: list[str]) -> list[str]:
    pool = []
    for const in CONSTS:
        pool.append(f"{indent}return {const}")
    for name in names[:3]:
        for const in CONSTS[:10]:
            pool.append(f"{indent}{name} = {const}")
    for name in names[:2]:
        for op in ("+", "-", "*"):
            for const in ("1.0", "2.0", "3.0", "0.25", "4.5", "7.0"):
                pool.append(f"{indent}{name} = {name} {op} {const}")
    # two-statement sequences exercise the block-splitting path
    pool.append(f"{indent}extra = 1.0\n{indent}return extra")
    pool.append(f"{indent}extra = -1.0\n{indent}return extra * 2.0")
    return pool


def run_suite(snapshot: SourceSnapshot, cfg) -> bool:
    workdir = Path(tempfile.mkdtemp(prefix="gen-"))
    try:
        materialize(snapshot, workdir)
        reports = run_tests(workdir, "all", cfg)
        return all(r.verdict == "pass" for r in reports)
    finally:
        shutil.rmtree(workdir, ignore_errors=True)


def edit_for(candidate_text: str, mode: str, location) -> Edit:
    kind = "replace" if mode == "replace" else "insert_before"
    return Edit(location, kind, candidate_text)


def build_subject(spec: Spec) -> None:
    root = CORPUS / spec.name
    if root.exists():
        shutil.rmtree(root)
    (root / "src").mkdir(parents=True)
    (root / "tests").mkdir()
    (root / "src" / "main.py").write_text(spec.main_src)
    (root / "tests" / "shim.py").write_text(shim_file(spec))
    (root / "subject.json").write_text(subject_config(spec))

    cfg = load_config(root)
    snapshot = load_snapshot(cfg)
    workdir = Path(tempfile.mkdtemp(prefix="gen-base-"))
    try:
        materialize(snapshot, workdir)
        baseline = run_tests(workdir, "all", cfg)
    finally:
        shutil.rmtree(workdir, ignore_errors=True)
    failing = [r.test_id for r in baseline if r.verdict != "pass"]
    assert failing, f"{spec.name}: baseline suite must fail"
    spectrum = ingest_spectrum(baseline, segment_snapshot(snapshot, cfg))
    lbs = select_lbs(spectrum, 0.1, 60, snapshot)
    assert lbs, f"{spec.name}: no suspicious statements"
    if spec.expected_lbs is not None:
        assert len(lbs) == spec.expected_lbs, (
            f"{spec.name}: expected {spec.expected_lbs} LBS, got {len(lbs)}: "
            f"{[str(s.location) for s in lbs]}"
        )

    # Map declared oracles onto selected statements.
    oracle_at: dict[tuple[str, str], str | None] = {}
    for oracle in spec.oracles:
        matches = [s for s in lbs if s.original_text.strip() == oracle.match]
        assert len(matches) == 1, (
            f"{spec.name}: oracle match {oracle.match!r} hit {len(matches)} LBS"
        )
        oracle_at[(str(matches[0].location), oracle.mode)] = oracle.text

    # The full oracle edit set must make the suite pass.
    oracle_edits = []
    for oracle in spec.oracles:
        target = next(s for s in lbs if s.original_text.strip() == oracle.match)
        if oracle.mode == "delete":
            oracle_edits.append(Edit(target.location, "delete"))
        else:
            oracle_edits.append(edit_for(oracle.text, oracle.mode, target.location))
    assert run_suite(apply_edits(snapshot, oracle_edits), cfg), (
        f"{spec.name}: oracle edit set does not pass the suite"
    )
    if len(oracle_edits) > 1:
        for single in oracle_edits:
            assert not run_suite(apply_edits(snapshot, [single]), cfg), (
                f"{spec.name}: {single} passes alone; bug is not coordinated"
            )

    syntax = syntax_for(cfg)
    fixtures: dict[str, dict[str, list[str]]] = {}
    with ThreadPoolExecutor(max_workers=8) as pool:
        for stmt in lbs:
            key = str(stmt.location)
            indent = stmt.original_text[: len(stmt.original_text) - len(stmt.original_text.lstrip())]
            fixtures[key] = {}
            for mode in ("replace", "insert"):
                oracle_text = oracle_at.get((key, mode))
                raw_pool = distractor_pool(indent, spec.names)
                if oracle_text is not None:
                    assert normalize_statement(oracle_text) not in {
                        normalize_statement(d) for d in raw_pool
                    }, f"{spec.name}: oracle collides with a distractor"

                # Verify the pipeline image of each raw sequence: no candidate
                # except the oracle may pass the full suite as a single edit.
                def image(texts):
                    seqs = [RawSequence(t, "fixture", True) for t in texts]
                    cands = sequences_to_candidates(seqs, syntax)
                    original = stmt.original_text if mode == "replace" else None
                    return dedupe_and_prune(cands, original)

                cands = image(raw_pool)
                checks = list(
                    pool.map(
                        lambda c: run_suite(
                            apply_edits(snapshot, [edit_for(c.text, mode, stmt.location)]), cfg
                        ),
                        cands,
                    )
                )
                passing = {c.text for c, ok in zip(cands, checks) if ok}
                survivors = [
                    text
                    for text in raw_pool
                    if not any(part in passing for part in [text] + text.split("\n"))
                ]
                survivors = survivors[:54]
                final = image(survivors)
                assert len(final) >= 50, (
                    f"{spec.name} {key} {mode}: only {len(final)} distractors survive"
                )
                if oracle_text is not None:
                    slot = zlib.crc32(f"{key}:{mode}".encode()) % (len(survivors) + 1)
                    survivors.insert(slot, oracle_text)
                fixtures[key][mode] = survivors

    (root / "fixtures.json").write_text(json.dumps(fixtures, indent=2, sort_keys=True) + "\n")
    n_multi = len(spec.oracles)
    print(
        f"{spec.name}: {len(lbs)} LBS, {len(failing)} failing tests, "
        f"{n_multi} oracle edit(s) verified"
    )


# ---------------------------------------------------------------------------
# subject definitions
# ---------------------------------------------------------------------------

SUBJECTS = [
    Spec(
        name="s01_midpoint",
        main_src='''def midpoint(a, b):
    total = a + b
    return total // 3


def span(a, b):
    return abs(b - a)
''',
        shim_tests='''def t_mid_small(m, rec):
    rec.close("mid_small", 3.0, m.midpoint(2, 4), 0.001)


def t_mid_big(m, rec):
    rec.close("mid_big", 15.0, m.midpoint(10, 20), 0.001)


def t_mid_zero(m, rec):
    rec.close("mid_zero", 0.0, m.midpoint(0, 0), 0.001)


def t_span(m, rec):
    rec.close("span", 7.0, m.span(3, 10), 0.001)''',
        tests=["t_mid_small", "t_mid_big", "t_mid_zero", "t_span"],
        oracles=[Oracle("return total // 3", "replace", "    return total // 2")],
        names=["total", "a", "b"],
        expected_lbs=2,
    ),
    Spec(
        name="s02_clamp",
        main_src='''def clamp(value, low, high):
    if value < low:
        return low
    if value > high:
        return low
    return value
''',
        shim_tests='''def t_above(m, rec):
    rec.close("above", 5.0, m.clamp(9.0, 0.0, 5.0), 0.001)


def t_above_far(m, rec):
    rec.check("above_far", m.clamp(99.0, 0.0, 5.0) == 5.0)


def t_below(m, rec):
    rec.close("below", 0.0, m.clamp(-3.0, 0.0, 5.0), 0.001)


def t_inside(m, rec):
    rec.close("inside", 2.0, m.clamp(2.0, 0.0, 5.0), 0.001)


def t_edge(m, rec):
    rec.close("edge", 5.0, m.clamp(5.0, 0.0, 5.0), 0.001)''',
        tests=["t_above", "t_above_far", "t_below", "t_inside", "t_edge"],
        oracles=[Oracle("return low", "replace", "        return high")],
        names=["value", "low", "high"],
        expected_lbs=3,
    ),
    Spec(
        name="s03_balance",
        main_src='''def balance(principal, rate):
    factor = 1.0 + rate / 50.0
    return principal * factor


def describe(principal):
    return float(len(str(principal)))
''',
        shim_tests='''def t_rate5(m, rec):
    rec.close("rate5", 105.0, m.balance(100.0, 5.0), 0.01)


def t_rate10(m, rec):
    rec.close("rate10", 110.0, m.balance(100.0, 10.0), 0.01)


def t_zero_rate(m, rec):
    rec.close("zero_rate", 100.0, m.balance(100.0, 0.0), 0.01)


def t_desc(m, rec):
    rec.close("desc", 3.0, m.describe(100), 0.001)''',
        tests=["t_rate5", "t_rate10", "t_zero_rate", "t_desc"],
        oracles=[Oracle("factor = 1.0 + rate / 50.0", "replace", "    factor = 1.0 + rate / 100.0")],
        names=["factor", "principal", "rate"],
        expected_lbs=2,
    ),
    Spec(
        name="s04_celsius",
        main_src='''def to_fahrenheit(celsius):
    scaled = celsius * 9.0 / 5.0
    return scaled + 35.0


def to_celsius(fahrenheit):
    shifted = fahrenheit - 32.0
    return shifted * 5.0 / 9.0
''',
        shim_tests='''def t_boil(m, rec):
    rec.close("boil", 212.0, m.to_fahrenheit(100.0), 0.01)


def t_freeze(m, rec):
    rec.close("freeze", 32.0, m.to_fahrenheit(0.0), 0.01)


def t_minus40(m, rec):
    rec.close("minus40", -40.0, m.to_fahrenheit(-40.0), 0.01)


def t_back_boil(m, rec):
    rec.close("back_boil", 100.0, m.to_celsius(212.0), 0.01)


def t_back_freeze(m, rec):
    rec.close("back_freeze", 0.0, m.to_celsius(32.0), 0.01)''',
        tests=["t_boil", "t_freeze", "t_minus40", "t_back_boil", "t_back_freeze"],
        oracles=[Oracle("return scaled + 35.0", "replace", "    return scaled + 32.0")],
        names=["scaled", "celsius"],
        expected_lbs=2,
    ),
    Spec(
        name="s05_window",
        main_src='''def window_average(values, size):
    window = values[-size:]
    total = sum(window)
    return total / (size + 1)


def window_total(values, size):
    return float(sum(values[-size:]))
''',
        shim_tests='''def t_avg3(m, rec):
    rec.close("avg3", 5.0, m.window_average([1.0, 2.0, 3.0, 4.0, 5.0, 6.0], 3), 0.001)


def t_avg2(m, rec):
    rec.close("avg2", 3.0, m.window_average([2.0, 4.0], 2), 0.001)


def t_avg1(m, rec):
    rec.close("avg1", 7.0, m.window_average([7.0], 1), 0.001)


def t_tot(m, rec):
    rec.close("tot", 5.0, m.window_total([1.0, 2.0, 3.0], 2), 0.001)''',
        tests=["t_avg3", "t_avg2", "t_avg1", "t_tot"],
        oracles=[Oracle("return total / (size + 1)", "replace", "    return total / size")],
        names=["total", "size", "window"],
        expected_lbs=3,
    ),
    Spec(
        name="s06_ratio",
        main_src='''def safe_ratio(num, den):
    value = num / den
    return round(value, 3)


def twice_ratio(num, den):
    return 2.0 * num / max(den, 1.0)
''',
        shim_tests='''def t_zero_den(m, rec):
    try:
        rec.close("zero_den", 0.0, m.safe_ratio(5.0, 0.0), 0.001)
    except ZeroDivisionError:
        rec.check("zero_den_raises", False)


def t_half(m, rec):
    rec.close("half", 0.5, m.safe_ratio(1.0, 2.0), 0.001)


def t_third(m, rec):
    rec.close("third", 0.333, m.safe_ratio(1.0, 3.0), 0.001)


def t_twice(m, rec):
    rec.close("twice", 4.0, m.twice_ratio(2.0, 1.0), 0.001)''',
        tests=["t_zero_den", "t_half", "t_third", "t_twice"],
        oracles=[
            Oracle("value = num / den", "insert", "    if den == 0:\n        return 0.0")
        ],
        names=["value", "num", "den"],
        expected_lbs=1,
    ),
    Spec(
        name="s07_cart",
        main_src='''def cart_total(prices):
    total = 0.0
    for price in prices:
        total = total + price
    total = total + 5.0
    return total


def item_count(prices):
    return float(len(prices))
''',
        shim_tests='''def t_pair(m, rec):
    rec.close("pair", 5.0, m.cart_total([2.0, 3.0]), 0.001)


def t_empty(m, rec):
    rec.close("empty", 0.0, m.cart_total([]), 0.001)


def t_single(m, rec):
    rec.close("single", 7.0, m.cart_total([7.0]), 0.001)


def t_count(m, rec):
    rec.close("count", 2.0, m.item_count([1.0, 2.0]), 0.001)''',
        tests=["t_pair", "t_empty", "t_single", "t_count"],
        oracles=[Oracle("total = total + 5.0", "delete", None)],
        names=["total", "price", "prices"],
        expected_lbs=5,
    ),
    Spec(
        name="s08_bank",
        main_src='''def deposit(balance, amount):
    return balance - amount


def fee_after(balance, fee):
    return balance - 2.0 * fee
''',
        shim_tests='''def t_dep(m, rec):
    rec.close("dep", 1.5, m.deposit(1.0, 0.5))


def t_fee(m, rec):
    rec.close("fee", 2.0, m.fee_after(3.0, 1.0))


def t_combo(m, rec):
    rec.close("combo", 1.5, m.fee_after(m.deposit(2.0, 0.5), 1.0))


def t_dep_zero(m, rec):
    rec.close("dep_zero", 4.0, m.deposit(4.0, 0.0))


def t_fee_zero(m, rec):
    rec.close("fee_zero", 4.0, m.fee_after(4.0, 0.0))''',
        tests=["t_dep", "t_fee", "t_combo", "t_dep_zero", "t_fee_zero"],
        oracles=[
            Oracle("return balance - amount", "replace", "    return balance + amount"),
            Oracle("return balance - 2.0 * fee", "replace", "    return balance - fee"),
        ],
        names=["balance", "amount", "fee"],
        expected_lbs=2,
    ),
    Spec(
        name="s09_stats",
        main_src='''def mean(values):
    return sum(values) / (len(values) - 1)


def spread(values):
    return max(values) + min(values)


def count_values(values):
    return float(len(values))
''',
        shim_tests='''def t_mean2(m, rec):
    rec.close("mean2", 2.0, m.mean([1.0, 3.0]))


def t_mean3(m, rec):
    rec.close("mean3", 4.0, m.mean([2.0, 4.0, 6.0]))


def t_spread(m, rec):
    rec.close("spread", 3.0, m.spread([1.0, 4.0]))


def t_combo(m, rec):
    rec.close("combo", 1.0, m.spread([m.mean([1.0, 1.0]), 2.0]))


def t_count(m, rec):
    rec.close("count", 3.0, m.count_values([1.0, 1.0, 1.0]))''',
        tests=["t_mean2", "t_mean3", "t_spread", "t_combo", "t_count"],
        oracles=[
            Oracle(
                "return sum(values) / (len(values) - 1)",
                "replace",
                "    return sum(values) / len(values)",
            ),
            Oracle(
                "return max(values) + min(values)",
                "replace",
                "    return max(values) - min(values)",
            ),
        ],
        names=["values", "total", "count"],
        expected_lbs=2,
    ),
    Spec(
        name="s10_geometry",
        main_src='''def area(width, height):
    return width * height * 0.5


def perimeter(width, height):
    return 2.0 * width + height


def diagonal_sq(width, height):
    return width * width - height * height


def scale(width):
    return 2.0 * width
''',
        shim_tests='''def t_area(m, rec):
    rec.close("area", 6.0, m.area(2.0, 3.0))


def t_perim(m, rec):
    rec.close("perim", 8.0, m.perimeter(1.0, 3.0))


def t_diag(m, rec):
    rec.close("diag", 5.0, m.diagonal_sq(2.0, 1.0))


def t_all(m, rec):
    rec.close("all", 7.0, m.area(1.0, 1.0) + m.perimeter(1.0, 1.0) + m.diagonal_sq(1.0, 1.0))


def t_scale(m, rec):
    rec.close("scale", 6.0, m.scale(3.0))''',
        tests=["t_area", "t_perim", "t_diag", "t_all", "t_scale"],
        oracles=[
            Oracle("return width * height * 0.5", "replace", "    return width * height"),
            Oracle("return 2.0 * width + height", "replace", "    return 2.0 * (width + height)"),
            Oracle(
                "return width * width - height * height",
                "replace",
                "    return width * width + height * height",
            ),
        ],
        names=["width", "height"],
        expected_lbs=3,
    ),
]


def main() -> None:
    for spec in SUBJECTS:
        build_subject(spec)
    print(f"corpus ready under {CORPUS}")


if __name__ == "__main__":
    main()
