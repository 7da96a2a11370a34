"""Command-line pipeline driver.

Stages mirror the repair workflow: `localize` ranks suspicious statements,
`prompts` renders infill prompts, `candidates` builds per-statement candidate
sets from a provider, `repair` runs the multiobjective search, `validate`
re-checks one diff against the full suite, and `bench` sweeps a corpus of
subjects collecting evaluation costs. Stage artifacts are self-contained, so
`candidates` followed by `repair` reproduces a fused `repair` run exactly.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import random
import shutil
import sys
import tempfile
import time
from dataclasses import dataclass, replace
from pathlib import Path

from .candidates import CandidateStatement, dedupe_and_prune, merge_spaces, sequences_to_candidates
from .core import SourceSnapshot
from .evolution import EvolutionConfig, RepairProblem, evolve
from .fitness import DEFAULT_W, EvaluationContext, SubjectEvaluator
from .localization import (
    CoverageSpectrum,
    SuspiciousStatement,
    ingest_spectrum,
    localization_report,
    select_lbs,
)
from .patches import apply_diff
from .prompts import (
    DEFAULT_FILL_TOKEN,
    DEFAULT_MAX_TOKENS,
    SymbolCatalog,
    build_prompt,
    load_catalog,
)
from .providers import (
    EndpointConfig,
    ProviderError,
    SamplingParams,
    fixture_sequences,
    redundancy_sequences,
    request_infill,
)
from .reports import build_report, write_report
from .subject import (
    SubjectConfig,
    SubjectConfigError,
    load_config,
    load_snapshot,
    materialize,
    run_tests,
    segment_snapshot,
    syntax_for,
)

log = logging.getLogger("evopatch")

EXIT_OK = 0
EXIT_NO_PLAUSIBLE = 1
EXIT_CONFIG = 2

BUILTIN_DEFAULTS = {
    "gamma_min": 0.1,
    "n_max": 60,
    "pop": 40,
    "gens": 50,
    "w": DEFAULT_W,
    "mu": 0.06,
    "max_tokens": DEFAULT_MAX_TOKENS,
    "seed": 42,
    "jobs": 1,
    "time_limit": 3600.0,
    "stop_mode": "full_budget",
    "provider": "fixture",
    "redundancy_limit": 50,
    "sequences_per_prompt": 10,
}


@dataclass
class RunParams:
    """Effective settings after applying flag > subject-config > builtin."""

    gamma_min: float
    n_max: int
    pop: int
    gens: int
    w: float
    mu: float
    max_tokens: int
    seed: int
    jobs: int
    time_limit: float
    stop_mode: str
    provider: str
    redundancy_limit: int
    sequences_per_prompt: int
    endpoint_url: str | None = None
    auth_env: str | None = None
    fill_token: str = DEFAULT_FILL_TOKEN

    @staticmethod
    def resolve(args: argparse.Namespace, cfg: SubjectConfig) -> "RunParams":
        def setting(name):
            flag = getattr(args, name, None)
            if flag is not None:
                return flag
            if name in cfg.defaults:
                return cfg.defaults[name]
            return BUILTIN_DEFAULTS[name]

        return RunParams(
            gamma_min=float(setting("gamma_min")),
            n_max=int(setting("n_max")),
            pop=int(setting("pop")),
            gens=int(setting("gens")),
            w=float(setting("w")),
            mu=float(setting("mu")),
            max_tokens=int(setting("max_tokens")),
            seed=int(setting("seed")),
            jobs=int(setting("jobs")),
            time_limit=float(setting("time_limit")),
            stop_mode=str(setting("stop_mode")),
            provider=str(setting("provider")),
            redundancy_limit=int(setting("redundancy_limit")),
            sequences_per_prompt=int(setting("sequences_per_prompt")),
            endpoint_url=getattr(args, "endpoint_url", None),
            auth_env=getattr(args, "auth_env", None),
            fill_token=getattr(args, "fill_token", None) or DEFAULT_FILL_TOKEN,
        )

    def config_echo(self) -> dict:
        return {
            "gamma_min": self.gamma_min,
            "n_max": self.n_max,
            "pop": self.pop,
            "gens": self.gens,
            "w": self.w,
            "mu": self.mu,
            "max_tokens": self.max_tokens,
            "seed": self.seed,
            "stop_mode": self.stop_mode,
            "provider": self.provider,
        }


def derive_rng(seed: int, subject_id: str) -> random.Random:
    return random.Random(f"{seed}:{subject_id}")


# --------------------------------------------------------------------------
# pipeline stages (importable; the CLI commands are thin wrappers)
# --------------------------------------------------------------------------


def baseline_spectrum(cfg: SubjectConfig, snapshot: SourceSnapshot) -> CoverageSpectrum:
    """Run the full suite on the pristine snapshot and ingest the reports."""
    workdir = Path(tempfile.mkdtemp(prefix="baseline-"))
    try:
        materialize(snapshot, workdir)
        reports = run_tests(workdir, "all", cfg)
    finally:
        shutil.rmtree(workdir, ignore_errors=True)
    return ingest_spectrum(reports, segment_snapshot(snapshot, cfg))


def stage_localize(cfg: SubjectConfig, params: RunParams):
    snapshot = load_snapshot(cfg)
    spectrum = baseline_spectrum(cfg, snapshot)
    lbs = select_lbs(spectrum, params.gamma_min, params.n_max, snapshot)
    return snapshot, spectrum, lbs


def _model_sequences(
    stmt: SuspiciousStatement,
    mode: str,
    cfg: SubjectConfig,
    params: RunParams,
    snapshot: SourceSnapshot,
    catalog: SymbolCatalog,
):
    if params.provider == "fixture":
        return fixture_sequences(stmt, cfg.root / "fixtures.json", mode)
    if params.provider == "endpoint":
        if not params.endpoint_url:
            raise ProviderError("--endpoint-url is required with the endpoint provider")
        bundle = build_prompt(
            stmt, mode, catalog, params.max_tokens, snapshot, params.fill_token
        )
        endpoint = EndpointConfig(params.endpoint_url, auth_env=params.auth_env)
        return request_infill(
            bundle, SamplingParams(), endpoint, total=params.sequences_per_prompt
        )
    raise ProviderError(f"unknown model provider {params.provider!r}")


def stage_candidates(
    cfg: SubjectConfig,
    params: RunParams,
    snapshot: SourceSnapshot,
    lbs: list[SuspiciousStatement],
    catalog: SymbolCatalog,
) -> tuple[list[SuspiciousStatement], int]:
    """Attach candidate sets to each suspicious statement.

    Provider failures shrink the candidate space for that statement instead
    of aborting; the failure count surfaces in the run report.
    """
    syntax = syntax_for(cfg)
    failures = 0
    attached: list[SuspiciousStatement] = []
    for stmt in lbs:
        per_mode: dict[str, list[CandidateStatement]] = {}
        for mode in ("replace", "insert"):
            try:
                if params.provider == "redundancy":
                    seqs = redundancy_sequences(
                        stmt, snapshot, params.redundancy_limit, cfg.comment_prefixes
                    )
                    cands = sequences_to_candidates(seqs, syntax)
                elif params.provider == "merge":
                    base = "endpoint" if params.endpoint_url else "fixture"
                    model_params = replace(params, provider=base)
                    model_seqs = _model_sequences(stmt, mode, cfg, model_params, snapshot, catalog)
                    red_seqs = redundancy_sequences(
                        stmt, snapshot, params.redundancy_limit, cfg.comment_prefixes
                    )
                    cands = merge_spaces(
                        sequences_to_candidates(model_seqs, syntax),
                        sequences_to_candidates(red_seqs, syntax),
                    )
                else:
                    seqs = _model_sequences(stmt, mode, cfg, params, snapshot, catalog)
                    cands = sequences_to_candidates(seqs, syntax)
            except ProviderError as exc:
                log.warning("provider failed for %s (%s): %s", stmt.location, mode, exc)
                failures += 1
                cands = []
            original = stmt.original_text if mode == "replace" else None
            per_mode[mode] = dedupe_and_prune(cands, original)
        attached.append(stmt.with_candidates(per_mode["replace"], per_mode["insert"]))
    return attached, failures


def _candidate_file_name(stmt: SuspiciousStatement) -> str:
    loc = stmt.location
    safe = loc.file.replace("/", "__")
    return f"{safe}_{loc.line_start}-{loc.line_end}.json"


def write_candidate_sets(
    lbs: list[SuspiciousStatement], outdir: Path, provider_failures: int
) -> None:
    outdir.mkdir(parents=True, exist_ok=True)
    for stmt in lbs:
        obj = {
            "location": str(stmt.location),
            "replace": [
                {"text": c.text, "origin": c.origin} for c in stmt.replacement_candidates
            ],
            "insert": [
                {"text": c.text, "origin": c.origin} for c in stmt.insertion_candidates
            ],
        }
        (outdir / _candidate_file_name(stmt)).write_text(
            json.dumps(obj, indent=2, sort_keys=True) + "\n"
        )
    (outdir / "_meta.json").write_text(
        json.dumps({"provider_failures": provider_failures}, sort_keys=True) + "\n"
    )


def load_candidate_sets(
    lbs: list[SuspiciousStatement], candidates_dir: Path
) -> tuple[list[SuspiciousStatement], int]:
    """Attach previously persisted candidate sets; statements without a file
    keep empty sets."""
    attached = []
    for stmt in lbs:
        path = candidates_dir / _candidate_file_name(stmt)
        if not path.is_file():
            attached.append(stmt)
            continue
        obj = json.loads(path.read_text())
        replace = tuple(
            CandidateStatement.make(c["text"], c["origin"]) for c in obj.get("replace", [])
        )
        insert = tuple(
            CandidateStatement.make(c["text"], c["origin"]) for c in obj.get("insert", [])
        )
        attached.append(stmt.with_candidates(replace, insert))
    meta = candidates_dir / "_meta.json"
    failures = 0
    if meta.is_file():
        failures = int(json.loads(meta.read_text()).get("provider_failures", 0))
    return attached, failures


def stage_repair(
    cfg: SubjectConfig,
    params: RunParams,
    snapshot: SourceSnapshot,
    spectrum: CoverageSpectrum,
    lbs: list[SuspiciousStatement],
    provider_failures: int,
):
    ctx = EvaluationContext(
        lbs=lbs, snapshot=snapshot, cfg=cfg, baseline=spectrum, w=params.w
    )
    evaluator = SubjectEvaluator(ctx)
    problem = RepairProblem(
        lbs=lbs,
        evaluate=evaluator.evaluate,
        validate_full=evaluator.is_plausible,
        patch_key=evaluator.patch_key,
        render_patch=evaluator.render_patch,
    )
    evo_cfg = EvolutionConfig(
        pop_size=params.pop,
        generations=params.gens,
        w=params.w,
        mu=params.mu,
        stop_mode=params.stop_mode,
        wall_clock_limit=params.time_limit,
        jobs=params.jobs,
    )
    rng = derive_rng(params.seed, cfg.subject_id)
    result = evolve(problem, evo_cfg, rng)
    report = build_report(
        cfg.subject_id, params.config_echo(), lbs, result, provider_failures
    )
    return report, result


def _catalog_for(cfg: SubjectConfig, args) -> SymbolCatalog:
    path = getattr(args, "catalog", None) or cfg.catalog_path
    if not path:
        return SymbolCatalog()
    path = Path(path)
    if not path.is_absolute():
        path = cfg.root / path
    return load_catalog(path)


def _outdir(args, cfg: SubjectConfig) -> Path:
    base = Path(getattr(args, "out", None) or "out")
    return base / cfg.subject_id


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------


def cmd_localize(args) -> int:
    cfg = load_config(Path(args.subject))
    params = RunParams.resolve(args, cfg)
    _, _, lbs = stage_localize(cfg, params)
    outdir = _outdir(args, cfg)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "localization.json").write_text(localization_report(lbs))
    log.info("localized %d suspicious statements -> %s", len(lbs), outdir / "localization.json")
    return EXIT_OK


def cmd_prompts(args) -> int:
    cfg = load_config(Path(args.subject))
    params = RunParams.resolve(args, cfg)
    snapshot, _, lbs = stage_localize(cfg, params)
    catalog = _catalog_for(cfg, args)
    outdir = _outdir(args, cfg) / "prompts"
    outdir.mkdir(parents=True, exist_ok=True)
    for stmt in lbs:
        for mode in ("replace", "insert"):
            bundle = build_prompt(
                stmt, mode, catalog, params.max_tokens, snapshot, params.fill_token
            )
            name = _candidate_file_name(stmt).replace(".json", f".{mode}.txt")
            (outdir / name).write_text(bundle.text + "\n")
    log.info("wrote prompts for %d statements under %s", len(lbs), outdir)
    return EXIT_OK


def cmd_candidates(args) -> int:
    cfg = load_config(Path(args.subject))
    params = RunParams.resolve(args, cfg)
    snapshot, _, lbs = stage_localize(cfg, params)
    catalog = _catalog_for(cfg, args)
    attached, failures = stage_candidates(cfg, params, snapshot, lbs, catalog)
    write_candidate_sets(attached, _outdir(args, cfg) / "candidates", failures)
    log.info(
        "wrote candidate sets for %d statements (%d provider failures)",
        len(attached),
        failures,
    )
    return EXIT_OK


def cmd_repair(args) -> int:
    cfg = load_config(Path(args.subject))
    params = RunParams.resolve(args, cfg)
    snapshot, spectrum, lbs = stage_localize(cfg, params)
    outdir = _outdir(args, cfg)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "localization.json").write_text(localization_report(lbs))

    candidates_dir = Path(args.candidates_dir) if args.candidates_dir else outdir / "candidates"
    if candidates_dir.is_dir() and any(candidates_dir.glob("*.json")):
        attached, failures = load_candidate_sets(lbs, candidates_dir)
        log.info("loaded candidate sets from %s", candidates_dir)
    else:
        catalog = _catalog_for(cfg, args)
        attached, failures = stage_candidates(cfg, params, snapshot, lbs, catalog)
        write_candidate_sets(attached, candidates_dir, failures)

    report, _ = stage_repair(cfg, params, snapshot, spectrum, attached, failures)
    write_report(report, outdir)
    log.info(
        "repair %s: %d plausible patch(es), %d evaluations",
        report.status,
        len(report.archive),
        report.evaluations,
    )
    if report.error:
        log.error("repair stage failed: %s", report.error)
        return EXIT_CONFIG
    return EXIT_OK if report.archive else EXIT_NO_PLAUSIBLE


def cmd_validate(args) -> int:
    cfg = load_config(Path(args.subject))
    snapshot = load_snapshot(cfg)
    diff_text = Path(args.diff).read_text() if args.diff else ""
    patched = apply_diff(snapshot, diff_text)
    workdir = Path(tempfile.mkdtemp(prefix="validate-"))
    try:
        materialize(patched, workdir)
        reports = run_tests(workdir, "all", cfg)
    finally:
        shutil.rmtree(workdir, ignore_errors=True)
    failed = [r.test_id for r in reports if r.verdict != "pass"]
    if failed:
        log.info("suite FAILED on %d test(s): %s", len(failed), ", ".join(failed[:5]))
        return EXIT_NO_PLAUSIBLE
    log.info("suite passed (%d tests)", len(reports))
    return EXIT_OK


def cmd_bench(args) -> int:
    corpus = Path(args.corpus)
    subject_dirs = sorted(
        d for d in corpus.iterdir() if d.is_dir() and (d / "subject.json").is_file()
    )
    if not subject_dirs:
        log.error("no subjects with subject.json under %s", corpus)
        return EXIT_CONFIG

    rows = []
    for subject_dir in subject_dirs:
        cfg = load_config(subject_dir)
        params = RunParams.resolve(args, cfg)
        started = time.monotonic()
        row = {
            "subject": cfg.subject_id,
            "plausible": False,
            "cost": None,
            "archive_size": 0,
            "wall_ms": 0,
            "error": None,
        }
        try:
            snapshot, spectrum, lbs = stage_localize(cfg, params)
            outdir = _outdir(args, cfg)
            outdir.mkdir(parents=True, exist_ok=True)
            (outdir / "localization.json").write_text(localization_report(lbs))
            catalog = _catalog_for(cfg, args)
            attached, failures = stage_candidates(cfg, params, snapshot, lbs, catalog)
            write_candidate_sets(attached, outdir / "candidates", failures)
            report, result = stage_repair(cfg, params, snapshot, spectrum, attached, failures)
            write_report(report, outdir)
            row["plausible"] = bool(report.archive)
            row["archive_size"] = len(report.archive)
            if result.archive:
                row["cost"] = result.archive[0].evaluations_at_discovery
            if report.error:
                row["error"] = report.error
        except (SubjectConfigError, OSError, ValueError, RuntimeError) as exc:
            row["error"] = str(exc)
            log.error("subject %s failed: %s", cfg.subject_id, exc)
        row["wall_ms"] = int((time.monotonic() - started) * 1000)
        log.info(
            "bench %s: plausible=%s cost=%s (%.1fs)",
            row["subject"],
            row["plausible"],
            row["cost"],
            row["wall_ms"] / 1000.0,
        )
        rows.append(row)

    solved = [r for r in rows if r["plausible"]]
    aggregate = {
        "subjects": [
            {k: r[k] for k in ("subject", "plausible", "cost", "archive_size", "error")}
            for r in rows
        ],
        "total": len(rows),
        "solved": len(solved),
        "mean_cost_solved": (
            sum(r["cost"] for r in solved) / len(solved) if solved else None
        ),
    }
    out_base = Path(getattr(args, "out", None) or "out")
    out_base.mkdir(parents=True, exist_ok=True)
    (out_base / "bench.json").write_text(json.dumps(aggregate, indent=2, sort_keys=True) + "\n")
    with open(out_base / "bench.csv", "w", newline="") as fh:
        writer = csv.DictWriter(
            fh, fieldnames=["subject", "plausible", "cost", "archive_size", "wall_ms", "error"]
        )
        writer.writeheader()
        writer.writerows(rows)
    log.info(
        "bench complete: %d/%d solved, mean cost %s",
        len(solved),
        len(rows),
        aggregate["mean_cost_solved"],
    )
    return EXIT_OK


# --------------------------------------------------------------------------
# argument parsing
# --------------------------------------------------------------------------


def _add_engine_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, help="base RNG seed (default 42)")
    parser.add_argument("--jobs", type=int, help="parallel fitness evaluations")
    parser.add_argument("--gamma-min", dest="gamma_min", type=float, help="suspiciousness floor")
    parser.add_argument("--n-max", dest="n_max", type=int, help="max suspicious statements")
    parser.add_argument("--pop", type=int, help="population size")
    parser.add_argument("--gens", type=int, help="max generations")
    parser.add_argument("--w", type=float, help="weight of the failing-test term")
    parser.add_argument("--mu", type=float, help="initialization weight")
    parser.add_argument("--max-tokens", dest="max_tokens", type=int, help="prompt token budget")
    parser.add_argument(
        "--provider",
        choices=["endpoint", "redundancy", "fixture", "merge"],
        help="candidate sequence source (default fixture)",
    )
    parser.add_argument("--endpoint-url", dest="endpoint_url", help="infill endpoint URL")
    parser.add_argument(
        "--auth-env",
        dest="auth_env",
        help="environment variable holding the endpoint Authorization value",
    )
    parser.add_argument(
        "--stop-mode",
        dest="stop_mode",
        choices=["full_budget", "first_plausible"],
        help="when to stop the search",
    )
    parser.add_argument(
        "--time-limit", dest="time_limit", type=float, help="wall-clock limit per subject (s)"
    )
    parser.add_argument("--fill-token", dest="fill_token", help="infill mask token")
    parser.add_argument("--catalog", help="symbol catalog JSON path")
    parser.add_argument("--out", help="output root directory (default ./out)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="evopatch",
        description="Evolutionary multi-edit program repair over model-generated candidate statements.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, fn, doc in [
        ("localize", cmd_localize, "rank suspicious statements from the baseline suite"),
        ("prompts", cmd_prompts, "render infill prompts per statement and mode"),
        ("candidates", cmd_candidates, "build candidate statement sets from a provider"),
        ("repair", cmd_repair, "run the evolutionary patch search"),
    ]:
        p = sub.add_parser(name, help=doc)
        p.add_argument("--subject", required=True, help="subject root or subject.json path")
        if name == "repair":
            p.add_argument(
                "--candidates-dir",
                dest="candidates_dir",
                help="pre-generated candidate sets (default <out>/<subject>/candidates)",
            )
        _add_engine_flags(p)
        p.set_defaults(fn=fn)

    p = sub.add_parser("validate", help="run the full suite against one diff")
    p.add_argument("--subject", required=True)
    p.add_argument("--diff", help="unified diff file (omit for the pristine subject)")
    p.add_argument("--out", help="unused; accepted for symmetry")
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("bench", help="run the repair pipeline over a corpus of subjects")
    p.add_argument("corpus", help="directory of subject directories")
    _add_engine_flags(p)
    p.set_defaults(fn=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    if args.command == "bench" and args.stop_mode is None:
        args.stop_mode = "first_plausible"  # bench measures cost-to-first-patch
    try:
        return args.fn(args)
    except (SubjectConfigError, ProviderError, FileNotFoundError) as exc:
        log.error("%s", exc)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
