"""Command line front end.

Every subcommand resolves its settings from defaults, then an optional YAML
config file, then explicit flags (flags win). Artifacts are deterministic for
a fixed seed and inputs: JSONL files open with a {"_meta": ...} line and JSON
reports carry the same reproducibility fields under "run".

Exit codes: 0 success, 1 usage, 2 invalid input, 3 backend failure,
4 metric undefined on this input.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Sequence

import yaml

from . import __version__, jsonl, report as report_mod
from .answers import answers_equivalent
from .core import GoldKind, ReasoningTrace
from .dataset import (
    VerdictStore,
    build_corpus,
    emit_judge_prompt,
    prompt_id_for,
    read_raw_records,
    records_needing_verdicts,
)
from .errors import (
    MetricUndefinedError,
    ParseError,
    PrmkitError,
    ProtocolError,
    SearchError,
    TransportError,
    UsageError,
    ValidationError,
)
from .evaluator import (
    DEFAULT_TAU,
    EvalReport,
    FirstErrorCase,
    RunMeta,
    StepJudgmentCase,
    first_error_report,
    per_category_report,
    predict_first_error,
    predict_step_labels,
)
from .remote import BackendLimits, RemotePolicyBackend, RetryPolicy, remote_backend
from .scorer import ScorerBackend, mock_oracle_backend, score_trace
from .search import (
    MODE_BEST_OF_N,
    MODE_GUIDED,
    PolicyBackend,
    SearchConfig,
    best_of_n_search,
    guided_greedy_search,
    majority_vote,
    pass_at_k,
    unguided_rollouts,
)
from .synthetic import SyntheticPolicyBackend, SyntheticProblem
from .template import DEFAULT_TEMPLATE, PromptTemplate

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_BACKEND = 3
EXIT_METRIC = 4

MOCK_BACKEND = "mock"

# isinstance checks walk this list in order; subclasses must precede parents.
_ERROR_TABLE: tuple[tuple[type, str, int], ...] = (
    (UsageError, "usage", EXIT_USAGE),
    (MetricUndefinedError, "metric_undefined", EXIT_METRIC),
    (TransportError, "transport", EXIT_BACKEND),
    (ProtocolError, "protocol", EXIT_BACKEND),
    (SearchError, "search", EXIT_BACKEND),
    (ParseError, "parse", EXIT_VALIDATION),
    (ValidationError, "validation", EXIT_VALIDATION),
)


@dataclass
class RunConfig:
    """Resolved settings shared by the subcommands."""

    seed: int = 0
    tau: float = DEFAULT_TAU
    backend: str = MOCK_BACKEND
    auth_token: str | None = None
    timeout: float = 30.0
    max_retries: int = 5
    backoff_base: float = 0.1
    max_batch_size: int = 16
    max_concurrency: int = 4
    template_file: str | None = None
    k: int = 8
    max_steps: int = 12
    mode: str = MODE_GUIDED
    policy: str = MOCK_BACKEND
    error_rate: float = 0.5
    sample_rate: float = 1.0
    truncate_after_first_error: bool = False
    label: str | None = None
    data_size: int | None = None

    def __post_init__(self) -> None:
        if not (0.0 < self.tau < 1.0):
            raise ValidationError(f"tau must be strictly between 0 and 1, got {self.tau!r}")
        if self.timeout <= 0:
            raise ValidationError(f"timeout must be positive, got {self.timeout!r}")
        if self.max_retries < 0:
            raise ValidationError(f"max_retries must be >= 0, got {self.max_retries!r}")
        if self.backoff_base < 0:
            raise ValidationError(f"backoff_base must be >= 0, got {self.backoff_base!r}")
        for name in ("max_batch_size", "max_concurrency", "k", "max_steps"):
            if getattr(self, name) < 1:
                raise ValidationError(f"{name} must be >= 1, got {getattr(self, name)!r}")
        if self.mode not in (MODE_GUIDED, MODE_BEST_OF_N):
            raise ValidationError(f"mode must be guided or bestof, got {self.mode!r}")
        for name in ("error_rate", "sample_rate"):
            value = getattr(self, name)
            if not (0.0 <= value <= 1.0):
                raise ValidationError(f"{name} must be within [0, 1], got {value!r}")
        if self.data_size is not None and self.data_size < 0:
            raise ValidationError(f"data_size must be >= 0, got {self.data_size!r}")

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)


_CONFIG_FIELD_NAMES = {f.name for f in dataclasses.fields(RunConfig)}


def load_config_file(path: str | Path) -> dict[str, Any]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"cannot read config file {path}: {exc}") from exc
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ValidationError(f"config file {path} is not valid YAML: {exc}") from exc
    if doc is None:
        return {}
    if not isinstance(doc, dict):
        raise ValidationError(f"config file {path} must hold a mapping at top level")
    unknown = sorted(set(doc) - _CONFIG_FIELD_NAMES)
    if unknown:
        raise UsageError(
            f"unknown config keys in {path}: {', '.join(unknown)} "
            f"(allowed: {', '.join(sorted(_CONFIG_FIELD_NAMES))})"
        )
    return dict(doc)


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Defaults, then the config file, then flags that were actually given."""
    values: dict[str, Any] = {}
    config_path = getattr(args, "config", None)
    if config_path:
        values.update(load_config_file(config_path))
    for name in _CONFIG_FIELD_NAMES:
        flag_value = getattr(args, name, None)
        if flag_value is not None:
            values[name] = flag_value
    try:
        return RunConfig(**values)
    except TypeError as exc:
        raise ValidationError(f"bad config value: {exc}") from exc


def config_fingerprint(command: str, config: RunConfig, paths: dict[str, str]) -> str:
    """Short stable hash over everything that shapes the run (token excluded)."""
    doc = {"command": command, "config": config.to_dict(), "paths": paths}
    doc["config"].pop("auth_token", None)
    digest = hashlib.sha256(jsonl.dumps_canonical(doc).encode("utf-8")).hexdigest()
    return digest[:16]


@dataclass
class RunContext:
    command: str
    config: RunConfig
    template: PromptTemplate
    config_hash: str

    @property
    def backend_id(self) -> str:
        return "mock-oracle" if self.config.backend == MOCK_BACKEND else self.config.backend

    def meta(self) -> dict[str, Any]:
        return {
            "command": self.command,
            "config_hash": self.config_hash,
            "seed": self.config.seed,
            "template_version": self.template.version,
            "tool_version": __version__,
        }

    def run_meta(self) -> RunMeta:
        extra: dict[str, Any] = {}
        if self.config.label is not None:
            extra["label"] = self.config.label
        if self.config.data_size is not None:
            extra["data_size"] = self.config.data_size
        return RunMeta(
            tau=self.config.tau,
            backend_id=self.backend_id,
            template_version=self.template.version,
            seed=self.config.seed,
            tool_version=__version__,
            config_hash=self.config_hash,
            extra=extra,
        )


def make_context(command: str, args: argparse.Namespace, paths: dict[str, str]) -> RunContext:
    config = resolve_config(args)
    if config.template_file:
        template = PromptTemplate.from_json_file(config.template_file)
    else:
        template = DEFAULT_TEMPLATE
    return RunContext(
        command=command,
        config=config,
        template=template,
        config_hash=config_fingerprint(command, config, paths),
    )


def make_scorer_backend(config: RunConfig) -> ScorerBackend:
    if config.backend == MOCK_BACKEND:
        return mock_oracle_backend()
    if config.backend.startswith(("http://", "https://")):
        return remote_backend(
            config.backend,
            auth_token=config.auth_token,
            limits=BackendLimits(
                max_concurrency=config.max_concurrency,
                max_batch_size=config.max_batch_size,
                timeout=config.timeout,
            ),
            retry=RetryPolicy(max_retries=config.max_retries, backoff_base=config.backoff_base),
        )
    raise UsageError(f"backend must be {MOCK_BACKEND!r} or an http(s) URL, got {config.backend!r}")


def make_policy_backend(
    config: RunConfig, problems: Sequence[SyntheticProblem]
) -> PolicyBackend:
    if config.policy == MOCK_BACKEND:
        return SyntheticPolicyBackend(problems, error_rate=config.error_rate, seed=config.seed)
    if config.policy.startswith(("http://", "https://")):
        return RemotePolicyBackend(
            config.policy,
            auth_token=config.auth_token,
            limits=BackendLimits(timeout=config.timeout),
            retry=RetryPolicy(max_retries=config.max_retries, backoff_base=config.backoff_base),
        )
    raise UsageError(f"policy must be {MOCK_BACKEND!r} or an http(s) URL, got {config.policy!r}")


def _write_json(path: str | Path, doc: dict[str, Any]) -> None:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _load_traces(path: str | Path) -> list[ReasoningTrace]:
    return [ReasoningTrace.from_dict(data) for data in jsonl.read_records(path)]


# ---------------------------------------------------------------- subcommands


def cmd_build_dataset(args: argparse.Namespace) -> int:
    paths = {
        "prm800k": args.prm800k,
        "mistral": args.mistral,
        "verdicts": args.verdicts or "",
        "out": args.out,
        "rejects": args.rejects,
    }
    ctx = make_context("build-dataset", args, paths)
    prm_records, _ = read_raw_records(args.prm800k, GoldKind.PRM800K)
    mc_records, _ = read_raw_records(args.mistral, GoldKind.MISTRAL_MC)
    store = VerdictStore.from_jsonl(args.verdicts) if args.verdicts else VerdictStore()
    stats = build_corpus(
        prm_records,
        mc_records,
        store,
        out_path=args.out,
        rejects_path=args.rejects,
        sample_rate=ctx.config.sample_rate,
        seed=ctx.config.seed,
        truncate_after_first_error=ctx.config.truncate_after_first_error,
        meta=ctx.meta(),
    )
    print(json.dumps({"stats": stats.to_dict(), "out": args.out, "rejects": args.rejects},
                     indent=2, sort_keys=True))
    return EXIT_OK


def cmd_emit_prompts(args: argparse.Namespace) -> int:
    paths = {"prm800k": args.prm800k or "", "mistral": args.mistral or "", "out": args.out}
    ctx = make_context("emit-prompts", args, paths)
    if not args.prm800k and not args.mistral:
        raise UsageError("at least one of --prm800k / --mistral is required")
    prm_records: list = []
    mc_records: list = []
    traces: dict[str, ReasoningTrace] = {}
    if args.prm800k:
        prm_records, prm_traces = read_raw_records(args.prm800k, GoldKind.PRM800K)
        traces.update(prm_traces)
    if args.mistral:
        mc_records, mc_traces = read_raw_records(args.mistral, GoldKind.MISTRAL_MC)
        traces.update(mc_traces)
    need = records_needing_verdicts(
        prm_records, mc_records, sample_rate=ctx.config.sample_rate, seed=ctx.config.seed
    )
    rows = []
    for record in need:
        trace = traces[record.trace_ref]
        rows.append(
            {
                "prompt_id": prompt_id_for(record.trace_ref, record.step_index),
                "trace_ref": record.trace_ref,
                "step_index": record.step_index,
                "prompt": emit_judge_prompt(trace, record.step_index),
            }
        )
    jsonl.write_records(args.out, rows, meta=ctx.meta())
    print(f"wrote {len(rows)} judge prompts to {args.out}")
    return EXIT_OK


def cmd_score(args: argparse.Namespace) -> int:
    paths = {"traces": args.traces, "out": args.out}
    ctx = make_context("score", args, paths)
    backend = make_scorer_backend(ctx.config)
    traces = _load_traces(args.traces)
    rows = []
    for trace in traces:
        scores = score_trace(backend, trace, template=ctx.template)
        for index, score in enumerate(scores, start=1):
            rows.append(
                {
                    "source_id": trace.source_id,
                    "step_index": index,
                    "math_label": score.math_label,
                    "consistency_label": score.consistency_label,
                    "reward": score.reward,
                }
            )
    jsonl.write_records(args.out, rows, meta=ctx.meta())
    print(f"scored {len(traces)} traces ({len(rows)} steps) to {args.out}")
    return EXIT_OK


def _run_eval(
    cases: Sequence[Any],
    predictor: Callable[[Any], Any],
    build: Callable[[Sequence[Any], Sequence[Any]], EvalReport],
    out_path: str,
) -> int:
    predictions = [predictor(case) for case in cases]
    report = build(cases, predictions)
    _write_json(out_path, report.to_dict())
    sys.stdout.write(report.render_table())
    return EXIT_OK


def cmd_eval_processbench(args: argparse.Namespace) -> int:
    paths = {"cases": args.cases, "out": args.out}
    ctx = make_context("eval-processbench", args, paths)
    backend = make_scorer_backend(ctx.config)
    cases = [FirstErrorCase.from_dict(data) for data in jsonl.read_records(args.cases)]

    def predictor(case: FirstErrorCase):
        scores = score_trace(backend, case.trace, template=ctx.template)
        return predict_first_error(scores, ctx.config.tau)

    return _run_eval(
        cases,
        predictor,
        lambda cs, ps: first_error_report(cs, ps, run=ctx.run_meta()),
        args.out,
    )


def cmd_eval_prmbench(args: argparse.Namespace) -> int:
    paths = {"cases": args.cases, "out": args.out}
    ctx = make_context("eval-prmbench", args, paths)
    backend = make_scorer_backend(ctx.config)
    cases = [StepJudgmentCase.from_dict(data) for data in jsonl.read_records(args.cases)]

    def predictor(case: StepJudgmentCase):
        scores = score_trace(backend, case.trace, template=ctx.template)
        return predict_step_labels(scores, ctx.config.tau)

    return _run_eval(
        cases,
        predictor,
        lambda cs, ps: per_category_report(cs, ps, run=ctx.run_meta()),
        args.out,
    )


def _load_problems(path: str | Path, *, mock_policy: bool) -> list[dict[str, Any]]:
    rows = jsonl.read_records(path)
    problems = []
    for i, row in enumerate(rows):
        if "question" not in row:
            raise ValidationError(f"{path}: problem {i} lacks a question")
        if mock_policy:
            SyntheticProblem.from_dict(row)  # fail early with a clear message
        problems.append(row)
    return problems


def cmd_search(args: argparse.Namespace) -> int:
    paths = {"problems": args.problems, "out": args.out, "summary": args.summary or ""}
    ctx = make_context("search", args, paths)
    mock_policy = ctx.config.policy == MOCK_BACKEND
    rows = _load_problems(args.problems, mock_policy=mock_policy)
    synthetic = [SyntheticProblem.from_dict(r) for r in rows] if mock_policy else []
    policy = make_policy_backend(ctx.config, synthetic)
    backend = make_scorer_backend(ctx.config)
    search_config = SearchConfig(
        k=ctx.config.k,
        max_steps=ctx.config.max_steps,
        seed=ctx.config.seed,
        mode=ctx.config.mode,
    )

    out_rows = []
    graded: list[tuple[str | None, str]] = []
    baseline_sets: list[tuple[list[str | None], str]] = []
    n_complete = 0
    for i, row in enumerate(rows):
        question = row["question"]
        problem_id = str(row.get("problem_id", f"q-{i:04d}"))
        gold = row.get("gold_answer")
        if ctx.config.mode == MODE_GUIDED:
            transcript = guided_greedy_search(
                policy, backend, question, search_config, template=ctx.template
            )
            answer, complete = transcript.final_answer, transcript.complete
            detail = transcript.to_dict()
        else:
            result = best_of_n_search(
                policy, backend, question, search_config, template=ctx.template
            )
            answer = result.final_answer
            complete = result.rollouts[result.chosen].complete
            detail = result.to_dict()
        n_complete += int(complete)
        correct = answers_equivalent(answer, gold) if gold is not None else None
        if gold is not None:
            graded.append((answer, gold))
        if args.with_baselines and gold is not None:
            lanes = unguided_rollouts(policy, question, search_config, ctx.config.k)
            baseline_sets.append(([r.final_answer for r in lanes], gold))
        out_rows.append(
            {
                "problem_id": problem_id,
                "question": question,
                "final_answer": answer,
                "complete": complete,
                "correct": correct,
                "detail": detail,
            }
        )

    jsonl.write_records(args.out, out_rows, meta=ctx.meta())
    summary: dict[str, Any] = {
        "mode": ctx.config.mode,
        "k": ctx.config.k,
        "n_problems": len(rows),
        "n_complete": n_complete,
        "n_graded": len(graded),
        "accuracy": (
            sum(answers_equivalent(a, g) for a, g in graded) / len(graded) if graded else None
        ),
        "run": ctx.run_meta().to_dict(),
    }
    if args.with_baselines and baseline_sets:
        answer_sets = [s for s, _ in baseline_sets]
        golds = [g for _, g in baseline_sets]
        summary["baselines"] = {
            "pass@1": sum(
                answers_equivalent(s[0] if s else None, g) for s, g in baseline_sets
            ) / len(baseline_sets),
            f"majority@{ctx.config.k}": sum(
                answers_equivalent(majority_vote(s), g) for s, g in baseline_sets
            ) / len(baseline_sets),
            f"pass@{ctx.config.k}": pass_at_k(answer_sets, golds),
        }
    if args.summary:
        _write_json(args.summary, summary)
    print(json.dumps(summary, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    paths = {"runs": ",".join(args.runs), "out_dir": args.out_dir}
    ctx = make_context("report", args, paths)
    manifest = report_mod.build_report(args.runs, args.out_dir, chart=not args.no_chart)
    manifest["run"] = ctx.run_meta().to_dict()
    _write_json(Path(args.out_dir) / "manifest.json", manifest)
    print(json.dumps(manifest, indent=2, sort_keys=True))
    return EXIT_OK


# --------------------------------------------------------------------- parser


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on bad usage; this toolkit reserves 2 for bad input."""

    def error(self, message: str):  # type: ignore[override]
        raise UsageError(message)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="YAML file with config keys (flags win)")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--tau", type=float)
    parser.add_argument("--backend", help="'mock' or a scorer service URL")
    parser.add_argument("--auth-token", dest="auth_token")
    parser.add_argument("--timeout", type=float)
    parser.add_argument("--max-retries", dest="max_retries", type=int)
    parser.add_argument("--backoff-base", dest="backoff_base", type=float)
    parser.add_argument("--max-batch-size", dest="max_batch_size", type=int)
    parser.add_argument("--max-concurrency", dest="max_concurrency", type=int)
    parser.add_argument("--template-file", dest="template_file")
    parser.add_argument("--label", help="free-form run label stored in report metadata")
    parser.add_argument("--data-size", dest="data_size", type=int,
                        help="training set size annotation for scaling reports")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="prmkit", description="Stepwise reasoning reward toolkit.")
    parser.add_argument("--version", action="version", version=f"prmkit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("build-dataset", parents=[], help="label raw streams into a corpus")
    p.add_argument("--prm800k", required=True, help="human-annotated raw step stream (JSONL)")
    p.add_argument("--mistral", required=True, help="Monte-Carlo signed raw step stream (JSONL)")
    p.add_argument("--verdicts", help="judge verdicts JSONL (prompt_id, response)")
    p.add_argument("--out", required=True, help="corpus JSONL to write")
    p.add_argument("--rejects", required=True, help="rejected/unresolved sidecar JSONL")
    p.add_argument("--sample-rate", dest="sample_rate", type=float)
    p.add_argument("--truncate-after-first-error", dest="truncate_after_first_error",
                   action=argparse.BooleanOptionalAction)
    _add_common(p)
    p.set_defaults(func=cmd_build_dataset)

    p = sub.add_parser("emit-prompts", help="write judge prompts for records needing verdicts")
    p.add_argument("--prm800k", help="human-annotated raw step stream (JSONL)")
    p.add_argument("--mistral", help="Monte-Carlo signed raw step stream (JSONL)")
    p.add_argument("--out", required=True)
    p.add_argument("--sample-rate", dest="sample_rate", type=float)
    _add_common(p)
    p.set_defaults(func=cmd_emit_prompts)

    p = sub.add_parser("score", help="score traces step by step")
    p.add_argument("--traces", required=True, help="trace JSONL (question, steps, source_id)")
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("eval-processbench", help="first-error benchmark evaluation")
    p.add_argument("--cases", required=True, help="cases JSONL with gold_first_error")
    p.add_argument("--out", required=True, help="report JSON to write")
    _add_common(p)
    p.set_defaults(func=cmd_eval_processbench)

    p = sub.add_parser("eval-prmbench", help="per-step judgment benchmark evaluation")
    p.add_argument("--cases", required=True, help="cases JSONL with labels and category_tag")
    p.add_argument("--out", required=True, help="report JSON to write")
    _add_common(p)
    p.set_defaults(func=cmd_eval_prmbench)

    p = sub.add_parser("search", help="reward-guided solution search")
    p.add_argument("--problems", required=True, help="problems JSONL")
    p.add_argument("--out", required=True, help="transcripts JSONL to write")
    p.add_argument("--summary", help="summary JSON to write")
    p.add_argument("--mode", choices=(MODE_GUIDED, MODE_BEST_OF_N))
    p.add_argument("--k", type=int)
    p.add_argument("--max-steps", dest="max_steps", type=int)
    p.add_argument("--policy", help="'mock' or a policy service URL")
    p.add_argument("--error-rate", dest="error_rate", type=float,
                   help="per-candidate defect odds for the mock policy")
    p.add_argument("--with-baselines", action="store_true",
                   help="also compute unguided pass@1 / majority / pass@k")
    _add_common(p)
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("report", help="compare saved evaluation runs")
    p.add_argument("runs", nargs="+", help="run report JSON files")
    p.add_argument("--out-dir", dest="out_dir", required=True)
    p.add_argument("--no-chart", action="store_true")
    _add_common(p)
    p.set_defaults(func=cmd_report)

    return parser


def _classify(exc: PrmkitError) -> tuple[str, int]:
    for exc_type, category, code in _ERROR_TABLE:
        if isinstance(exc, exc_type):
            return category, code
    return "error", EXIT_VALIDATION


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except PrmkitError as exc:
        category, code = _classify(exc)
        sys.stderr.write(
            json.dumps({"error": {"category": category, "message": str(exc)}}) + "\n"
        )
        return code


if __name__ == "__main__":
    raise SystemExit(main())
