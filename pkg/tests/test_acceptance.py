"""End-to-end acceptance checks.

Every expected value here is computed inside this module with independent
brute-force or closed-form logic, never by calling the code under test twice.
"""

from __future__ import annotations

import itertools
import json
import math
import random
import time
from pathlib import Path

import pytest

from prmkit.answers import answers_equivalent
from prmkit.cli import main
from prmkit.core import GoldSourceLabel, StepLabelVector
from prmkit.dataset import (
    JudgeVerdict,
    filter_judged_prm800k,
    filter_mc,
    label_records,
    map_prm800k,
    NEEDS_JUDGE,
    Rejected,
)
from prmkit.evaluator import (
    ALL_CORRECT,
    predict_first_error,
    predict_step_labels,
    prmscore,
    processbench_f1,
)
from prmkit.scorer import (
    DEFAULT_ORACLE_RULES,
    NEG,
    POS,
    MockRule,
    ScorerBackend,
    mock_oracle_backend,
    score_step,
)
from prmkit.search import SearchConfig, guided_greedy_search, unguided_rollouts
from prmkit.synthetic import (
    LabelFlipBackend,
    SyntheticPolicyBackend,
    make_benchmark_cases,
    make_raw_streams,
    make_search_problems,
    write_fixture_files,
)
from prmkit.template import SLOT_CONSISTENCY, SLOT_CORRECTNESS, SLOT_MATH


# ----------------------------------------------------- 1. labeling rule table


@pytest.mark.acceptance("label_rules_canonical")
def test_label_rules_canonical_sixteen_cases():
    v = JudgeVerdict

    # direct mapping of human annotations
    assert map_prm800k(1) == StepLabelVector(1, 1, 1)
    assert map_prm800k(0) == StepLabelVector(1, 1, 0)
    assert map_prm800k(-1) is NEEDS_JUDGE

    # judged resolution of ambiguous human annotations
    assert isinstance(filter_judged_prm800k(-1, v(1, 1, 1)), Rejected)
    assert filter_judged_prm800k(-1, v(0, 1, 1)) == StepLabelVector(0, 1, 1)
    assert filter_judged_prm800k(-1, v(1, 0, 1)) == StepLabelVector(1, 0, 1)
    assert filter_judged_prm800k(-1, v(1, 1, 0)) == StepLabelVector(1, 1, 0)
    assert filter_judged_prm800k(-1, v(0, 0, 0)) == StepLabelVector(0, 0, 0)

    # Monte-Carlo '+' keeps only fully clean verdicts
    assert filter_mc("+", v(1, 1, 1)) == StepLabelVector(1, 1, 1)
    assert isinstance(filter_mc("+", v(1, 1, 0)), Rejected)
    assert isinstance(filter_mc("+", v(0, 1, 1)), Rejected)
    assert isinstance(filter_mc("+", v(1, 0, 1)), Rejected)

    # Monte-Carlo '-' keeps only defective verdicts
    assert isinstance(filter_mc("-", v(1, 1, 1)), Rejected)
    assert filter_mc("-", v(1, 1, 0)) == StepLabelVector(1, 1, 0)
    assert filter_mc("-", v(0, 1, 1)) == StepLabelVector(0, 1, 1)
    assert filter_mc("-", v(0, 0, 1)) == StepLabelVector(0, 0, 1)


# ------------------------------------------------------- 2. corpus-wide audit


@pytest.mark.acceptance("corpus_audit_10k")
def test_ten_thousand_record_corpus_audits_clean():
    prm, mc, store, _ = make_raw_streams(3400, seed=99)
    assert len(prm) + len(mc) >= 10_000

    result = label_records(prm, mc, store, sample_rate=1.0, seed=99)

    for stats in (result.stats.prm800k, result.stats.mistral):
        assert stats.kept + stats.rejected + stats.unresolved == stats.total

    started = time.perf_counter()
    for record in result.kept:
        gold = record.gold
        triple = record.labels.as_tuple()
        if gold.kind.value == "prm800k":
            if gold.prm800k_label == 1:
                ok = triple == (1, 1, 1)
            elif gold.prm800k_label == 0:
                ok = triple == (1, 1, 0)
            else:
                ok = triple != (1, 1, 1)
        else:
            ok = (triple == (1, 1, 1)) if gold.mc_label == "+" else (triple != (1, 1, 1))
        assert ok, f"{record.trace_ref}#{record.step_index} violates its gold rule"
    elapsed = time.perf_counter() - started
    assert elapsed < 1.0, f"audit of {len(result.kept)} records took {elapsed:.3f}s"


# --------------------------------------- 3. scoring protocol shape and passes


class RecordingBackend(ScorerBackend):
    def __init__(self, inner: ScorerBackend) -> None:
        self.inner = inner
        self.queries = []

    @property
    def capabilities(self):
        return self.inner.capabilities

    def evaluate(self, query):
        self.queries.append(query)
        return self.inner.evaluate(query)


@pytest.mark.acceptance("scoring_protocol_two_calls_independent")
def test_two_calls_per_step_and_first_pass_independence():
    rules = DEFAULT_ORACLE_RULES + (
        MockRule(marker="[TIE]", math_p_pos=0.5, consistency_p_pos=0.5),
    )
    rng = random.Random(31337)
    fragments = ["combine terms", "apply identity", "substitute value", "expand product"]
    markers = ["", "", "", "[ERRMATH]", "[ERRCONS]", "[SUBOPT]", "[TIE]", "[TIE]"]

    for case_no in range(1000):
        question = f"Problem {case_no}: evaluate the expression."
        prefix = tuple(
            f"{rng.choice(fragments)} ({case_no}.{j})" for j in range(rng.randint(0, 3))
        )
        marker = rng.choice(markers)
        step = f"{rng.choice(fragments)} {marker}".strip()

        backend = RecordingBackend(mock_oracle_backend(rule_table=rules))
        score_pos = score_step(
            backend, question, prefix, step,
            math_tie_break=POS, consistency_tie_break=POS,
        )
        assert len(backend.queries) == 2, f"case {case_no}: {len(backend.queries)} calls"

        first, second = backend.queries
        assert set(first.mask_slots) == {SLOT_MATH, SLOT_CONSISTENCY}
        assert first.filled_map == {}, "first pass must not be conditioned"
        assert second.mask_slots == (SLOT_CORRECTNESS,)
        assert set(second.filled_map) == {SLOT_MATH, SLOT_CONSISTENCY}
        assert second.segments == first.segments

        backend_flip = RecordingBackend(mock_oracle_backend(rule_table=rules))
        score_neg = score_step(
            backend_flip, question, prefix, step,
            math_tie_break=NEG, consistency_tie_break=POS,
        )
        assert len(backend_flip.queries) == 2

        # flipping how a tied math slot resolves must never move the
        # consistency judgment for the same step
        assert score_neg.consistency_label == score_pos.consistency_label, (
            f"case {case_no}: consistency changed with the math tie-break"
        )
        if marker == "[TIE]":
            assert score_pos.math_label == 1
            assert score_neg.math_label == 0
        else:
            assert score_neg.math_label == score_pos.math_label


# ------------------------------------- 4. synthetic benchmarks, clean & noisy


def _run_first_error(cases, backend, tau=0.5):
    predictions = []
    for case in cases:
        from prmkit.scorer import score_trace

        predictions.append(predict_first_error(score_trace(backend, case.trace), tau))
    return processbench_f1([c.as_first_error_case() for c in cases], predictions)


def _run_step_judgment(cases, backend, tau=0.5):
    from prmkit.scorer import score_trace

    predictions = [predict_step_labels(score_trace(backend, c.trace), tau) for c in cases]
    return prmscore([c.as_step_judgment_case() for c in cases], predictions)


def _poisson_binomial(probs: list[float]) -> list[float]:
    dist = [1.0]
    for p in probs:
        nxt = [0.0] * (len(dist) + 1)
        for k, w in enumerate(dist):
            nxt[k] += w * (1.0 - p)
            nxt[k + 1] += w * p
        dist = nxt
    return dist


def _harmonic(a: float, b: float) -> float:
    return 2 * a * b / (a + b) if a + b else 0.0


def _expected_f1_under_flips(error_depths, clean_lengths, q):
    """Exact E[f1] when each step's verdict flips independently with odds q.

    An erroneous case matches iff no flip strikes steps 1..e, a clean case
    iff no flip strikes any of its m steps; the two accuracies are means of
    independent Bernoullis, so the expectation sums over both count laws.
    """
    err_probs = [(1 - q) ** e for e in error_depths]
    cor_probs = [(1 - q) ** m for m in clean_lengths]
    pa = _poisson_binomial(err_probs)
    pb = _poisson_binomial(cor_probs)
    n_err, n_cor = len(err_probs), len(cor_probs)
    total = 0.0
    for a, wa in enumerate(pa):
        for b, wb in enumerate(pb):
            total += wa * wb * _harmonic(a / n_err, b / n_cor)
    return total


def _enumerated_f1_under_flips(err_probs, cor_probs):
    """Literal joint enumeration; tractable only for a handful of cases."""
    n_err, n_cor = len(err_probs), len(cor_probs)
    total = 0.0
    for err_hits in itertools.product((0, 1), repeat=n_err):
        w_err = math.prod(p if h else 1 - p for p, h in zip(err_probs, err_hits))
        for cor_hits in itertools.product((0, 1), repeat=n_cor):
            w_cor = math.prod(p if h else 1 - p for p, h in zip(cor_probs, cor_hits))
            total += w_err * w_cor * _harmonic(sum(err_hits) / n_err, sum(cor_hits) / n_cor)
    return total


def _binomial_pmf(n: int, p: float) -> list[float]:
    if n == 0:
        return [1.0]
    pmf = [0.0] * (n + 1)
    pmf[0] = (1.0 - p) ** n
    for k in range(n):
        if pmf[k] == 0.0 and k > n * p:
            break
        pmf[k + 1] = pmf[k] * ((n - k) / (k + 1)) * (p / (1.0 - p))
    return pmf


def _expected_prmscore_under_flips(n_error_steps: int, n_correct_steps: int, q: float) -> float:
    """Exact E[score]: flipped error steps and flipped correct steps are
    independent binomial counts, and the two F1 terms are functions of them."""
    e_n, c_n = n_error_steps, n_correct_steps
    pmf_x = _binomial_pmf(e_n, 1.0 - q)  # error steps still predicted erroneous
    pmf_y = _binomial_pmf(c_n, q)  # correct steps wrongly predicted erroneous
    total = 0.0
    for x, px in enumerate(pmf_x):
        if px == 0.0:
            continue
        for y, py in enumerate(pmf_y):
            if py == 0.0:
                continue
            f1_err = 2 * x / (x + e_n + y) if (x + e_n + y) else 0.0
            denom = 2 * (c_n - y) + (e_n - x) + y
            f1_cor = 2 * (c_n - y) / denom if denom else 0.0
            total += px * py * 100.0 * (f1_err + f1_cor) / 2.0
    return total


@pytest.mark.acceptance("synthetic_benchmark_exact_and_noisy")
def test_synthetic_benchmarks_exact_then_within_noise_band():
    cases = make_benchmark_cases(200, seed=77)

    clean_fe = _run_first_error(cases, mock_oracle_backend())
    assert clean_fe["f1"] == 1.0
    clean_sj = _run_step_judgment(cases, mock_oracle_backend())
    assert clean_sj["prmscore"] == 100.0

    q = 0.1
    error_depths = [c.gold_first_error for c in cases if c.gold_first_error is not ALL_CORRECT]
    clean_lengths = [len(c.trace.steps) for c in cases if c.gold_first_error is ALL_CORRECT]
    expected_f1 = _expected_f1_under_flips(error_depths, clean_lengths, q)

    # the count-law shortcut must agree with literal enumeration on a toy set
    toy_err = [(1 - q) ** e for e in error_depths[:3]]
    toy_cor = [(1 - q) ** m for m in clean_lengths[:3]]
    dp_value = 0.0
    pa, pb = _poisson_binomial(toy_err), _poisson_binomial(toy_cor)
    for a, wa in enumerate(pa):
        for b, wb in enumerate(pb):
            dp_value += wa * wb * _harmonic(a / 3, b / 3)
    assert math.isclose(dp_value, _enumerated_f1_under_flips(toy_err, toy_cor), abs_tol=1e-12)

    n_error_steps = sum(1 for c in cases for l in c.step_labels if l == 0)
    n_correct_steps = sum(1 for c in cases for l in c.step_labels if l == 1)
    expected_score = _expected_prmscore_under_flips(n_error_steps, n_correct_steps, q)

    replicates = 20
    f1_sum = 0.0
    score_sum = 0.0
    for r in range(replicates):
        noisy_fe = LabelFlipBackend(mock_oracle_backend(), flip_rate=q, seed=1000 + r)
        f1_sum += _run_first_error(cases, noisy_fe)["f1"]
        noisy_sj = LabelFlipBackend(mock_oracle_backend(), flip_rate=q, seed=5000 + r)
        score_sum += _run_step_judgment(cases, noisy_sj)["prmscore"]
    measured_f1 = f1_sum / replicates
    measured_score = score_sum / replicates

    assert abs(measured_f1 - expected_f1) <= 0.02, (
        f"noisy f1 {measured_f1:.4f} vs expected {expected_f1:.4f}"
    )
    assert abs(measured_score - expected_score) <= 2.0, (
        f"noisy score {measured_score:.3f} vs expected {expected_score:.3f}"
    )


# --------------------------------------------------- 5. metric oracle parity


def _oracle_first_error_metrics(golds, predictions):
    err = [g == p for g, p in zip(golds, predictions) if g is not ALL_CORRECT]
    cor = [p is ALL_CORRECT for g, p in zip(golds, predictions) if g is ALL_CORRECT]
    a = sum(err) / len(err)
    b = sum(cor) / len(cor)
    return a, b, _harmonic(a, b)


def _oracle_class_f1(gold_flat, pred_flat, positive):
    tp = sum(1 for g, p in zip(gold_flat, pred_flat) if g == positive and p == positive)
    fp = sum(1 for g, p in zip(gold_flat, pred_flat) if g != positive and p == positive)
    fn = sum(1 for g, p in zip(gold_flat, pred_flat) if g == positive and p != positive)
    denom = 2 * tp + fp + fn
    return 2 * tp / denom if denom else 0.0


@pytest.mark.acceptance("metric_bruteforce_parity")
def test_metrics_match_bruteforce_on_100_random_sets():
    from prmkit.core import ReasoningTrace
    from prmkit.evaluator import FirstErrorCase, StepJudgmentCase

    rng = random.Random(555)
    checked_fe = checked_sj = 0
    while checked_fe < 100 or checked_sj < 100:
        n = rng.randint(3, 30)
        golds, fe_cases, fe_preds = [], [], []
        for i in range(n):
            steps = rng.randint(1, 6)
            trace = ReasoningTrace(
                question="q?", steps=tuple(f"s{j}" for j in range(steps)), source_id=f"c{i}"
            )
            gold = ALL_CORRECT if rng.random() < 0.5 else rng.randint(1, steps)
            golds.append(gold)
            fe_cases.append(FirstErrorCase(trace=trace, gold_first_error=gold))
            fe_preds.append(ALL_CORRECT if rng.random() < 0.4 else rng.randint(1, steps))
        has_both = any(g is ALL_CORRECT for g in golds) and any(
            g is not ALL_CORRECT for g in golds
        )
        if has_both and checked_fe < 100:
            want = _oracle_first_error_metrics(golds, fe_preds)
            got = processbench_f1(fe_cases, fe_preds)
            assert abs(got["acc_error"] - want[0]) < 1e-9
            assert abs(got["acc_correct"] - want[1]) < 1e-9
            assert abs(got["f1"] - want[2]) < 1e-9
            checked_fe += 1

        sj_cases, sj_preds = [], []
        for i in range(rng.randint(1, 15)):
            steps = rng.randint(1, 8)
            labels = tuple(rng.randint(0, 1) for _ in range(steps))
            trace = ReasoningTrace(
                question="q?", steps=tuple(f"s{j}" for j in range(steps)), source_id=f"s{i}"
            )
            sj_cases.append(StepJudgmentCase(trace=trace, step_labels=labels, category_tag="NR"))
            sj_preds.append([rng.randint(0, 1) for _ in range(steps)])
        gold_flat = [l for c in sj_cases for l in c.step_labels]
        pred_flat = [p for ps in sj_preds for p in ps]
        if 0 in gold_flat and 1 in gold_flat and checked_sj < 100:
            got = prmscore(sj_cases, sj_preds)
            want_err = _oracle_class_f1(gold_flat, pred_flat, 0)
            want_cor = _oracle_class_f1(gold_flat, pred_flat, 1)
            assert abs(got["f1_error_class"] - want_err) < 1e-9
            assert abs(got["f1_correct_class"] - want_cor) < 1e-9
            assert abs(got["prmscore"] - 100.0 * (want_err + want_cor) / 2) < 1e-9
            checked_sj += 1


# ------------------------------------------------ 6. guided search dominance


def _simulate_pass_at_one(problems, error_rate: float, k: int, trials: int, seed: int) -> float:
    """Monte-Carlo oracle for single unguided rollouts, modeled from scratch.

    Per step every candidate is independently defective with the given odds,
    except one uniformly chosen slot is forced clean when all come out bad.
    Lane 0 succeeds only if its candidate stays clean at every step.
    """
    rng = random.Random(seed)
    hits = 0
    for t in range(trials):
        problem = problems[t % len(problems)]
        clean_run = True
        for _ in range(problem.steps_required):
            flags = [rng.random() < error_rate for _ in range(k)]
            forced = rng.randrange(k)
            if all(flags):
                flags[forced] = False
            if flags[0]:
                clean_run = False
        hits += int(clean_run)
    return hits / trials


@pytest.mark.acceptance("guided_search_dominates")
def test_guided_search_beats_single_rollouts():
    started = time.perf_counter()
    problems = make_search_problems(40, seed=21, min_steps=2, max_steps=4)
    config = SearchConfig(k=8, max_steps=10)
    backend = mock_oracle_backend()

    def graded(answer: str | None, gold: str) -> bool:
        return answer is not None and answers_equivalent(answer, gold)

    def measure(error_rate: float, guided_seeds: int, rollout_seeds: int):
        guided_hits = guided_total = 0
        for s in range(guided_seeds):
            policy = SyntheticPolicyBackend(problems, error_rate=error_rate, seed=s)
            for problem in problems:
                transcript = guided_greedy_search(policy, backend, problem.question, config)
                guided_hits += int(graded(transcript.final_answer, problem.gold_answer))
                guided_total += 1
        single_hits = single_total = 0
        for s in range(rollout_seeds):
            policy = SyntheticPolicyBackend(problems, error_rate=error_rate, seed=10_000 + s)
            for problem in problems:
                lane = unguided_rollouts(policy, problem.question, config, 1)[0]
                single_hits += int(graded(lane.final_answer, problem.gold_answer))
                single_total += 1
        return guided_hits / guided_total, single_hits / single_total

    prm_at_8, pass_at_1 = measure(error_rate=0.5, guided_seeds=3, rollout_seeds=100)
    simulated = _simulate_pass_at_one(problems, error_rate=0.5, k=8, trials=10_000, seed=4242)

    assert prm_at_8 >= pass_at_1, "reward guidance must never lose to a blind rollout"
    assert prm_at_8 - pass_at_1 > 0.05, (
        f"expected a strict gap at 50% candidate error rate, got "
        f"prm@8={prm_at_8:.3f} pass@1={pass_at_1:.3f}"
    )
    assert abs(pass_at_1 - simulated) < 0.1, (
        f"measured pass@1 {pass_at_1:.3f} disagrees with simulation {simulated:.3f}"
    )

    easy_prm, easy_pass = measure(error_rate=0.0, guided_seeds=1, rollout_seeds=5)
    assert easy_prm >= easy_pass
    assert easy_prm == easy_pass == 1.0

    elapsed = time.perf_counter() - started
    assert elapsed < 30.0, f"dominance check took {elapsed:.1f}s"


# ------------------------------------------------------- 7. byte determinism


def _run_and_collect(argv: list[str], artifacts: list[Path], capsys) -> dict[Path, bytes]:
    for path in artifacts:
        if path.exists():
            path.unlink()
    rc = main(argv)
    capsys.readouterr()
    assert rc == 0, f"command failed: {argv}"
    return {path: path.read_bytes() for path in artifacts}


@pytest.mark.acceptance("cli_byte_determinism")
def test_every_subcommand_is_byte_deterministic(tmp_path: Path, capsys):
    fixtures = write_fixture_files(tmp_path / "fx", n_traces=30, n_problems=6, seed=17)
    out = tmp_path / "out"
    out.mkdir()

    pb_report = out / "pb.json"
    sj_report = out / "sj.json"
    commands: list[tuple[list[str], list[Path]]] = [
        (
            ["build-dataset", "--prm800k", str(fixtures["prm800k"]),
             "--mistral", str(fixtures["mistral"]), "--verdicts", str(fixtures["verdicts"]),
             "--out", str(out / "corpus.jsonl"), "--rejects", str(out / "rejects.jsonl"),
             "--sample-rate", "0.8", "--seed", "3"],
            [out / "corpus.jsonl", out / "rejects.jsonl"],
        ),
        (
            ["emit-prompts", "--prm800k", str(fixtures["prm800k"]),
             "--mistral", str(fixtures["mistral"]), "--out", str(out / "prompts.jsonl"),
             "--sample-rate", "0.5", "--seed", "3"],
            [out / "prompts.jsonl"],
        ),
        (
            ["score", "--traces", str(fixtures["traces"]), "--out", str(out / "scores.jsonl")],
            [out / "scores.jsonl"],
        ),
        (
            ["eval-processbench", "--cases", str(fixtures["first_error_cases"]),
             "--out", str(pb_report), "--label", "det-a", "--data-size", "100"],
            [pb_report],
        ),
        (
            ["eval-prmbench", "--cases", str(fixtures["step_cases"]),
             "--out", str(sj_report), "--label", "det-b", "--data-size", "400"],
            [sj_report],
        ),
        (
            ["search", "--problems", str(fixtures["problems"]),
             "--out", str(out / "transcripts.jsonl"), "--summary", str(out / "summary.json"),
             "--k", "4", "--with-baselines", "--seed", "11"],
            [out / "transcripts.jsonl", out / "summary.json"],
        ),
    ]

    for argv, artifacts in commands:
        first = _run_and_collect(argv, artifacts, capsys)
        second = _run_and_collect(argv, artifacts, capsys)
        assert first == second, f"{argv[0]} output changed between identical runs"

    report_argv = ["report", str(pb_report), str(sj_report), "--out-dir", str(out / "cmp")]
    report_artifacts = [
        out / "cmp" / "comparison.csv",
        out / "cmp" / "comparison.txt",
        out / "cmp" / "scaling.png",
        out / "cmp" / "manifest.json",
    ]
    first = _run_and_collect(report_argv, report_artifacts, capsys)
    second = _run_and_collect(report_argv, report_artifacts, capsys)
    assert first == second, "report output changed between identical runs"
