from __future__ import annotations

from pathlib import Path

import pytest
from hypothesis import given
from hypothesis import strategies as st

from prmkit import jsonl
from prmkit.core import GoldKind, GoldSourceLabel, ReasoningTrace, StepLabelVector
from prmkit.dataset import (
    NEEDS_JUDGE,
    JudgeVerdict,
    LabeledStepRecord,
    Provenance,
    RawStepRecord,
    Rejected,
    VerdictStore,
    audit_records,
    build_corpus,
    emit_judge_prompt,
    filter_judged_prm800k,
    filter_mc,
    label_records,
    map_prm800k,
    parse_judge_response,
    prompt_id_for,
    read_corpus,
    read_raw_records,
    records_needing_verdicts,
    select_mc_judged,
)
from prmkit.errors import ParseError, UsageError, ValidationError
from prmkit.synthetic import make_raw_streams, raw_stream_dicts, verdict_response

_ALL_TRIPLES = [(a, b, c) for a in (0, 1) for b in (0, 1) for c in (0, 1)]


def _verdict(triple: tuple[int, int, int]) -> JudgeVerdict:
    return JudgeVerdict(*triple)


def _raw(ref: str, idx: int, gold: GoldSourceLabel, text: str = "some step") -> RawStepRecord:
    return RawStepRecord(trace_ref=ref, step_index=idx, step_text=text, gold=gold)


# ------------------------------------------------------------- mapping rules


def test_map_prm800k_rule_table():
    assert map_prm800k(1) == StepLabelVector(1, 1, 1)
    assert map_prm800k(0) == StepLabelVector(1, 1, 0)
    assert map_prm800k(-1) is NEEDS_JUDGE
    with pytest.raises(ValidationError):
        map_prm800k(2)


def test_filter_judged_prm800k_all_verdicts():
    for triple in _ALL_TRIPLES:
        result = filter_judged_prm800k(-1, _verdict(triple))
        if triple == (1, 1, 1):
            assert isinstance(result, Rejected), f"verdict {triple} must reject"
            assert result.rule == "prm800k_judged_all_ones"
        else:
            assert result == StepLabelVector(*triple), f"verdict {triple} must keep"


def test_filter_judged_prm800k_only_for_minus_one():
    with pytest.raises(UsageError):
        filter_judged_prm800k(0, _verdict((1, 1, 0)))


def test_filter_mc_all_verdicts_both_signs():
    for sign in ("+", "-"):
        for triple in _ALL_TRIPLES:
            result = filter_mc(sign, _verdict(triple))
            if sign == "+" and triple == (1, 1, 1):
                assert result == StepLabelVector(1, 1, 1)
            elif sign == "+":
                assert isinstance(result, Rejected) and result.rule == "mc_plus_not_all_ones"
            elif triple == (1, 1, 1):
                assert isinstance(result, Rejected) and result.rule == "mc_minus_all_ones"
            else:
                assert result == StepLabelVector(*triple)
    with pytest.raises(UsageError):
        filter_mc("?", _verdict((1, 1, 1)))


# --------------------------------------------------------- judge prompt/parse


def test_emit_judge_prompt_contains_context_sections():
    trace = ReasoningTrace(question="Solve x + 1 = 3.", steps=("Subtract 1.", "x = 2."))
    prompt = emit_judge_prompt(trace, 2)
    assert "Math question:\nSolve x + 1 = 3." in prompt
    assert "Step 1: Subtract 1." in prompt
    assert "Current step (step 2):\nx = 2." in prompt
    assert "{context}" not in prompt
    assert "Score A:" in prompt and "Score C:" in prompt

    first = emit_judge_prompt(trace, 1)
    assert "Previous steps:\n(none)" in first


def test_parse_judge_response_happy_path():
    verdict = parse_judge_response(verdict_response(_verdict((1, 0, 1)), reasoning="Sign error."))
    assert (verdict.score_a, verdict.score_b, verdict.score_c) == (1, 0, 1)
    assert "Sign error." in verdict.reasoning


def test_parse_judge_response_uses_last_occurrence():
    text = (
        "Thinking: if wrong, Score A:\n0 would apply here.\n"
        "Final answers:\nScore A:\n1\nScore B:\n1\nScore C:\n0\n"
    )
    verdict = parse_judge_response(text)
    assert (verdict.score_a, verdict.score_b, verdict.score_c) == (1, 1, 0)


def test_parse_judge_response_rejects_out_of_domain_value():
    text = "Final answers:\nScore A:\n1\nScore B:\n2\nScore C:\n1\n"
    with pytest.raises(ParseError) as info:
        parse_judge_response(text)
    assert info.value.field == "score_b"


def test_parse_judge_response_rejects_missing_block():
    with pytest.raises(ParseError) as info:
        parse_judge_response("Score A:\n1\nScore C:\n0\n")
    assert info.value.field == "score_b"


@given(
    triple=st.tuples(st.integers(0, 1), st.integers(0, 1), st.integers(0, 1)),
    reasoning=st.text(max_size=80).filter(lambda s: "Score" not in s and "Final answers:" not in s),
)
def test_parse_judge_response_roundtrip(triple, reasoning):
    verdict = parse_judge_response(verdict_response(_verdict(triple), reasoning=reasoning))
    assert (verdict.score_a, verdict.score_b, verdict.score_c) == triple


# ------------------------------------------------------------ record plumbing


def test_labeled_record_provenance_invariants():
    good = LabeledStepRecord(
        trace_ref="t",
        step_index=1,
        step_text="s",
        labels=StepLabelVector(1, 1, 1),
        provenance=Provenance.HUMAN_MAPPED,
        gold=GoldSourceLabel.prm800k(1),
    )
    assert LabeledStepRecord.from_dict(good.to_dict()) == good
    with pytest.raises(ValidationError):
        LabeledStepRecord(
            trace_ref="t",
            step_index=1,
            step_text="s",
            labels=StepLabelVector(1, 1, 1),
            provenance=Provenance.JUDGE_LABELED,
            gold=GoldSourceLabel.prm800k(-1),
        )


def test_verdict_store_roundtrip_and_failures(tmp_path: Path):
    rows = [
        {"prompt_id": prompt_id_for("t-1", 2), "response": verdict_response(_verdict((1, 0, 1)))},
        {"prompt_id": prompt_id_for("t-1", 3), "response": "no scores here"},
    ]
    path = tmp_path / "verdicts.jsonl"
    jsonl.write_records(path, rows)
    store = VerdictStore.from_jsonl(path)
    assert len(store) == 1
    parsed = store.get("t-1", 2)
    assert parsed is not None
    assert parsed.as_label_vector() == StepLabelVector(1, 0, 1)
    assert store.get("t-1", 3) is None
    assert store.failure("t-1", 3) is not None


def test_select_mc_judged_depends_on_identity_not_order():
    records = [
        _raw("m-2", 1, GoldSourceLabel.mistral_mc("+")),
        _raw("m-1", 1, GoldSourceLabel.mistral_mc("-")),
        _raw("m-1", 2, GoldSourceLabel.mistral_mc("+")),
    ]
    forward = select_mc_judged(records, sample_rate=0.5, seed=11)
    backward = select_mc_judged(list(reversed(records)), sample_rate=0.5, seed=11)
    assert forward == backward
    assert select_mc_judged(records, 1.0, 0) == {(r.trace_ref, r.step_index) for r in records}
    assert select_mc_judged(records, 0.0, 0) == set()


def test_records_needing_verdicts_covers_minus_one_and_sampled():
    prm = [
        _raw("p-1", 1, GoldSourceLabel.prm800k(1)),
        _raw("p-1", 2, GoldSourceLabel.prm800k(-1)),
    ]
    mc = [_raw("m-1", 1, GoldSourceLabel.mistral_mc("+"))]
    need = records_needing_verdicts(prm, mc, sample_rate=1.0, seed=0)
    assert {(r.trace_ref, r.step_index) for r in need} == {("p-1", 2), ("m-1", 1)}
    none_sampled = records_needing_verdicts(prm, mc, sample_rate=0.0, seed=0)
    assert {(r.trace_ref, r.step_index) for r in none_sampled} == {("p-1", 2)}


# ------------------------------------------------------------- label_records


def _mini_streams():
    prm = [
        _raw("p-1", 1, GoldSourceLabel.prm800k(1)),
        _raw("p-1", 2, GoldSourceLabel.prm800k(0)),
        _raw("p-1", 3, GoldSourceLabel.prm800k(-1)),
        _raw("p-2", 1, GoldSourceLabel.prm800k(-1)),
        _raw("p-2", 2, GoldSourceLabel.prm800k(-1)),
    ]
    mc = [
        _raw("m-1", 1, GoldSourceLabel.mistral_mc("+")),
        _raw("m-1", 2, GoldSourceLabel.mistral_mc("-")),
    ]
    store = VerdictStore.from_mapping(
        {
            ("p-1", 3): _verdict((1, 0, 1)),  # kept, judge labeled
            ("p-2", 1): _verdict((1, 1, 1)),  # rejected: judge found nothing wrong
            # ("p-2", 2) deliberately missing -> unresolved
            ("m-1", 1): _verdict((1, 1, 1)),  # '+' kept
            ("m-1", 2): _verdict((1, 1, 1)),  # '-' rejected
        }
    )
    return prm, mc, store


def test_label_records_applies_all_rules():
    prm, mc, store = _mini_streams()
    result = label_records(prm, mc, store, sample_rate=1.0, seed=0)
    by_key = {(r.trace_ref, r.step_index): r for r in result.kept}

    assert by_key[("p-1", 1)].labels == StepLabelVector(1, 1, 1)
    assert by_key[("p-1", 1)].provenance is Provenance.HUMAN_MAPPED
    assert by_key[("p-1", 2)].labels == StepLabelVector(1, 1, 0)
    assert by_key[("p-1", 3)].labels == StepLabelVector(1, 0, 1)
    assert by_key[("p-1", 3)].provenance is Provenance.JUDGE_LABELED
    assert by_key[("m-1", 1)].labels == StepLabelVector(1, 1, 1)
    assert by_key[("m-1", 1)].provenance is Provenance.MC_FILTERED
    assert ("p-2", 1) not in by_key and ("m-1", 2) not in by_key and ("p-2", 2) not in by_key

    status = {(e.record.trace_ref, e.record.step_index): (e.status, e.rule) for e in result.sidecar}
    assert status[("p-2", 1)] == ("rejected", "prm800k_judged_all_ones")
    assert status[("p-2", 2)] == ("unresolved", "verdict_missing")
    assert status[("m-1", 2)] == ("rejected", "mc_minus_all_ones")


def test_label_records_accounting_identity():
    prm, mc, store = _mini_streams()
    result = label_records(prm, mc, store, sample_rate=1.0, seed=0)
    for stats in (result.stats.prm800k, result.stats.mistral):
        assert stats.kept + stats.rejected + stats.unresolved == stats.total


def test_label_records_unsampled_mc_is_unresolved():
    prm, mc, store = _mini_streams()
    result = label_records(prm, mc, store, sample_rate=0.0, seed=0)
    assert result.stats.mistral.kept == 0
    assert result.stats.mistral.unresolved == len(mc)
    rules = {e.rule for e in result.sidecar if e.record.gold.kind is GoldKind.MISTRAL_MC}
    assert rules == {"not_sampled"}


def test_label_records_unparseable_verdict_is_unresolved(tmp_path: Path):
    rows = [{"prompt_id": prompt_id_for("p-1", 3), "response": "garbled"}]
    path = tmp_path / "verdicts.jsonl"
    jsonl.write_records(path, rows)
    store = VerdictStore.from_jsonl(path)
    prm = [
        _raw("p-1", 1, GoldSourceLabel.prm800k(1)),
        _raw("p-1", 2, GoldSourceLabel.prm800k(0)),
        _raw("p-1", 3, GoldSourceLabel.prm800k(-1)),
    ]
    result = label_records(prm, [], store)
    entries = {e.rule for e in result.sidecar}
    assert entries == {"verdict_unparseable"}
    assert result.stats.prm800k.unresolved == 1


def test_label_records_truncation_drops_after_first_gold_error():
    prm = [
        _raw("p-1", 1, GoldSourceLabel.prm800k(1)),
        _raw("p-1", 2, GoldSourceLabel.prm800k(-1)),
        _raw("p-1", 3, GoldSourceLabel.prm800k(1)),
    ]
    store = VerdictStore.from_mapping({("p-1", 2): _verdict((0, 1, 1))})
    result = label_records(prm, [], store, truncate_after_first_error=True)
    kept_keys = {(r.trace_ref, r.step_index) for r in result.kept}
    assert kept_keys == {("p-1", 1), ("p-1", 2)}
    truncated = [e for e in result.sidecar if e.rule == "after_first_error"]
    assert [(e.record.trace_ref, e.record.step_index) for e in truncated] == [("p-1", 3)]


def test_audit_records_flags_gold_violations():
    bad = LabeledStepRecord(
        trace_ref="t",
        step_index=1,
        step_text="s",
        labels=StepLabelVector(1, 1, 1),
        provenance=Provenance.HUMAN_MAPPED,
        gold=GoldSourceLabel.prm800k(1),
    )
    object.__setattr__(bad, "labels", StepLabelVector(0, 1, 1))  # corrupt post-validation
    violations = audit_records([bad])
    assert violations and "t#1" in violations[0]


# -------------------------------------------------------------- file plumbing


def test_read_raw_records_validates_stream(tmp_path: Path):
    path = tmp_path / "raw.jsonl"
    rows = [
        {
            "trace_ref": "p-1",
            "question": "q",
            "step_index": 2,
            "step_text": "b",
            "gold": {"kind": "prm800k", "value": 1},
        },
        {
            "trace_ref": "p-1",
            "question": "q",
            "step_index": 1,
            "step_text": "a",
            "gold": {"kind": "prm800k", "value": 0},
        },
    ]
    jsonl.write_records(path, rows)
    records, traces = read_raw_records(path, GoldKind.PRM800K)
    assert [r.step_index for r in records] == [1, 2]
    assert traces["p-1"].steps == ("a", "b")

    jsonl.write_records(path, rows[:1])  # starts at step 2: not contiguous
    with pytest.raises(ValidationError):
        read_raw_records(path, GoldKind.PRM800K)

    bad_kind = dict(rows[0], gold={"kind": "mistral_mc", "value": "+"})
    jsonl.write_records(path, [bad_kind])
    with pytest.raises(ValidationError):
        read_raw_records(path, GoldKind.PRM800K)


def test_build_corpus_writes_readable_and_deterministic_files(tmp_path: Path):
    prm_records, mc_records, store, questions = make_raw_streams(40, seed=5)
    meta = {"tool_version": "test", "seed": 5}

    def run(suffix: str) -> tuple[bytes, bytes]:
        out = tmp_path / f"corpus{suffix}.jsonl"
        rej = tmp_path / f"rej{suffix}.jsonl"
        stats = build_corpus(
            prm_records, mc_records, store,
            out_path=out, rejects_path=rej, sample_rate=0.7, seed=5, meta=meta,
        )
        assert stats.prm800k.kept + stats.prm800k.rejected + stats.prm800k.unresolved == stats.prm800k.total
        assert stats.mistral.kept + stats.mistral.rejected + stats.mistral.unresolved == stats.mistral.total
        return out.read_bytes(), rej.read_bytes()

    first = run("-a")
    second = run("-b")
    assert first == second

    corpus = read_corpus(tmp_path / "corpus-a.jsonl")
    assert corpus, "corpus should keep some records"
    assert audit_records(corpus) == []
    assert jsonl.read_meta(tmp_path / "corpus-a.jsonl") == meta
