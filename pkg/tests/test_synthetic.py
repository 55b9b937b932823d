from __future__ import annotations

from pathlib import Path

import pytest

from prmkit.evaluator import ALL_CORRECT, KNOWN_TAGS
from prmkit.scorer import SlotDistribution, build_pass1_query, mock_oracle_backend
from prmkit.synthetic import (
    ERROR_MARKERS,
    LabelFlipBackend,
    make_benchmark_cases,
    make_raw_streams,
    write_fixture_files,
)
from prmkit.template import SLOT_CONSISTENCY, SLOT_MATH


def test_benchmark_cases_plant_at_most_one_marker():
    cases = make_benchmark_cases(100, seed=1)
    for case in cases:
        marked = [
            t for t, step in enumerate(case.trace.steps, start=1)
            if any(m in step for m in ERROR_MARKERS)
        ]
        if case.gold_first_error is ALL_CORRECT:
            assert marked == []
            assert all(l == 1 for l in case.step_labels)
        else:
            assert marked == [case.gold_first_error]
            wrong = [t for t, l in enumerate(case.step_labels, start=1) if l == 0]
            assert wrong == [case.gold_first_error]


def test_benchmark_cases_are_seed_deterministic():
    assert make_benchmark_cases(20, seed=7) == make_benchmark_cases(20, seed=7)
    assert make_benchmark_cases(20, seed=7) != make_benchmark_cases(20, seed=8)


def test_benchmark_cases_cycle_all_category_tags():
    cases = make_benchmark_cases(len(KNOWN_TAGS) * 2, seed=0)
    assert {c.category_tag for c in cases} == set(KNOWN_TAGS)


def test_label_flip_backend_flips_with_given_odds():
    inner = mock_oracle_backend()
    query = build_pass1_query("q?", (), "clean step")

    always = LabelFlipBackend(inner, flip_rate=1.0, seed=0)
    flipped = always.evaluate(query)
    assert flipped[SLOT_MATH].p_pos == pytest.approx(0.05)
    assert flipped[SLOT_CONSISTENCY].p_pos == pytest.approx(0.05)

    never = LabelFlipBackend(inner, flip_rate=0.0, seed=0)
    same = never.evaluate(query)
    assert same[SLOT_MATH].p_pos == pytest.approx(0.95)

    sometimes = LabelFlipBackend(inner, flip_rate=0.5, seed=123)
    n = 4000
    flips = 0
    for _ in range(n):
        dist = sometimes.evaluate(query)
        flips += sum(1 for s in (SLOT_MATH, SLOT_CONSISTENCY) if dist[s].p_pos < 0.5)
    rate = flips / (2 * n)
    assert abs(rate - 0.5) < 0.03


def test_label_flip_preserves_distribution_validity():
    inner = mock_oracle_backend()
    noisy = LabelFlipBackend(inner, flip_rate=1.0, seed=0)
    dist = noisy.evaluate(build_pass1_query("q?", (), "bad [ERRMATH]"))
    for _, slot_dist in dist.slots:
        assert isinstance(slot_dist, SlotDistribution)
        assert slot_dist.p_pos + slot_dist.p_neg == pytest.approx(1.0)


def test_raw_streams_cover_all_gold_kinds():
    prm, mc, store, questions = make_raw_streams(60, seed=11)
    prm_values = {r.gold.value for r in prm}
    assert prm_values == {-1, 0, 1}
    mc_values = {r.gold.value for r in mc}
    assert mc_values == {"+", "-"}
    assert len(store) > 0
    assert set(questions) == {r.trace_ref for r in prm} | {r.trace_ref for r in mc}


def test_fixture_files_write_and_are_deterministic(tmp_path: Path):
    first = write_fixture_files(tmp_path / "a", n_traces=15, n_problems=4, seed=2)
    second = write_fixture_files(tmp_path / "b", n_traces=15, n_problems=4, seed=2)
    for name in first:
        assert first[name].read_bytes() == second[name].read_bytes(), name
