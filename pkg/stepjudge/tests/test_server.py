"""Wire-protocol conformance, driven by the scoring client package itself."""

import json

import pytest
import requests
import torch

from stepjudge.errors import TemplateError, VocabError
from stepjudge.model import ModelConfig, StepJudgeModel, save_checkpoint
from stepjudge.server import handle_envelope, load_runtime
from stepjudge.vocab import Vocab


def _envelope(layout, step_text, version=None):
    return {
        "queries": [
            {
                "template_version": version or layout.version,
                "segments": ["Judge the following reasoning step.", step_text],
                "mask_slots": ["math", "consistency"],
                "filled": {},
            }
        ]
    }


def test_scoring_client_round_trip(server_url):
    from prmkit.remote import remote_backend
    from prmkit.scorer import score_step

    backend = remote_backend(server_url)
    clean = score_step(
        backend,
        "Judge the following reasoning step.",
        (),
        "Collect like terms and reduce. (case 9000)",
    )
    assert (clean.math_label, clean.consistency_label) == (1, 1)
    assert clean.reward > 0.5

    math_slip = score_step(
        backend,
        "Judge the following reasoning step.",
        (),
        "Collect like terms and reduce. [ERRMATH] (case 9001)",
    )
    assert math_slip.math_label == 0
    assert math_slip.consistency_label == 1
    assert math_slip.reward < 0.5

    detour = score_step(
        backend,
        "Judge the following reasoning step.",
        (),
        "Collect like terms and reduce. [SUBOPT] (case 9002)",
    )
    assert (detour.math_label, detour.consistency_label) == (1, 1)
    assert detour.reward < 0.5

    # prior steps ride along as extra segments and must not sway the verdict
    with_history = score_step(
        backend,
        "Judge the following reasoning step.",
        (
            "Factor the quadratic and keep both roots.",
            "Apply the binomial identity to the left side. [ERRMATH]",
        ),
        "Collect like terms and reduce. [ERRCONS] (case 9003)",
    )
    assert with_history.math_label == 1
    assert with_history.consistency_label == 0
    assert with_history.reward < 0.5


def test_one_forward_pass_answers_both_verdicts(runtime, layout):
    before = runtime.forward_calls
    status, payload = handle_envelope(runtime, _envelope(layout, "Collect like terms."))
    assert status == 200
    assert runtime.forward_calls == before + 1
    (result,) = payload["results"]
    assert set(result) == {"math", "consistency"}
    for slot in ("math", "consistency"):
        assert result[slot]["p_pos"] + result[slot]["p_neg"] == pytest.approx(1.0)


def test_template_mismatch_refused_before_any_model_work(runtime, layout, server_url):
    before = runtime.forward_calls
    reply = requests.post(
        f"{server_url}/v1/score",
        json=_envelope(layout, "Collect like terms.", version="pt-0000000000000000"),
        timeout=10,
    )
    assert reply.status_code == 400
    assert reply.json()["error"]["category"] == "template_mismatch"
    assert runtime.forward_calls == before, "the model ran despite the version gate"


def test_mismatch_surfaces_as_protocol_error_without_retries(server_url):
    from prmkit.errors import ProtocolError
    from prmkit.remote import remote_backend
    from prmkit.scorer import MaskedQuery

    backend = remote_backend(server_url)
    query = MaskedQuery(
        segments=("q", "s"), mask_slots=("math", "consistency"),
        template_version="pt-ffffffffffffffff",
    )
    with pytest.raises(ProtocolError, match="template_mismatch"):
        backend.evaluate(query)
    assert backend.telemetry.requests == 1
    assert backend.telemetry.retries == 0


def test_malformed_requests_are_bad_request(server_url, layout):
    base = f"{server_url}/v1/score"
    assert requests.post(base, data=b"not json", timeout=10).status_code == 400

    reply = requests.post(base, json={"queries": "x"}, timeout=10)
    assert reply.status_code == 400
    assert reply.json()["error"]["category"] == "bad_request"

    envelope = _envelope(layout, "step")
    envelope["queries"][0]["segments"] = ["only-question"]
    reply = requests.post(base, json=envelope, timeout=10)
    assert reply.status_code == 400

    envelope = _envelope(layout, "step")
    envelope["queries"][0]["mask_slots"] = ["math", "math"]
    assert requests.post(base, json=envelope, timeout=10).status_code == 400

    assert requests.post(f"{server_url}/other", json={}, timeout=10).status_code == 404
    assert requests.get(base, timeout=10).status_code == 405


def test_oversized_envelopes_are_chunked_internally(trained, layout):
    from stepjudge.server import Runtime
    from stepjudge.vocab import LabelTokenMap

    model, vocab, _ = trained
    small = Runtime(
        model=model, vocab=vocab, label_map=LabelTokenMap.from_vocab(vocab),
        layout=layout, max_batch=4,
    )
    body = {"queries": _envelope(layout, "step one")["queries"] * 9}
    status, payload = handle_envelope(small, body)
    assert status == 200
    assert len(payload["results"]) == 9
    assert small.forward_calls == 3


def test_identical_envelopes_yield_identical_bytes(server_url, layout):
    body = json.dumps(_envelope(layout, "Collect like terms. [ERRCONS]")).encode()
    replies = [
        requests.post(
            f"{server_url}/v1/score", data=body,
            headers={"Content-Type": "application/json"}, timeout=10,
        ).content
        for _ in range(2)
    ]
    assert replies[0] == replies[1]


def test_startup_rejects_incomplete_vocab(tmp_path, layout):
    from conftest import TEMPLATE_PATH

    crippled = Vocab(id_to_token=("<pad>", "<unk>", "<mask>"))
    torch.manual_seed(0)
    model = StepJudgeModel(ModelConfig(vocab_size=len(crippled)))
    path = tmp_path / "bad.pt"
    save_checkpoint(path, model, crippled, layout.version)
    with pytest.raises(VocabError, match="required token"):
        load_runtime(str(path), str(TEMPLATE_PATH))


def test_startup_rejects_template_drift(tmp_path, trained, layout):
    from conftest import TEMPLATE_PATH

    model, vocab, _ = trained
    path = tmp_path / "stale.pt"
    save_checkpoint(path, model, vocab, "pt-1111111111111111")
    with pytest.raises(TemplateError, match="trained for template"):
        load_runtime(str(path), str(TEMPLATE_PATH))
