"""HTTP scoring server speaking the masked-query wire protocol.

POST /v1/score takes {"queries": [...]} and answers {"results": [...]}, one
result per query with a {p_pos, p_neg} pair per masked slot. The template
version of every query is checked against the loaded layout before the model
runs at all; a mismatch is a 400 with category "template_mismatch". Serving
is stateless and deterministic: the same envelope always yields the same
bytes.
"""

from __future__ import annotations

import argparse
import json
import threading
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Sequence

import torch

from .data import collate, IGNORE_INDEX, TrainingSample
from .errors import RequestError, StepjudgeError, TemplateError
from .model import StepJudgeModel, load_checkpoint
from .template import PromptLayout, load_layout
from .vocab import LabelTokenMap, Vocab

SCORE_PATH = "/v1/score"


@dataclass
class Runtime:
    """Everything one server process needs to answer queries."""

    model: StepJudgeModel
    vocab: Vocab
    label_map: LabelTokenMap
    layout: PromptLayout
    max_batch: int = 16
    forward_calls: int = 0

    _lock: threading.Lock = None  # type: ignore[assignment]

    def __post_init__(self) -> None:
        self._lock = threading.Lock()
        self.model.eval()

    def forward(self, ids: torch.Tensor, pad_mask: torch.Tensor) -> torch.Tensor:
        with self._lock, torch.no_grad():
            self.forward_calls += 1
            return self.model(ids, pad_mask)


def load_runtime(
    model_path: str, template_path: str, *, device: str = "cpu", max_batch: int = 16
) -> Runtime:
    layout = load_layout(template_path)
    model, vocab, trained_version, _ = load_checkpoint(model_path)
    if trained_version != layout.version:
        raise TemplateError(
            f"checkpoint was trained for template {trained_version} but the "
            f"server is loading {layout.version}"
        )
    model.to(device)
    # raises VocabError when the checkpoint's vocabulary lacks a required token
    label_map = LabelTokenMap.from_vocab(vocab)
    return Runtime(
        model=model, vocab=vocab, label_map=label_map, layout=layout, max_batch=max_batch
    )


def _validate_query(runtime: Runtime, query: object, index: int) -> tuple[str, tuple, tuple, dict]:
    if not isinstance(query, dict):
        raise RequestError(f"queries[{index}] must be an object")
    try:
        version = query["template_version"]
        segments = query["segments"]
        mask_slots = query["mask_slots"]
    except KeyError as exc:
        raise RequestError(f"queries[{index}] missing field {exc.args[0]!r}") from exc
    filled = query.get("filled", {})
    if not isinstance(segments, list) or not all(isinstance(s, str) for s in segments):
        raise RequestError(f"queries[{index}].segments must be a list of strings")
    if not isinstance(mask_slots, list) or not mask_slots:
        raise RequestError(f"queries[{index}].mask_slots must be a non-empty list")
    if len(set(mask_slots)) != len(mask_slots):
        raise RequestError(f"queries[{index}] repeats a mask slot")
    if not isinstance(filled, dict):
        raise RequestError(f"queries[{index}].filled must be an object")
    overlap = set(mask_slots) & set(filled)
    if overlap:
        raise RequestError(f"queries[{index}] masks and fills {sorted(overlap)}")
    return version, tuple(segments), tuple(mask_slots), dict(filled)


def _score_batch(runtime: Runtime, rendered: list[tuple[str, tuple[str, ...]]]) -> list[dict]:
    """One forward pass for up to max_batch rendered queries; every masked
    slot of a query is read out of that single pass."""
    label_map = runtime.label_map
    samples = []
    for text, mask_slots in rendered:
        ids = runtime.vocab.encode(text)
        positions = [i for i, t in enumerate(ids) if t == label_map.mask_id]
        if len(positions) != len(mask_slots):
            raise RequestError(
                f"rendered {len(positions)} mask tokens for {len(mask_slots)} slots"
            )
        samples.append(
            TrainingSample(token_ids=tuple(ids), targets=(IGNORE_INDEX,) * len(ids), trace_ref="")
        )
    ids, _, pad_mask = collate(samples, label_map.pad_id)
    logits = runtime.forward(ids, pad_mask)
    results = []
    for row, (text, mask_slots) in enumerate(rendered):
        token_row = samples[row].token_ids
        positions = [i for i, t in enumerate(token_row) if t == label_map.mask_id]
        per_slot = {}
        # layout order, not request order: slot k of the line is mask k
        ordered = [slot for slot in runtime.layout.slots if slot in mask_slots]
        for slot, position in zip(ordered, positions):
            pair = torch.softmax(
                torch.stack(
                    (logits[row, position, label_map.pos_id],
                     logits[row, position, label_map.neg_id])
                ),
                dim=0,
            )
            p_pos = float(pair[0])
            per_slot[slot] = {"p_pos": p_pos, "p_neg": 1.0 - p_pos}
        results.append(per_slot)
    return results


def handle_envelope(runtime: Runtime, body: object) -> tuple[int, dict]:
    """Pure request handler: (http status, reply payload)."""
    try:
        if not isinstance(body, dict) or not isinstance(body.get("queries"), list):
            raise RequestError('body must be {"queries": [...]}')
        queries = body["queries"]
        if not queries:
            raise RequestError("queries must not be empty")
        parsed = [_validate_query(runtime, q, i) for i, q in enumerate(queries)]
        # version gate comes before any rendering or model work
        for version, _, _, _ in parsed:
            if version != runtime.layout.version:
                raise RequestError(
                    f"query built for template {version}, server runs {runtime.layout.version}",
                    category="template_mismatch",
                )
        rendered = [
            (runtime.layout.render(segments, mask_slots, filled), mask_slots)
            for _, segments, mask_slots, filled in parsed
        ]
    except RequestError as exc:
        return 400, {"error": {"category": exc.category, "message": str(exc)}}

    try:
        results: list[dict] = []
        for start in range(0, len(rendered), runtime.max_batch):
            results.extend(_score_batch(runtime, rendered[start : start + runtime.max_batch]))
    except RequestError as exc:
        return 400, {"error": {"category": exc.category, "message": str(exc)}}
    except Exception as exc:  # noqa: BLE001 - surfaced as a 500, not swallowed
        return 500, {"error": {"category": "internal", "message": str(exc)}}
    return 200, {"results": results}


class _Handler(BaseHTTPRequestHandler):
    runtime: Runtime = None  # type: ignore[assignment]

    def _reply(self, status: int, payload: dict) -> None:
        raw = json.dumps(payload, sort_keys=True).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(raw)))
        self.end_headers()
        self.wfile.write(raw)

    def do_POST(self) -> None:  # noqa: N802 - http.server API
        if self.path != SCORE_PATH:
            self._reply(404, {"error": {"category": "not_found", "message": self.path}})
            return
        try:
            length = int(self.headers.get("Content-Length", "0"))
            body = json.loads(self.rfile.read(length).decode("utf-8"))
        except ValueError:
            self._reply(400, {"error": {"category": "bad_request", "message": "body is not JSON"}})
            return
        status, payload = handle_envelope(self.runtime, body)
        self._reply(status, payload)

    def do_GET(self) -> None:  # noqa: N802 - http.server API
        self._reply(405, {"error": {"category": "method_not_allowed", "message": self.path}})

    def log_message(self, format: str, *args: object) -> None:  # noqa: A002
        pass


def make_server(runtime: Runtime, host: str = "127.0.0.1", port: int = 0) -> ThreadingHTTPServer:
    handler = type("BoundHandler", (_Handler,), {"runtime": runtime})
    return ThreadingHTTPServer((host, port), handler)


def main(argv: Sequence[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description="serve step-judgment scoring over HTTP")
    parser.add_argument("--model", required=True, help="trained checkpoint")
    parser.add_argument("--template", required=True, help="template JSON file")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8808)
    parser.add_argument("--device", default="cpu")
    parser.add_argument("--max-batch", type=int, default=16)
    args = parser.parse_args(argv)

    try:
        runtime = load_runtime(
            args.model, args.template, device=args.device, max_batch=args.max_batch
        )
    except (StepjudgeError, OSError) as exc:
        print(f"startup failed: {exc}")
        return 1
    server = make_server(runtime, args.host, args.port)
    print(f"serving template {runtime.layout.version} on {args.host}:{server.server_port}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
