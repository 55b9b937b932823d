import threading
from pathlib import Path

import pytest

from stepjudge.data import synthesize_corpus
from stepjudge.server import Runtime, make_server
from stepjudge.template import load_layout
from stepjudge.training import TOY_PROFILE, train_model

TEMPLATE_PATH = Path(__file__).resolve().parents[1] / "templates" / "default.json"


@pytest.fixture(scope="session")
def layout():
    return load_layout(TEMPLATE_PATH)


@pytest.fixture(scope="session")
def corpus_5k():
    return synthesize_corpus(5000, seed=3)


@pytest.fixture(scope="session")
def trained(layout, corpus_5k):
    """One toy-profile training run shared by the accuracy gate and the
    server tests; retraining per test would blow the time budget."""
    model, vocab, metrics = train_model(corpus_5k, layout, TOY_PROFILE)
    return model, vocab, metrics


@pytest.fixture()
def runtime(trained, layout):
    model, vocab, _ = trained
    from stepjudge.vocab import LabelTokenMap

    return Runtime(
        model=model,
        vocab=vocab,
        label_map=LabelTokenMap.from_vocab(vocab),
        layout=layout,
        max_batch=16,
    )


@pytest.fixture()
def server_url(runtime):
    server = make_server(runtime, port=0)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        yield f"http://127.0.0.1:{server.server_port}"
    finally:
        server.shutdown()
        server.server_close()
