"""HTTP clients for remote scorer and policy backends.

Requests carry the template version so mismatched servers fail fast. Client
errors (4xx) are never retried; timeouts, connection failures and 5xx replies
retry with exponential backoff up to a bound, and retry counts land in
telemetry.
"""

from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Sequence

import requests

from .errors import ProtocolError, TransportError, ValidationError
from .scorer import BackendCapabilities, MaskDistribution, MaskedQuery, ScorerBackend, SlotDistribution
from .search import PolicyBackend

log = logging.getLogger(__name__)

SCORE_PATH = "/v1/score"
PROPOSE_PATH = "/v1/propose"


@dataclass(frozen=True)
class RetryPolicy:
    max_retries: int = 5
    backoff_base: float = 0.1
    backoff_factor: float = 2.0
    max_backoff: float = 5.0

    def delay(self, attempt: int) -> float:
        return min(self.backoff_base * (self.backoff_factor**attempt), self.max_backoff)


@dataclass(frozen=True)
class BackendLimits:
    max_concurrency: int = 4
    max_batch_size: int = 16
    timeout: float = 30.0


@dataclass
class Telemetry:
    requests: int = 0
    retries: int = 0
    failures: int = 0


class _HttpClient:
    """Shared envelope POST with retry/backoff and error classification."""

    def __init__(
        self,
        endpoint: str,
        *,
        auth_token: str | None = None,
        limits: BackendLimits | None = None,
        retry: RetryPolicy | None = None,
        session: requests.Session | None = None,
    ) -> None:
        self.endpoint = endpoint.rstrip("/")
        self.limits = limits or BackendLimits()
        self.retry = retry or RetryPolicy()
        self.telemetry = Telemetry()
        self._session = session or requests.Session()
        self._headers = {"Content-Type": "application/json"}
        if auth_token:
            self._headers["Authorization"] = f"Bearer {auth_token}"

    def post(self, path: str, body: dict[str, Any]) -> dict[str, Any]:
        url = self.endpoint + path
        attempt = 0
        while True:
            self.telemetry.requests += 1
            category = None
            detail = ""
            try:
                response = self._session.post(
                    url, json=body, headers=self._headers, timeout=self.limits.timeout
                )
            except requests.Timeout as exc:
                category, detail = "timeout", str(exc)
            except requests.ConnectionError as exc:
                category, detail = "connection", str(exc)
            except requests.RequestException as exc:
                category, detail = "transport", str(exc)
            else:
                if response.status_code < 400:
                    try:
                        return response.json()
                    except ValueError as exc:
                        raise ProtocolError(f"{url}: reply is not JSON: {exc}") from exc
                if 400 <= response.status_code < 500:
                    # client errors are contract violations; retrying cannot help
                    raise ProtocolError(
                        f"{url}: HTTP {response.status_code}: {_error_detail(response)}"
                    )
                category = "server"
                detail = f"HTTP {response.status_code}: {_error_detail(response)}"
            if attempt >= self.retry.max_retries:
                self.telemetry.failures += 1
                raise TransportError(
                    f"{url}: giving up after {attempt} retries ({category}): {detail}",
                    category=category or "transport",
                    retries=attempt,
                )
            delay = self.retry.delay(attempt)
            log.debug("retrying %s after %s (%s), sleeping %.2fs", url, category, detail, delay)
            if delay > 0:
                time.sleep(delay)
            attempt += 1
            self.telemetry.retries += 1


def _error_detail(response: requests.Response) -> str:
    try:
        payload = response.json()
        error = payload.get("error", {})
        return f"{error.get('category', 'unknown')}: {error.get('message', '')}"
    except ValueError:
        return response.text[:200]


class RemoteScorerBackend(ScorerBackend):
    """Wire-protocol client for a masked-query scoring server."""

    def __init__(
        self,
        endpoint: str,
        *,
        auth_token: str | None = None,
        limits: BackendLimits | None = None,
        retry: RetryPolicy | None = None,
        session: requests.Session | None = None,
    ) -> None:
        self._client = _HttpClient(
            endpoint, auth_token=auth_token, limits=limits, retry=retry, session=session
        )

    @property
    def telemetry(self) -> Telemetry:
        return self._client.telemetry

    @property
    def capabilities(self) -> BackendCapabilities:
        limits = self._client.limits
        return BackendCapabilities(
            max_concurrency=limits.max_concurrency, max_batch_size=limits.max_batch_size
        )

    def evaluate(self, query: MaskedQuery) -> MaskDistribution:
        return self._post_envelope([query])[0]

    def evaluate_batch(self, queries: Sequence[MaskedQuery]) -> list[MaskDistribution]:
        if not queries:
            return []
        size = self._client.limits.max_batch_size
        chunks = [list(queries[i : i + size]) for i in range(0, len(queries), size)]
        if len(chunks) == 1:
            return self._post_envelope(chunks[0])
        workers = min(self._client.limits.max_concurrency, len(chunks))
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(self._post_envelope, chunks))
        return [dist for chunk in results for dist in chunk]

    def _post_envelope(self, queries: list[MaskedQuery]) -> list[MaskDistribution]:
        body = {"queries": [q.to_wire() for q in queries]}
        payload = self._client.post(SCORE_PATH, body)
        results = payload.get("results")
        if not isinstance(results, list) or len(results) != len(queries):
            raise ProtocolError(
                f"reply must carry exactly {len(queries)} results, got "
                f"{len(results) if isinstance(results, list) else type(results).__name__}"
            )
        return [_parse_result(query, result) for query, result in zip(queries, results)]


def _parse_result(query: MaskedQuery, result: Any) -> MaskDistribution:
    if not isinstance(result, dict):
        raise ProtocolError(f"per-query result must be an object, got {type(result).__name__}")
    if set(result) != set(query.mask_slots):
        raise ProtocolError(
            f"reply slots {sorted(result)} do not match query mask slots {sorted(query.mask_slots)}"
        )
    slots = {}
    for slot in query.mask_slots:
        entry = result[slot]
        if not isinstance(entry, dict) or "p_pos" not in entry or "p_neg" not in entry:
            raise ProtocolError(f"slot {slot!r} must carry p_pos and p_neg")
        try:
            slots[slot] = SlotDistribution(p_pos=entry["p_pos"], p_neg=entry["p_neg"])
        except ValidationError as exc:
            raise ProtocolError(f"slot {slot!r}: {exc}") from exc
    return MaskDistribution.of(slots)


def remote_backend(
    endpoint: str,
    *,
    auth_token: str | None = None,
    limits: BackendLimits | None = None,
    retry: RetryPolicy | None = None,
    session: requests.Session | None = None,
) -> RemoteScorerBackend:
    """Factory for the remote scoring client."""
    return RemoteScorerBackend(
        endpoint, auth_token=auth_token, limits=limits, retry=retry, session=session
    )


class RemotePolicyBackend(PolicyBackend):
    """Wire-protocol client for a candidate-step proposal server."""

    def __init__(
        self,
        endpoint: str,
        *,
        auth_token: str | None = None,
        limits: BackendLimits | None = None,
        retry: RetryPolicy | None = None,
        session: requests.Session | None = None,
    ) -> None:
        self._client = _HttpClient(
            endpoint, auth_token=auth_token, limits=limits, retry=retry, session=session
        )

    @property
    def telemetry(self) -> Telemetry:
        return self._client.telemetry

    def propose(self, question: str, partial_steps: Sequence[str], n: int, stop: str) -> list[str]:
        body = {"question": question, "steps_so_far": list(partial_steps), "n": n, "stop": stop}
        payload = self._client.post(PROPOSE_PATH, body)
        candidates = payload.get("candidates")
        if not isinstance(candidates, list) or not all(isinstance(c, str) for c in candidates):
            raise ProtocolError("propose reply must carry a list of candidate strings")
        if len(candidates) > n:
            raise ProtocolError(f"asked for {n} candidates, server sent {len(candidates)}")
        return candidates
