"""Client for remote model backends speaking the JSON-over-HTTP wire protocol.

Endpoints declare which capabilities they serve (predict, mlm,
translate). Predictions never fall back to rules; mlm and translate may,
depending on the endpoint's fallback policy, so the toolkit stays usable
without any backend running.
"""

from __future__ import annotations

import json
import urllib.error
import urllib.request
from dataclasses import dataclass, field

from .classifier import ProbDist

CAPABILITIES = ("predict", "mlm", "translate")

FALLBACK_ERROR = "error"
FALLBACK_RULE_BASED = "rule_based"


class BackendError(RuntimeError):
    """Transport failure, timeout, or HTTP error from the backend."""


class ProtocolError(RuntimeError):
    """The backend answered, but the payload violates the wire contract."""


@dataclass(frozen=True)
class BackendEndpoint:
    base_url: str
    capabilities: frozenset[str] = field(default_factory=lambda: frozenset(CAPABILITIES))
    timeout: float = 10.0
    fallback: str = FALLBACK_ERROR

    def __post_init__(self):
        caps = frozenset(self.capabilities)
        if not caps:
            raise ValueError("endpoint must declare at least one capability")
        unknown = caps - set(CAPABILITIES)
        if unknown:
            raise ValueError(f"unknown capabilities: {sorted(unknown)}")
        if self.fallback not in (FALLBACK_ERROR, FALLBACK_RULE_BASED):
            raise ValueError(f"unknown fallback policy {self.fallback!r}")
        object.__setattr__(self, "capabilities", caps)

    def supports(self, capability: str) -> bool:
        return capability in self.capabilities


def _post_json(url: str, payload: dict, timeout: float) -> dict:
    body = json.dumps(payload).encode("utf-8")
    request = urllib.request.Request(
        url, data=body, headers={"Content-Type": "application/json"}, method="POST"
    )
    try:
        with urllib.request.urlopen(request, timeout=timeout) as response:
            raw = response.read()
    except urllib.error.HTTPError as exc:
        detail = exc.read().decode("utf-8", "replace")[:500]
        raise BackendError(f"POST {url} -> HTTP {exc.code}: {detail}") from exc
    except (urllib.error.URLError, TimeoutError, OSError) as exc:
        raise BackendError(f"POST {url} failed: {exc}") from exc
    try:
        return json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ProtocolError(f"POST {url}: response is not valid JSON") from exc


def remote_predict(endpoint: BackendEndpoint, texts: list[str]) -> list[ProbDist]:
    """POST /v1/predict. One normalized distribution per input, in order.

    There is deliberately no rule-based fallback here: silently
    substituting predictions would corrupt every downstream experiment.
    """
    if not endpoint.supports("predict"):
        raise BackendError(f"endpoint {endpoint.base_url} does not declare 'predict'")
    reply = _post_json(endpoint.base_url.rstrip("/") + "/v1/predict",
                       {"texts": list(texts)}, endpoint.timeout)
    probs = reply.get("probs")
    if not isinstance(probs, list) or len(probs) != len(texts):
        got = len(probs) if isinstance(probs, list) else type(probs).__name__
        raise ProtocolError(f"/v1/predict returned {got} rows for {len(texts)} texts")
    out: list[ProbDist] = []
    for i, row in enumerate(probs):
        if not isinstance(row, list) or not row:
            raise ProtocolError(f"/v1/predict row {i} is not a non-empty list")
        dist = [float(p) for p in row]
        if any(p < 0.0 or p > 1.0 for p in dist):
            raise ProtocolError(f"/v1/predict row {i} has values outside [0,1]")
        if abs(sum(dist) - 1.0) > 1e-6:
            raise ProtocolError(f"/v1/predict row {i} sums to {sum(dist)}, expected 1 +- 1e-6")
        out.append(dist)
    return out


def remote_mlm(endpoint: BackendEndpoint, text: str, mask_indices: list[int],
               top_k: int) -> list[list[str]]:
    """POST /v1/mlm. `mask_indices` index the whitespace-delimited tokens of `text`.

    Returns one list of exactly `top_k` single-word suggestions per mask
    index, in mask order.
    """
    if not endpoint.supports("mlm"):
        raise BackendError(f"endpoint {endpoint.base_url} does not declare 'mlm'")
    reply = _post_json(
        endpoint.base_url.rstrip("/") + "/v1/mlm",
        {"text": text, "mask_indices": list(mask_indices), "top_k": top_k},
        endpoint.timeout,
    )
    suggestions = reply.get("suggestions")
    if not isinstance(suggestions, list) or len(suggestions) != len(mask_indices):
        raise ProtocolError("/v1/mlm suggestion arity does not match mask_indices")
    for i, row in enumerate(suggestions):
        if not isinstance(row, list) or len(row) != top_k:
            raise ProtocolError(f"/v1/mlm row {i} does not contain top_k={top_k} suggestions")
    return [[str(s) for s in row] for row in suggestions]


def remote_translate(endpoint: BackendEndpoint, text: str, pivot: str = "de") -> str:
    """POST /v1/translate. Round-trips `text` through the pivot language."""
    if not endpoint.supports("translate"):
        raise BackendError(f"endpoint {endpoint.base_url} does not declare 'translate'")
    reply = _post_json(
        endpoint.base_url.rstrip("/") + "/v1/translate",
        {"text": text, "pivot": pivot},
        endpoint.timeout,
    )
    out = reply.get("text")
    if not isinstance(out, str) or not out:
        raise ProtocolError("/v1/translate returned no text")
    return out
