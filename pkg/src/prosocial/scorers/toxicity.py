"""Toxicity scoring through an external API with cache and local fallback.

Scores are cached on disk keyed by content hash, so repeated pipeline
runs never re-request the same text. Without network (offline mode or
exhausted retries) a lexicon fallback produces a bounded score, and the
backend that produced each score is recorded next to it.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from dataclasses import dataclass, field
from importlib import resources
from typing import TYPE_CHECKING, Callable

from ..errors import ConfigError, ToxicityClientError, ToxicityProtocolError
from ..textlex import match_weighted_terms

if TYPE_CHECKING:
    from ..corpus import Conversation

UNTUNED_THRESHOLD = 0.5
TUNED_THRESHOLD = 0.8


def _default_fallback_lexicon() -> dict[str, float]:
    raw = resources.files("prosocial.data").joinpath("toxicity_fallback.tsv").read_text("utf-8")
    out: dict[str, float] = {}
    for line in raw.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        term, _, weight = line.partition("\t")
        out[term.strip().lower()] = float(weight)
    return out


@dataclass(frozen=True)
class ToxicityConfig:
    endpoint: str = ""
    api_key: str = ""
    untuned_threshold: float = UNTUNED_THRESHOLD
    tuned_threshold: float = TUNED_THRESHOLD
    cache_path: str | None = None
    rate_limit: float = 1.0  # requests per second
    offline: bool = False
    max_tries: int = 5
    backoff_base: float = 1.0
    backoff_factor: float = 2.0
    fallback_lexicon: dict[str, float] = field(default_factory=_default_fallback_lexicon)

    def __post_init__(self):
        if not 0.0 < self.untuned_threshold < self.tuned_threshold < 1.0:
            raise ConfigError("toxicity thresholds must satisfy 0 < untuned < tuned < 1")
        if self.rate_limit <= 0:
            raise ConfigError("toxicity rate limit must be positive")


def fallback_toxicity_score(text: str, lexicon: dict[str, float]) -> float:
    """h/(h+1) over summed lexicon hit weights; bounded below 1."""
    h = sum(match_weighted_terms(text, lexicon))
    if h <= 0:
        return 0.0
    return h / (h + 1.0)


def _content_key(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


class ToxicityClient:
    """Cache-first scorer; one instance per process, requests serialized."""

    def __init__(self, config: ToxicityConfig,
                 session=None,
                 sleeper: Callable[[float], None] = time.sleep,
                 clock: Callable[[], float] = time.monotonic):
        self.config = config
        self._session = session
        self._sleeper = sleeper
        self._clock = clock
        self._cache: dict[str, tuple[float, str]] = {}
        self._new_entries: list[tuple[str, float, str]] = []
        self._last_request: float | None = None
        self.request_count = 0
        self.cache_hits = 0
        if config.cache_path and os.path.exists(config.cache_path):
            self._load_cache(config.cache_path)

    def _load_cache(self, path: str) -> None:
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                parts = line.rstrip("\n").split("\t")
                if len(parts) == 3:
                    key, score, backend = parts
                    try:
                        self._cache[key] = (float(score), backend)
                    except ValueError:
                        continue  # tolerate a truncated final line

    def _append_cache(self, key: str, score: float, backend: str) -> None:
        self._cache[key] = (score, backend)
        self._new_entries.append((key, score, backend))
        if self.config.cache_path:
            with open(self.config.cache_path, "a", encoding="utf-8") as fh:
                fh.write(f"{key}\t{score!r}\t{backend}\n")

    def preload_cache(self, path: str) -> None:
        """Read entries from a cache file without adopting it for writes."""
        if os.path.exists(path):
            self._load_cache(path)

    def drain_new_entries(self) -> list[tuple[str, float, str]]:
        """Entries added since the last drain (for merging worker caches)."""
        out, self._new_entries = self._new_entries, []
        return out

    def absorb_entries(self, entries: list[tuple[str, float, str]]) -> None:
        for key, score, backend in entries:
            if key not in self._cache:
                self._append_cache(key, score, backend)

    def _request_session(self):
        if self._session is None:
            import requests
            self._session = requests.Session()
        return self._session

    def _rate_limit_wait(self) -> None:
        interval = 1.0 / self.config.rate_limit
        now = self._clock()
        if self._last_request is not None:
            wait = self._last_request + interval - now
            if wait > 0:
                self._sleeper(wait)
                now = self._clock()
        self._last_request = now

    def _request_once(self, text: str) -> float:
        import requests

        url = self.config.endpoint
        if self.config.api_key:
            sep = "&" if "?" in url else "?"
            url = f"{url}{sep}key={self.config.api_key}"
        payload = {"comment": {"text": text}, "requestedAttributes": {"TOXICITY": {}}}
        self._rate_limit_wait()
        self.request_count += 1
        response = self._request_session().post(url, json=payload, timeout=30)
        if response.status_code == 429 or response.status_code >= 500:
            raise _RetryableFailure(f"status {response.status_code}")
        if response.status_code >= 400:
            raise ToxicityClientError(
                f"toxicity endpoint rejected request: status {response.status_code}")
        try:
            doc = response.json()
            value = doc["attributeScores"]["TOXICITY"]["summaryScore"]["value"]
            return float(value)
        except (ValueError, KeyError, TypeError, json.JSONDecodeError) as exc:
            raise ToxicityProtocolError(f"malformed toxicity response: {exc}") from exc

    def score(self, text: str) -> float:
        key = _content_key(text)
        cached = self._cache.get(key)
        if cached is not None:
            self.cache_hits += 1
            return cached[0]
        if self.config.offline or not self.config.endpoint:
            value = fallback_toxicity_score(text, self.config.fallback_lexicon)
            self._append_cache(key, value, "fallback")
            return value
        import requests
        delay = self.config.backoff_base
        for attempt in range(self.config.max_tries):
            try:
                value = self._request_once(text)
            except (_RetryableFailure, requests.ConnectionError, requests.Timeout):
                if attempt + 1 < self.config.max_tries:
                    self._sleeper(delay)
                    delay *= self.config.backoff_factor
                continue
            self._append_cache(key, value, "api")
            return value
        value = fallback_toxicity_score(text, self.config.fallback_lexicon)
        self._append_cache(key, value, "fallback")
        return value


class _RetryableFailure(Exception):
    pass


def toxicity_metrics(scores: list[float],
                     untuned_threshold: float = UNTUNED_THRESHOLD,
                     tuned_threshold: float = TUNED_THRESHOLD
                     ) -> tuple[int, int, float, float]:
    """(untuned_count, tuned_count, pct_nontoxic_untuned, pct_nontoxic_tuned).

    Counts replies strictly above each threshold; a conversation with no
    replies is fully non-toxic by definition.
    """
    n = len(scores)
    if n == 0:
        return 0, 0, 1.0, 1.0
    untuned = sum(1 for s in scores if s > untuned_threshold)
    tuned = sum(1 for s in scores if s > tuned_threshold)
    return untuned, tuned, 1.0 - untuned / n, 1.0 - tuned / n


def score_conversation(conversation: "Conversation", client: ToxicityClient) -> list[float]:
    return [client.score(r.body) for r in conversation.walk_replies()]
