"""Sources of expected execution results.

Backends share one interface: predict(request) -> OraclePrediction, which is
either a result or Unavailable with a reason. The remote backend talks to a
chat-completion HTTP endpoint; the reference backend executes a hidden
ground-truth SQL (perfect oracle, for tests and baselines); the replay
backend serves raw replies from a cache file, optionally falling through to
a delegate; the noisy backend corrupts a wrapped oracle's answers with a
configured probability, deterministically per request.
"""
from __future__ import annotations

import hashlib
import json
import os
import random
import time
from dataclasses import dataclass

import requests

from .errors import CacheIo, ParseFailure
from .executor import DEFAULT_TIMEOUT, ExecutionResult, OutcomeKind, execute
from .instance import DatabaseInstance, instance_to_json
from .promptgen import Prompt, PromptConfig, build_prompt, parse_answer, render_answer

API_KEY_ENV = "SQLRERANK_API_KEY"


@dataclass(frozen=True)
class OracleRequest:
    prompt: Prompt
    db: DatabaseInstance
    question: str
    request_id: str


@dataclass(frozen=True)
class OraclePrediction:
    result: ExecutionResult | None = None
    unavailable_reason: str | None = None

    @classmethod
    def predicted(cls, result: ExecutionResult) -> "OraclePrediction":
        return cls(result=result)

    @classmethod
    def unavailable(cls, reason: str) -> "OraclePrediction":
        return cls(unavailable_reason=reason)

    @property
    def is_available(self) -> bool:
        return self.result is not None


def request_id_for(db: DatabaseInstance, question: str, config: PromptConfig) -> str:
    """Stable content hash of the database, question, and prompt shape."""
    payload = json.dumps(
        {
            "db": instance_to_json(db),
            "question": question,
            "format": config.db_format.value,
            "shots": config.shots,
        },
        sort_keys=True,
        separators=(",", ":"),
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def build_request(db: DatabaseInstance, question: str, config: PromptConfig) -> OracleRequest:
    return OracleRequest(
        prompt=build_prompt(db, question, config),
        db=db,
        question=question,
        request_id=request_id_for(db, question, config),
    )


class ReplyCache:
    """Append-only store of raw oracle replies, line-delimited JSON.

    Records are {"request_id", "timestamp", "reply"}; the latest record for a
    request id wins.
    """

    def __init__(self, path: str):
        self.path = path
        self._entries: dict[str, str] = {}
        self._load()

    def _load(self) -> None:
        if not os.path.exists(self.path):
            return
        try:
            with open(self.path, encoding="utf-8") as handle:
                for line in handle:
                    line = line.strip()
                    if not line:
                        continue
                    record = json.loads(line)
                    self._entries[record["request_id"]] = record["reply"]
        except (OSError, json.JSONDecodeError, KeyError) as exc:
            raise CacheIo(f"cannot read cache {self.path}: {exc}") from exc

    def get(self, request_id: str) -> str | None:
        return self._entries.get(request_id)

    def put(self, request_id: str, reply: str) -> None:
        record = {"request_id": request_id, "timestamp": time.time(), "reply": reply}
        try:
            with open(self.path, "a", encoding="utf-8") as handle:
                handle.write(json.dumps(record, sort_keys=True) + "\n")
        except OSError as exc:
            raise CacheIo(f"cannot write cache {self.path}: {exc}") from exc
        self._entries[request_id] = reply

    def __len__(self) -> int:
        return len(self._entries)


class ReferenceOracle:
    """Executes a hidden ground-truth SQL on the request's database."""

    tag = "reference"

    def __init__(self, gold_sql: str, timeout: float = DEFAULT_TIMEOUT):
        self.gold_sql = gold_sql
        self.timeout = timeout

    def predict(self, request: OracleRequest) -> OraclePrediction:
        outcome = execute(request.db, self.gold_sql, self.timeout)
        if outcome.kind is not OutcomeKind.OK:
            return OraclePrediction.unavailable(f"gold-{outcome.kind.value}")
        assert outcome.result is not None
        return OraclePrediction.predicted(outcome.result)

    def raw_reply(self, request: OracleRequest) -> str:
        outcome = execute(request.db, self.gold_sql, self.timeout)
        if outcome.kind is not OutcomeKind.OK or outcome.result is None:
            raise ParseFailure(f"gold SQL failed: {outcome.kind.value}")
        return render_answer(outcome.result)


class RemoteOracle:
    """Generic chat-completion client; the reply goes through parse_answer."""

    tag = "remote"

    def __init__(
        self,
        base_url: str,
        model: str,
        temperature: float = 0.0,
        retries: int = 2,
        backoff: float = 1.0,
        timeout: float = 60.0,
        api_key_env: str = API_KEY_ENV,
        session: "requests.Session | None" = None,
        sleep=time.sleep,
    ):
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.temperature = temperature
        self.retries = retries
        self.backoff = backoff
        self.timeout = timeout
        self.api_key_env = api_key_env
        self.session = session or requests.Session()
        self._sleep = sleep

    def raw_reply(self, request: OracleRequest) -> str:
        headers = {"Content-Type": "application/json"}
        api_key = os.environ.get(self.api_key_env)
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        body = {
            "model": self.model,
            "messages": [{"role": "user", "content": request.prompt.text}],
            "temperature": self.temperature,
        }
        last_exc: Exception | None = None
        for attempt in range(self.retries + 1):
            if attempt:
                self._sleep(self.backoff * (2 ** (attempt - 1)))
            try:
                response = self.session.post(
                    f"{self.base_url}/chat/completions",
                    headers=headers,
                    json=body,
                    timeout=self.timeout,
                )
                response.raise_for_status()
                data = response.json()
                return data["choices"][0]["message"]["content"]
            except (requests.RequestException, KeyError, IndexError, ValueError) as exc:
                last_exc = exc
        raise ConnectionError(f"remote oracle failed after {self.retries + 1} attempts: {last_exc}")

    def predict(self, request: OracleRequest) -> OraclePrediction:
        try:
            raw = self.raw_reply(request)
        except ConnectionError:
            return OraclePrediction.unavailable("transport")
        try:
            return OraclePrediction.predicted(parse_answer(raw))
        except ParseFailure:
            return OraclePrediction.unavailable("parse")


class ReplayOracle:
    """Serves raw replies from a ReplyCache; misses hit the delegate, if any.

    The delegate must expose raw_reply(request) so its answers can be cached
    verbatim and replayed byte-for-byte later.
    """

    tag = "replay"

    def __init__(self, cache: ReplyCache, delegate=None):
        self.cache = cache
        self.delegate = delegate

    def predict(self, request: OracleRequest) -> OraclePrediction:
        raw = self.cache.get(request.request_id)
        if raw is None:
            if self.delegate is None:
                return OraclePrediction.unavailable("cache-miss")
            try:
                raw = self.delegate.raw_reply(request)
            except (ConnectionError, ParseFailure):
                return OraclePrediction.unavailable("transport")
            self.cache.put(request.request_id, raw)
        try:
            return OraclePrediction.predicted(parse_answer(raw))
        except ParseFailure:
            return OraclePrediction.unavailable("parse")


class NoisyOracle:
    """Wraps an oracle and corrupts its answer with probability 1 - accuracy.

    Corruption appends a sentinel row, which changes the row count and hence
    fails both the exact and the relaxed comparison against the true result.
    The coin flip is a pure function of (seed, request_id).
    """

    tag = "noisy"

    def __init__(self, inner, accuracy: float, seed: int = 0):
        if not 0.0 <= accuracy <= 1.0:
            raise ValueError("accuracy must be within [0, 1]")
        self.inner = inner
        self.accuracy = accuracy
        self.seed = seed

    def predict(self, request: OracleRequest) -> OraclePrediction:
        prediction = self.inner.predict(request)
        if not prediction.is_available:
            return prediction
        rng = random.Random(f"{self.seed}:{request.request_id}")
        if rng.random() < self.accuracy:
            return prediction
        result = prediction.result
        assert result is not None
        if result.columns:
            sentinel = tuple(999983 + i for i in range(len(result.columns)))
            corrupted = ExecutionResult(
                columns=result.columns,
                rows=result.rows + (sentinel,),
                order_significant=result.order_significant,
            )
        else:
            corrupted = ExecutionResult(columns=("?",), rows=((999983,),))
        return OraclePrediction.predicted(corrupted)
