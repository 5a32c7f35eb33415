"""Client for an LLM judge behind a chat-completion style HTTP endpoint.

Each (prediction, reference) pair is sent once; the judge must answer with a
JSON object holding ``meaning``, ``readability`` and ``mpn`` scores in
``[1, 5]``.  Corpus runs average those scores per metric.
"""
from __future__ import annotations

import json
import logging
import math
import os
import re
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path
from string import Template
from typing import Callable, Optional, Sequence

import httpx

log = logging.getLogger(__name__)

METRICS = ("meaning", "readability", "mpn")
ENV_ENDPOINT = "JUDGE_ENDPOINT"
ENV_TOKEN = "JUDGE_TOKEN"
RETRY_STATUS = {408, 429, 500, 502, 503, 504}


def default_template() -> str:
    return resources.files("tokcomp").joinpath("data/judge_prompt.txt").read_text(encoding="utf-8")


class JudgeError(RuntimeError):
    pass


class JudgeConfigError(JudgeError):
    pass


class JudgeTransportError(JudgeError):
    """The endpoint stayed unreachable (or kept failing) after all retries."""


class JudgeResponseError(JudgeError):
    """The judge answered, but not with three usable scores."""


class MissingMetricError(JudgeResponseError):
    pass


class ScoreRangeError(JudgeResponseError):
    pass


@dataclass(frozen=True)
class JudgeConfig:
    endpoint: str
    token: str = field(repr=False)
    model: str = "gpt-4o"
    timeout: float = 30.0
    max_retries: int = 3
    prompt_template: str = field(default_factory=default_template, repr=False)
    max_concurrency: int = 4
    backoff_base: float = 1.0
    backoff_factor: float = 2.0

    def __post_init__(self):
        if not self.endpoint:
            raise JudgeConfigError("endpoint is empty")
        if not self.timeout > 0:
            raise JudgeConfigError("timeout must be > 0")
        if self.max_retries < 0:
            raise JudgeConfigError("max_retries must be >= 0")
        if self.max_concurrency < 1:
            raise JudgeConfigError("max_concurrency must be >= 1")

    @classmethod
    def from_env(cls, environ=None, **overrides) -> "JudgeConfig":
        env = os.environ if environ is None else environ
        endpoint = env.get(ENV_ENDPOINT, "")
        token = env.get(ENV_TOKEN, "")
        missing = [name for name, val in ((ENV_ENDPOINT, endpoint), (ENV_TOKEN, token)) if not val]
        if missing:
            raise JudgeConfigError(f"missing environment variable(s): {', '.join(missing)}")
        return cls(endpoint=endpoint, token=token, **overrides)

    def backoff(self, attempt: int) -> float:
        return self.backoff_base * self.backoff_factor ** attempt


@dataclass(frozen=True)
class JudgeScores:
    meaning: float
    readability: float
    mpn: float
    utterance_id: str = ""

    def __post_init__(self):
        for name in METRICS:
            v = getattr(self, name)
            if not (1.0 <= v <= 5.0):
                raise ScoreRangeError(f"{name}={v!r} outside [1, 5]")

    def to_dict(self) -> dict:
        return asdict(self)


def build_prompt(cfg: JudgeConfig, prediction: str, reference: str) -> str:
    return Template(cfg.prompt_template).safe_substitute(prediction=prediction, reference=reference)


def build_request_body(cfg: JudgeConfig, prediction: str, reference: str) -> bytes:
    """Byte-stable JSON body for one pair."""
    body = {
        "model": cfg.model,
        "messages": [{"role": "user", "content": build_prompt(cfg, prediction, reference)}],
    }
    return json.dumps(body, sort_keys=True, ensure_ascii=False, separators=(",", ":")).encode("utf-8")


_OBJECT = re.compile(r"\{.*?\}", re.DOTALL)


def _score_object(payload) -> dict:
    if isinstance(payload, dict) and any(k in payload for k in METRICS):
        return payload
    try:
        content = payload["choices"][0]["message"]["content"]
    except (KeyError, IndexError, TypeError):
        raise JudgeResponseError("response has neither score keys nor choices[0].message.content") from None
    if isinstance(content, dict):
        return content
    if not isinstance(content, str):
        raise JudgeResponseError("message content is not text")
    try:
        obj = json.loads(content)
    except json.JSONDecodeError:
        m = _OBJECT.search(content)
        if m is None:
            raise JudgeResponseError("no JSON object in judge reply") from None
        try:
            obj = json.loads(m.group(0))
        except json.JSONDecodeError as exc:
            raise JudgeResponseError(f"malformed JSON in judge reply: {exc}") from None
    if not isinstance(obj, dict):
        raise JudgeResponseError("judge reply is not a JSON object")
    return obj


def parse_scores(payload, utterance_id: str = "") -> JudgeScores:
    obj = _score_object(payload)
    vals = {}
    for name in METRICS:
        if name not in obj:
            raise MissingMetricError(f"judge reply lacks {name!r}")
        v = obj[name]
        if isinstance(v, bool):
            raise JudgeResponseError(f"{name} is a boolean, not a score")
        if not isinstance(v, (int, float)):
            try:
                v = float(v)
            except (TypeError, ValueError):
                raise JudgeResponseError(f"{name}={obj[name]!r} is not a number") from None
        if not math.isfinite(v):
            raise JudgeResponseError(f"{name} is not finite")
        vals[name] = float(v)
    return JudgeScores(utterance_id=utterance_id, **vals)


def judge_pair(cfg: JudgeConfig, prediction: str, reference: str, utterance_id: str = "",
               client: Optional[httpx.Client] = None,
               sleep: Callable[[float], None] = time.sleep) -> JudgeScores:
    if not reference:
        raise ValueError("reference must be non-empty")
    body = build_request_body(cfg, prediction, reference)
    headers = {"Authorization": f"Bearer {cfg.token}", "Content-Type": "application/json"}
    own = client is None
    client = httpx.Client(timeout=cfg.timeout) if own else client
    try:
        last = None
        for attempt in range(cfg.max_retries + 1):
            if attempt:
                delay = cfg.backoff(attempt - 1)
                log.info("judge retry %d for %r in %.2fs (%s)", attempt, utterance_id, delay, last)
                sleep(delay)
            try:
                resp = client.post(cfg.endpoint, content=body, headers=headers, timeout=cfg.timeout)
            except httpx.TransportError as exc:
                last = type(exc).__name__
                continue
            if resp.status_code in RETRY_STATUS:
                last = f"HTTP {resp.status_code}"
                continue
            if resp.status_code >= 400:
                raise JudgeError(f"judge endpoint returned HTTP {resp.status_code}")
            try:
                payload = resp.json()
            except ValueError:
                raise JudgeResponseError("response body is not JSON") from None
            return parse_scores(payload, utterance_id)
        raise JudgeTransportError(f"gave up after {cfg.max_retries + 1} attempts ({last})")
    finally:
        if own:
            client.close()


@dataclass
class CorpusJudgement:
    per_pair: list
    n: int
    meaning: float
    readability: float
    mpn: float

    def summary(self) -> dict:
        return {"summary": True, "n": self.n, "meaning": self.meaning,
                "readability": self.readability, "mpn": self.mpn}


class JudgeCorpusError(JudgeError):
    def __init__(self, msg: str, partial: list, failed: str):
        super().__init__(msg)
        self.partial = partial
        self.failed = failed


def average_scores(scores: Sequence[JudgeScores]) -> dict:
    if not scores:
        raise ValueError("no scores to average")
    return {m: math.fsum(getattr(s, m) for s in scores) / len(scores) for m in METRICS}


def write_jsonl(path, per_pair: Sequence[JudgeScores], tail: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for s in per_pair:
            fh.write(json.dumps(s.to_dict(), sort_keys=True) + "\n")
        fh.write(json.dumps(tail, sort_keys=True) + "\n")


def read_jsonl(path) -> tuple[list[JudgeScores], dict]:
    rows = [json.loads(line) for line in Path(path).read_text(encoding="utf-8").splitlines() if line.strip()]
    per_pair = [JudgeScores(**r) for r in rows if "summary" not in r]
    summary = next((r for r in rows if "summary" in r), {})
    return per_pair, summary


def judge_corpus(cfg: JudgeConfig, pairs: Sequence[tuple[str, str, str]], out_path=None,
                 client: Optional[httpx.Client] = None,
                 sleep: Callable[[float], None] = time.sleep) -> CorpusJudgement:
    """Judge ``(utterance_id, prediction, reference)`` triples.

    At most ``cfg.max_concurrency`` requests are in flight.  Results are
    ordered by utterance id.  If any pair still fails after its retries,
    whatever finished is written to ``out_path`` with a ``partial`` summary
    and :class:`JudgeCorpusError` is raised.
    """
    pairs = list(pairs)
    if not pairs:
        raise ValueError("need at least one pair")
    ids = [uid for uid, _, _ in pairs]
    if len(set(ids)) != len(ids):
        raise ValueError("utterance ids must be unique")
    own = client is None
    client = httpx.Client(timeout=cfg.timeout) if own else client
    done: dict[str, JudgeScores] = {}
    failure = None
    try:
        with ThreadPoolExecutor(max_workers=cfg.max_concurrency) as pool:
            futures = {pool.submit(judge_pair, cfg, pred, ref, uid, client, sleep): uid
                       for uid, pred, ref in pairs}
            for fut, uid in futures.items():
                try:
                    done[uid] = fut.result()
                except Exception as exc:  # noqa: BLE001 - recorded, re-raised below
                    if failure is None:
                        failure = (uid, exc)
    finally:
        if own:
            client.close()

    per_pair = [done[k] for k in sorted(done)]
    if failure is not None:
        uid, exc = failure
        if out_path is not None:
            write_jsonl(out_path, per_pair, {"summary": True, "status": "partial", "n": len(per_pair),
                                             "failed": uid, "error": str(exc)})
        raise JudgeCorpusError(f"pair {uid!r} failed: {exc}", per_pair, uid) from exc

    result = CorpusJudgement(per_pair, len(per_pair), **average_scores(per_pair))
    if out_path is not None:
        write_jsonl(out_path, per_pair, {**result.summary(), "status": "complete"})
    return result
