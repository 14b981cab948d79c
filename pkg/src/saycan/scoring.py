"""Language-model scorers.

A scorer rates a fixed set of candidate continuations for a prompt (scoring
mode) and, when it can, produces free text (generative mode). Three
implementations ship:

* :class:`TableScorer` -- deterministic rules keyed on the live instruction,
  explanation and step history parsed back out of the prompt.
* :class:`UniformScorer` -- equal mass on every candidate; cannot generate.
* :class:`RemoteScorer` -- HTTP client for a model server speaking
  ``POST /score`` and ``POST /generate``.
"""

from __future__ import annotations

import json
import math
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Protocol, Sequence, runtime_checkable

import httpx

from .prompting import parse_live_query


class ScorerError(Exception):
    """Base class for scorer failures."""


class RetryableScorerError(ScorerError):
    """Transport-level failure; the request may succeed if retried."""


class ScorerProtocolError(ScorerError):
    """The remote end answered with something that violates the wire format."""


class CapabilityError(ScorerError):
    """The scorer does not support the requested operation."""


@dataclass(frozen=True)
class ScoreRequest:
    prompt: str
    candidates: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "candidates", tuple(self.candidates))
        if not self.candidates:
            raise ValueError("candidates must be non-empty")
        if len(set(self.candidates)) != len(self.candidates):
            raise ValueError("duplicate candidates in score request")


@dataclass(frozen=True)
class ScoreResponse:
    logprobs: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "logprobs", tuple(float(x) for x in self.logprobs))
        if not all(math.isfinite(x) for x in self.logprobs):
            raise ScorerProtocolError(f"non-finite logprob in response: {self.logprobs}")


@runtime_checkable
class Scorer(Protocol):
    supports_generation: bool

    def score(self, request: ScoreRequest) -> ScoreResponse: ...

    def generate(self, prompt: str, max_length: int = 256) -> str: ...


def score_candidates(scorer: Scorer, request: ScoreRequest) -> ScoreResponse:
    response = scorer.score(request)
    if len(response.logprobs) != len(request.candidates):
        raise ScorerProtocolError(
            f"scorer returned {len(response.logprobs)} logprobs for {len(request.candidates)} candidates"
        )
    return response


def generate(scorer: Scorer, prompt: str, max_length: int = 256) -> str:
    if not getattr(scorer, "supports_generation", False):
        raise CapabilityError(f"{type(scorer).__name__} does not support generation")
    return scorer.generate(prompt, max_length)


def to_probabilities(response: ScoreResponse) -> tuple[list[float], list[float]]:
    """Return (unnormalized exp(logprob), normalized display distribution).

    The display distribution is computed with max-subtraction so very large or
    very small logprobs do not overflow; the unnormalized values are what the
    planner multiplies with affordances.
    """
    lps = response.logprobs
    unnorm = [math.exp(lp) for lp in lps]
    m = max(lps)
    shifted = [math.exp(lp - m) for lp in lps]
    z = math.fsum(shifted)
    return unnorm, [s / z for s in shifted]


# ---------------------------------------------------------------------------
# Table scorer
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TableRule:
    distribution: dict[str, float]
    instruction: str | None = None
    instruction_contains: str | None = None
    explanation_contains: str | None = None
    history_suffix: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        if not any(v > 0 for v in self.distribution.values()):
            raise ValueError("rule distribution needs positive mass on at least one label")
        if any(v < 0 for v in self.distribution.values()):
            raise ValueError("rule distribution masses must be non-negative")

    def matches(self, instruction: str, explanation: str | None, history: tuple[str, ...]) -> bool:
        if self.instruction is not None and instruction != self.instruction:
            return False
        if self.instruction_contains is not None and self.instruction_contains not in instruction:
            return False
        if self.explanation_contains is not None and self.explanation_contains not in (explanation or ""):
            return False
        if self.history_suffix is not None:
            n = len(self.history_suffix)
            if n > len(history) or (n and history[-n:] != self.history_suffix):
                return False
        return True

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {}
        for key in ("instruction", "instruction_contains", "explanation_contains"):
            if getattr(self, key) is not None:
                d[key] = getattr(self, key)
        if self.history_suffix is not None:
            d["history_suffix"] = list(self.history_suffix)
        d["distribution"] = dict(self.distribution)
        return d

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> TableRule:
        hs = d.get("history_suffix")
        return cls(
            distribution={k: float(v) for k, v in d["distribution"].items()},
            instruction=d.get("instruction"),
            instruction_contains=d.get("instruction_contains"),
            explanation_contains=d.get("explanation_contains"),
            history_suffix=tuple(hs) if hs is not None else None,
        )


@dataclass(frozen=True)
class CannedGeneration:
    text: str
    instruction: str | None = None
    instruction_contains: str | None = None
    slot: str = "plan"  # "plan" or "explanation"

    def matches(self, instruction: str, slot: str) -> bool:
        if slot != self.slot:
            return False
        if self.instruction is not None and instruction != self.instruction:
            return False
        if self.instruction_contains is not None and self.instruction_contains not in instruction:
            return False
        return True

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {"slot": self.slot, "text": self.text}
        if self.instruction is not None:
            d["instruction"] = self.instruction
        if self.instruction_contains is not None:
            d["instruction_contains"] = self.instruction_contains
        return d


@dataclass(frozen=True)
class ScorerTable:
    rules: tuple[TableRule, ...]
    generations: tuple[CannedGeneration, ...] = ()
    # mass for labels a matching rule does not mention
    floor: float = 1e-9

    def __post_init__(self) -> None:
        if not self.floor > 0:
            raise ValueError("floor mass must be positive")

    def to_dict(self) -> dict[str, Any]:
        return {
            "format_version": 1,
            "floor": self.floor,
            "rules": [r.to_dict() for r in self.rules],
            "generations": [g.to_dict() for g in self.generations],
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> ScorerTable:
        return cls(
            rules=tuple(TableRule.from_dict(r) for r in d.get("rules", [])),
            generations=tuple(
                CannedGeneration(
                    text=g["text"],
                    instruction=g.get("instruction"),
                    instruction_contains=g.get("instruction_contains"),
                    slot=g.get("slot", "plan"),
                )
                for g in d.get("generations", [])
            ),
            floor=float(d.get("floor", 1e-9)),
        )

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f, indent=1, ensure_ascii=False)
            f.write("\n")


def load_table(path: str | Path) -> ScorerTable:
    with open(path, encoding="utf-8") as f:
        return ScorerTable.from_dict(json.load(f))


class TableScorer:
    """Deterministic stand-in for a language model.

    The first rule matching the parsed live query decides the masses; if no
    rule matches, every candidate gets ``1/N``.
    """

    supports_generation = True

    def __init__(self, table: ScorerTable) -> None:
        self.table = table

    @classmethod
    def from_file(cls, path: str | Path) -> TableScorer:
        return cls(load_table(path))

    def match(self, prompt: str) -> TableRule | None:
        q = parse_live_query(prompt)
        for rule in self.table.rules:
            if rule.matches(q.instruction, q.explanation, q.history):
                return rule
        return None

    def score(self, request: ScoreRequest) -> ScoreResponse:
        rule = self.match(request.prompt)
        n = len(request.candidates)
        if rule is None:
            return ScoreResponse(tuple(math.log(1.0 / n) for _ in range(n)))
        floor = self.table.floor
        out = []
        for c in request.candidates:
            mass = rule.distribution.get(c, floor)
            out.append(math.log(mass if mass > 0 else floor))
        return ScoreResponse(tuple(out))

    def generate(self, prompt: str, max_length: int = 256) -> str:
        q = parse_live_query(prompt)
        slot = "explanation" if q.awaiting_explanation else "plan"
        for g in self.table.generations:
            if g.matches(q.instruction, slot):
                return g.text[:max_length]
        return ""


class UniformScorer:
    supports_generation = False

    def score(self, request: ScoreRequest) -> ScoreResponse:
        n = len(request.candidates)
        return ScoreResponse(tuple(math.log(1.0 / n) for _ in range(n)))

    def generate(self, prompt: str, max_length: int = 256) -> str:
        raise CapabilityError("uniform scorer cannot generate text")


# ---------------------------------------------------------------------------
# Remote scorer
# ---------------------------------------------------------------------------

TOKEN_ENV = "SAYCAN_SCORER_TOKEN"


@dataclass
class RemoteScorer:
    """HTTP client for a scoring server.

    Wire format (JSON bodies)::

        POST /score    {"prompt": str, "candidates": [str]}  -> {"logprobs": [float]}
        POST /generate {"prompt": str, "max_tokens": int}    -> {"text": str}

    The server returns, per candidate, the summed token log-probabilities of
    the continuation. Large candidate sets are split into ``batch_size``
    chunks sent concurrently, at most ``max_in_flight`` at a time, and
    reassembled in request order.
    """

    base_url: str
    timeout: float = 30.0
    retries: int = 2
    backoff: float = 0.25
    batch_size: int = 0
    max_in_flight: int = 4
    length_normalize: bool = False
    token: str | None = None
    transport: httpx.BaseTransport | None = None
    supports_generation: bool = True
    _client: httpx.Client = field(init=False, repr=False)
    _gate: threading.BoundedSemaphore = field(init=False, repr=False)

    def __post_init__(self) -> None:
        token = self.token if self.token is not None else os.environ.get(TOKEN_ENV)
        headers = {"Authorization": f"Bearer {token}"} if token else {}
        self._client = httpx.Client(
            base_url=self.base_url, timeout=self.timeout, headers=headers, transport=self.transport
        )
        self._gate = threading.BoundedSemaphore(max(1, self.max_in_flight))

    def close(self) -> None:
        self._client.close()

    def _post(self, path: str, body: dict[str, Any]) -> dict[str, Any]:
        last: Exception | None = None
        for attempt in range(self.retries + 1):
            try:
                with self._gate:
                    resp = self._client.post(path, json=body)
            except httpx.TransportError as exc:
                last = exc
            else:
                if resp.status_code >= 500 or resp.status_code == 429:
                    last = RetryableScorerError(f"{path}: HTTP {resp.status_code}")
                elif resp.status_code >= 400:
                    raise ScorerProtocolError(f"{path}: HTTP {resp.status_code}: {resp.text[:200]}")
                else:
                    try:
                        data = resp.json()
                    except ValueError as exc:
                        raise ScorerProtocolError(f"{path}: response is not JSON") from exc
                    if not isinstance(data, dict):
                        raise ScorerProtocolError(f"{path}: response is not a JSON object")
                    return data
            if attempt < self.retries:
                time.sleep(self.backoff * (2**attempt))
        raise RetryableScorerError(f"{path}: giving up after {self.retries + 1} attempts: {last}")

    def _score_chunk(self, prompt: str, cands: Sequence[str]) -> list[float]:
        data = self._post("/score", {"prompt": prompt, "candidates": list(cands)})
        lps = data.get("logprobs")
        if not isinstance(lps, list) or len(lps) != len(cands):
            raise ScorerProtocolError("/score: 'logprobs' missing or misaligned with candidates")
        try:
            out = [float(x) for x in lps]
        except (TypeError, ValueError) as exc:
            raise ScorerProtocolError("/score: non-numeric logprob") from exc
        if not all(math.isfinite(x) for x in out):
            raise ScorerProtocolError("/score: non-finite logprob")
        return out

    def score(self, request: ScoreRequest) -> ScoreResponse:
        cands = list(request.candidates)
        size = self.batch_size if self.batch_size > 0 else len(cands)
        chunks = [cands[i : i + size] for i in range(0, len(cands), size)]
        if len(chunks) == 1:
            lps = self._score_chunk(request.prompt, chunks[0])
        else:
            with ThreadPoolExecutor(max_workers=max(1, self.max_in_flight)) as pool:
                parts = list(pool.map(lambda c: self._score_chunk(request.prompt, c), chunks))
            lps = [x for part in parts for x in part]
        if self.length_normalize:
            lps = [lp / max(1, len(c.split())) for lp, c in zip(lps, cands)]
        return ScoreResponse(tuple(lps))

    def generate(self, prompt: str, max_length: int = 256) -> str:
        data = self._post("/generate", {"prompt": prompt, "max_tokens": max_length})
        text = data.get("text")
        if not isinstance(text, str):
            raise ScorerProtocolError("/generate: 'text' missing")
        return text


class StaticScorer:
    """Returns fixed logprobs keyed by candidate label; mainly for tests and fuzzing."""

    supports_generation = False

    def __init__(self, logprobs: Mapping[str, float], default: float = -30.0) -> None:
        self.logprobs = dict(logprobs)
        self.default = default

    def score(self, request: ScoreRequest) -> ScoreResponse:
        return ScoreResponse(tuple(self.logprobs.get(c, self.default) for c in request.candidates))

    def generate(self, prompt: str, max_length: int = 256) -> str:
        raise CapabilityError("static scorer cannot generate text")
