from __future__ import annotations

import json
import math
import threading

import httpx
import pytest
from hypothesis import given, strategies as st

from saycan.cli import serve
from saycan.domain import Instruction
from saycan.prompting import PromptTemplate, build_prompt
from saycan.scoring import (
    CannedGeneration,
    CapabilityError,
    RemoteScorer,
    RetryableScorerError,
    ScoreRequest,
    ScoreResponse,
    ScorerProtocolError,
    ScorerTable,
    StaticScorer,
    TableRule,
    TableScorer,
    UniformScorer,
    generate,
    score_candidates,
    to_probabilities,
)
from saycan.world import data_path


def _prompt(text: str, history=()) -> str:
    return build_prompt(PromptTemplate(()), Instruction(text), list(history))


TABLE = ScorerTable(
    rules=(
        TableRule({"b": 0.9}, instruction="go", history_suffix=("a",)),
        TableRule({"a": 0.5, "done": 0.25}, instruction="go", history_suffix=()),
    ),
    generations=(CannedGeneration("1. a, 2. b, 3. done", instruction="go"),),
    floor=1e-6,
)


def test_table_first_matching_rule_wins():
    s = TableScorer(TABLE)
    r = s.score(ScoreRequest(_prompt("go"), ("a", "b", "done")))
    assert r.logprobs == (math.log(0.5), math.log(1e-6), math.log(0.25))
    r = s.score(ScoreRequest(_prompt("go", ["a"]), ("a", "b")))
    assert r.logprobs == (math.log(1e-6), math.log(0.9))


def test_table_without_match_is_uniform():
    r = TableScorer(TABLE).score(ScoreRequest(_prompt("other"), ("a", "b", "c", "d")))
    assert r.logprobs == (math.log(0.25),) * 4


def test_table_generation():
    s = TableScorer(TABLE)
    assert generate(s, _prompt("go")) == "1. a, 2. b, 3. done"
    assert generate(s, _prompt("nope")) == ""
    assert generate(s, _prompt("go"), max_length=4) == "1. a"


def test_table_round_trip(tmp_path):
    p = tmp_path / "t.json"
    TABLE.save(p)
    assert TableScorer.from_file(p).table == TABLE


def test_rule_validation():
    with pytest.raises(ValueError):
        TableRule({"a": 0.0})
    with pytest.raises(ValueError):
        TableRule({"a": 1.0, "b": -0.1})
    with pytest.raises(ValueError):
        ScorerTable((), floor=0.0)


def test_request_and_response_validation():
    with pytest.raises(ValueError):
        ScoreRequest("p", ())
    with pytest.raises(ScorerProtocolError):
        ScoreResponse((float("nan"),))


def test_misaligned_scorer_is_a_protocol_error():
    class Short:
        supports_generation = False

        def score(self, request):
            return ScoreResponse((0.0,))

    with pytest.raises(ScorerProtocolError):
        score_candidates(Short(), ScoreRequest("p", ("a", "b")))


def test_generation_capability():
    with pytest.raises(CapabilityError):
        generate(UniformScorer(), "p")
    with pytest.raises(CapabilityError):
        generate(StaticScorer({}), "p")


@given(st.lists(st.floats(-800, 50), min_size=1, max_size=30))
def test_display_distribution_is_stable(lps):
    unnorm, probs = to_probabilities(ScoreResponse(tuple(lps)))
    assert math.isclose(sum(probs), 1.0, rel_tol=1e-9)
    assert all(0.0 <= p <= 1.0 for p in probs)
    top = max(lps)
    assert probs[lps.index(top)] == max(probs)
    assert all(u == math.exp(lp) for u, lp in zip(unnorm, lps))


# ---------------------------------------------------------------------------
# Remote client
# ---------------------------------------------------------------------------


def _echo_len_handler(calls: list):
    def handler(request: httpx.Request) -> httpx.Response:
        body = json.loads(request.content)
        calls.append((request.url.path, body, request.headers.get("authorization")))
        if request.url.path == "/score":
            return httpx.Response(200, json={"logprobs": [-float(len(c)) for c in body["candidates"]]})
        return httpx.Response(200, json={"text": "1. a, 2. done"})

    return handler


def test_remote_batches_preserve_order():
    calls: list = []
    s = RemoteScorer("http://scorer", transport=httpx.MockTransport(_echo_len_handler(calls)), batch_size=2)
    cands = ("a", "bbb", "cc", "dddd", "e")
    r = s.score(ScoreRequest("p", cands))
    assert r.logprobs == (-1.0, -3.0, -2.0, -4.0, -1.0)
    assert len([c for c in calls if c[0] == "/score"]) == 3
    assert s.generate("p") == "1. a, 2. done"


def test_remote_token_and_length_normalization(monkeypatch):
    calls: list = []
    monkeypatch.setenv("SAYCAN_SCORER_TOKEN", "secret")
    s = RemoteScorer("http://scorer", transport=httpx.MockTransport(_echo_len_handler(calls)), length_normalize=True)
    r = s.score(ScoreRequest("p", ("ab cd",)))
    assert r.logprobs == (-2.5,)
    assert calls[0][2] == "Bearer secret"


def test_remote_retries_then_succeeds():
    attempts = {"n": 0}

    def handler(request):
        attempts["n"] += 1
        if attempts["n"] < 3:
            return httpx.Response(503)
        return httpx.Response(200, json={"logprobs": [-1.0]})

    s = RemoteScorer("http://s", transport=httpx.MockTransport(handler), retries=2, backoff=0.0)
    assert s.score(ScoreRequest("p", ("a",))).logprobs == (-1.0,)
    assert attempts["n"] == 3


def test_remote_gives_up_with_retryable_error():
    def handler(request):
        raise httpx.ConnectError("refused")

    s = RemoteScorer("http://s", transport=httpx.MockTransport(handler), retries=1, backoff=0.0)
    with pytest.raises(RetryableScorerError):
        s.score(ScoreRequest("p", ("a",)))


@pytest.mark.parametrize(
    "resp",
    [
        httpx.Response(400, text="bad"),
        httpx.Response(200, text="not json"),
        httpx.Response(200, json=[1, 2]),
        httpx.Response(200, json={"logprobs": [-1.0, -2.0]}),
        httpx.Response(200, json={"logprobs": ["x"]}),
        httpx.Response(200, json={"other": 1}),
    ],
)
def test_remote_protocol_errors(resp):
    s = RemoteScorer("http://s", transport=httpx.MockTransport(lambda r: resp), retries=0)
    with pytest.raises(ScorerProtocolError):
        s.score(ScoreRequest("p", ("a",)))


def test_remote_against_local_server():
    server = serve(data_path("oracle_table.json"))
    t = threading.Thread(target=server.serve_forever, daemon=True)
    t.start()
    try:
        host, port = server.server_address[:2]
        remote = RemoteScorer(f"http://{host}:{port}", batch_size=3)
        local = TableScorer.from_file(data_path("oracle_table.json"))
        req = ScoreRequest(
            _prompt("Bring me a fruit"),
            ("find an apple", "pick up the apple", "bring it to you", "done", "find a sponge"),
        )
        assert remote.score(req) == local.score(req)
        assert remote.generate(_prompt("Bring me a fruit")) == local.generate(_prompt("Bring me a fruit")) != ""
        remote.close()
    finally:
        server.shutdown()
        server.server_close()
