import json
import threading

import pytest
from hypothesis import given, strategies as st

from causal_audit.gateway import (
    AuthenticationError,
    CompletionRequest,
    Gateway,
    ModelSpec,
    ProviderHTTPError,
    RateLimitExhausted,
    RatingParseError,
    ReplayMiss,
    ReplayStore,
    ScenarioError,
    extract_rating,
    load_scenario,
    request_digest,
)

SCENARIO = [
    {"match": {"edge": "E1", "prompt_index": 0}, "response": "Rating: 3"},
    {"match": {"edge": "E1", "context_contains": "strongly affects"}, "response": "Rating: 4"},
    {"match": "default", "response": "Rating: 1"},
]


def scripted(name="s", scenario=SCENARIO):
    return ModelSpec(name, "scripted", scenario=scenario)


def req(question="q?", edge="E1", index=0, context=None):
    return CompletionRequest(question, context=context, tags={"edge": edge, "prompt_index": index})


# --- scripted -------------------------------------------------------------------

def test_scripted_rule_echo():
    resp = Gateway().complete(scripted(), req())
    assert (resp.text, resp.source) == ("Rating: 3", "scripted")


def test_scripted_first_match_and_default():
    gw = Gateway()
    assert gw.complete(scripted(), req(index=5, context="x strongly affects y.")).text == "Rating: 4"
    assert gw.complete(scripted(), req(edge="E2", index=5)).text == "Rating: 1"


def test_scenario_requires_default():
    with pytest.raises(ScenarioError):
        load_scenario([{"match": {"edge": "E1"}, "response": "x"}])
    with pytest.raises(ScenarioError):
        load_scenario([{"match": {"colour": "red"}, "response": "x"}, {"match": "default", "response": "y"}])


def test_scenario_file(tmp_path):
    path = tmp_path / "s.json"
    path.write_text(json.dumps(SCENARIO))
    assert Gateway().complete(scripted(scenario=str(path)), req()).text == "Rating: 3"


def test_model_spec_invariants():
    with pytest.raises(ValueError):
        ModelSpec("x", "http_chat", endpoint="http://h")  # no credential_ref
    with pytest.raises(ValueError):
        ModelSpec("x", "scripted")  # no scenario
    with pytest.raises(ValueError):
        ModelSpec("x", "scripted", scenario=SCENARIO, temperature=-1)


# --- replay ---------------------------------------------------------------------

def test_record_then_replay(tmp_path):
    store = ReplayStore(tmp_path)
    model = scripted()
    first = Gateway(store, "record").complete(model, req())
    assert first.source == "scripted"
    assert len(store) == 1
    again = Gateway(store, "replay_only").complete(model, req())
    assert (again.text, again.source) == ("Rating: 3", "replayed")
    cassette = json.loads(store.path_for(first.digest).read_text())
    assert cassette["request"]["question"] == "q?"
    assert cassette["response"] == "Rating: 3"
    assert "recorded_at" in cassette


def test_replay_only_miss(tmp_path):
    with pytest.raises(ReplayMiss):
        Gateway(ReplayStore(tmp_path), "replay_only").complete(scripted(), req())


def test_replay_hit_makes_no_network_call(tmp_path, chat_server):
    model = ModelSpec("live", "http_chat", endpoint=chat_server.url, credential_ref="FAKE_KEY_VAR")
    store = ReplayStore(tmp_path)
    store.put(request_digest(model, req()), model, req(), "Rating: 4")
    gw = Gateway(store, "replay_only")
    resp = gw.complete(model, req())
    assert (resp.text, resp.source) == ("Rating: 4", "replayed")
    assert chat_server.requests == [] and gw.network_calls == 0


def test_digest_ignores_tags_and_key_order():
    model = scripted()
    a = CompletionRequest("q", context="c", tags={"edge": "E1"})
    b = CompletionRequest("q", context="c", tags={"edge": "E9", "role": "x"})
    assert request_digest(model, a) == request_digest(model, b)
    assert request_digest(model, a) != request_digest(model, CompletionRequest("q", context="d"))
    assert request_digest(model, a) != request_digest(model, CompletionRequest("q", context="c", temperature=0.5))


def test_digest_never_includes_credentials(tmp_path, monkeypatch, chat_server):
    monkeypatch.setenv("SECRET_VAR", "sk-very-secret")
    model = ModelSpec("live", "http_chat", endpoint=chat_server.url, credential_ref="SECRET_VAR")
    store = ReplayStore(tmp_path)
    Gateway(store, "record").complete(model, req())
    for p in tmp_path.glob("*.json"):
        assert "sk-very-secret" not in p.read_text()


def test_store_concurrent_appends(tmp_path):
    store = ReplayStore(tmp_path)
    model = scripted()
    gw = Gateway(store, "record")
    threads = [threading.Thread(target=gw.complete, args=(model, req(question=f"q{i}"))) for i in range(20)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert len(store) == 20
    assert not list(tmp_path.glob(".*.tmp"))


# --- live HTTP --------------------------------------------------------------------

@pytest.fixture
def live_model(chat_server, monkeypatch):
    monkeypatch.setenv("FAKE_KEY_VAR", "token-123")
    return ModelSpec("live", "http_chat", model_name="gpt-x", endpoint=chat_server.url, credential_ref="FAKE_KEY_VAR")


def test_live_wire_format(chat_server, live_model):
    resp = Gateway().complete(live_model, req(context="Use these facts."))
    assert (resp.text, resp.source) == ("Rating: 2", "live")
    sent = chat_server.requests[0]
    assert sent["auth"] == "Bearer token-123"
    assert sent["body"]["model"] == "gpt-x"
    assert sent["body"]["temperature"] == 0
    assert sent["body"]["messages"] == [
        {"role": "system", "content": "Use these facts."},
        {"role": "user", "content": "q?"},
    ]


def test_live_retries_then_succeeds(chat_server, live_model, chat_reply):
    statuses = iter([503, 429, 200])
    chat_server.handler = lambda body, headers: (s := next(statuses), chat_reply("Rating: 4") if s == 200 else {})
    sleeps = []
    resp = Gateway(sleep=sleeps.append).complete(live_model, req())
    assert resp.text == "Rating: 4"
    assert sleeps == [1.0, 2.0]


def test_live_rate_limit_exhausted(chat_server, live_model):
    chat_server.handler = lambda body, headers: (429, {})
    sleeps = []
    with pytest.raises(RateLimitExhausted):
        Gateway(sleep=sleeps.append).complete(live_model, req())
    assert len(chat_server.requests) == 3
    assert sleeps == [1.0, 2.0]


def test_live_auth_failure_not_retried(chat_server, live_model):
    chat_server.handler = lambda body, headers: (401, {"error": "bad key"})
    with pytest.raises(AuthenticationError):
        Gateway(sleep=lambda s: None).complete(live_model, req())
    assert len(chat_server.requests) == 1


def test_live_missing_credential(chat_server, monkeypatch):
    monkeypatch.delenv("UNSET_VAR", raising=False)
    model = ModelSpec("live", "http_chat", endpoint=chat_server.url, credential_ref="UNSET_VAR")
    with pytest.raises(AuthenticationError):
        Gateway().complete(model, req())


def test_live_client_error_not_retried(chat_server, live_model):
    chat_server.handler = lambda body, headers: (400, {"error": "bad"})
    with pytest.raises(ProviderHTTPError):
        Gateway(sleep=lambda s: None).complete(live_model, req())
    assert len(chat_server.requests) == 1


def test_record_mode_records_live(tmp_path, chat_server, live_model):
    store = ReplayStore(tmp_path)
    Gateway(store, "record").complete(live_model, req())
    Gateway(store, "record").complete(live_model, req())
    assert len(chat_server.requests) == 1
    assert len(store) == 1


# --- rating extraction ---------------------------------------------------------------

@pytest.mark.parametrize("text,expected", [
    ("I would rate this relationship a 3 because...", 3),
    ("Rating: 4/4. Strong causal link.", 4),
    ("On a scale from 1 to 4 I'd say rating: 2.", 2),
    ("Score 3/4", 3),
    ("**Rating:** 1", 1),
    ("In 2019 studies... overall 2", 2),
    ("Rate: 7, or rather 3", 3),
    ("3.5 is not a rating but 4 is", 4),
])
def test_extract_rating(text, expected):
    assert extract_rating(text) == expected


def test_extract_rating_no_digit():
    with pytest.raises(RatingParseError) as info:
        extract_rating("There is no plausible mechanism here.")
    assert info.value.raw_text == "There is no plausible mechanism here."


def test_extract_rating_out_of_range_only():
    with pytest.raises(RatingParseError, match="first integer was 7"):
        extract_rating("I give it 7 out of 10")


@given(st.text())
def test_extract_rating_total(text):
    try:
        value = extract_rating(text)
    except RatingParseError:
        return
    assert 1 <= value <= 4
