import json

import pytest

from oocd.errors import ComponentOutOfRange, ConfigError, ProviderUnreachable, RateLimited
from oocd.prompting import parse_feature_vector
from oocd.providers import (
    AdversarialStubProvider,
    FixtureChatProvider,
    LiveChatProvider,
    ProviderConfig,
    StubChatProvider,
    TokenBucket,
    TransportFailure,
)


class FakeClock:
    def __init__(self):
        self.t = 0.0

    def __call__(self):
        return self.t

    def sleep(self, seconds):
        self.t += seconds


def ok_body(content):
    return json.dumps({"choices": [{"message": {"content": content}}]})


def make_transport(script):
    """script: list of (status, body) tuples or TransportFailure instances."""
    calls = []

    def transport(url, headers, payload, timeout):
        calls.append({"url": url, "headers": headers, "payload": payload, "timeout": timeout})
        step = script[min(len(calls) - 1, len(script) - 1)]
        if isinstance(step, Exception):
            raise step
        return step

    transport.calls = calls
    return transport


@pytest.fixture
def api_key(monkeypatch):
    monkeypatch.setenv("OOCD_API_KEY", "test-key-123")


def test_config_replication_mode_requires_pinned_model():
    ProviderConfig(model_id="gpt-3.5-turbo-0301")  # ok
    with pytest.raises(ConfigError):
        ProviderConfig(model_id="gpt-3.5-turbo")
    with pytest.raises(ConfigError):
        ProviderConfig(temperature=0.7)
    ProviderConfig(model_id="gpt-3.5-turbo", temperature=0.7, replication_mode=False)


def test_live_provider_happy_path(api_key):
    transport = make_transport([(200, ok_body("[1, 2, 3, 4, 5, 6]"))])
    provider = LiveChatProvider(ProviderConfig(), transport=transport, sleep=lambda s: None)
    assert provider.complete("the prompt") == "[1, 2, 3, 4, 5, 6]"
    call = transport.calls[0]
    assert call["payload"]["model"] == "gpt-3.5-turbo-0301"
    assert call["payload"]["temperature"] == 0.0
    assert call["payload"]["messages"] == [{"role": "user", "content": "the prompt"}]
    assert call["headers"]["Authorization"] == "Bearer test-key-123"


def test_live_provider_missing_key_names_the_variable(monkeypatch):
    monkeypatch.delenv("OOCD_API_KEY", raising=False)
    provider = LiveChatProvider(ProviderConfig(), transport=make_transport([(200, ok_body("x"))]))
    with pytest.raises(ConfigError, match="OOCD_API_KEY"):
        provider.complete("p")


def test_live_provider_retries_throttle_then_succeeds(api_key):
    transport = make_transport([(429, "slow down"), (200, ok_body("[0,0,0,0,0,0]"))])
    slept = []
    provider = LiveChatProvider(ProviderConfig(), transport=transport, sleep=slept.append)
    assert provider.complete("p") == "[0,0,0,0,0,0]"
    assert len(transport.calls) == 2
    assert slept == [1.0]


def test_live_provider_rate_limited_after_exhaustion(api_key):
    transport = make_transport([(429, "slow down")])
    provider = LiveChatProvider(
        ProviderConfig(max_retries=2), transport=transport, sleep=lambda s: None
    )
    with pytest.raises(RateLimited):
        provider.complete("p")
    assert len(transport.calls) == 3  # initial + 2 retries


def test_live_provider_unreachable_after_transport_failures(api_key):
    transport = make_transport([TransportFailure("connection refused")])
    provider = LiveChatProvider(
        ProviderConfig(max_retries=1), transport=transport, sleep=lambda s: None
    )
    with pytest.raises(ProviderUnreachable, match="connection refused"):
        provider.complete("p")


def test_live_provider_client_error_fails_fast(api_key):
    transport = make_transport([(401, "bad key")])
    provider = LiveChatProvider(ProviderConfig(), transport=transport, sleep=lambda s: None)
    with pytest.raises(ProviderUnreachable, match="401"):
        provider.complete("p")
    assert len(transport.calls) == 1


def test_live_provider_retries_bad_200_body(api_key):
    transport = make_transport([(200, "not json"), (200, ok_body("[1,1,1,1,1,1]"))])
    provider = LiveChatProvider(ProviderConfig(), transport=transport, sleep=lambda s: None)
    assert provider.complete("p") == "[1,1,1,1,1,1]"


def test_token_bucket_blocks_after_burst():
    clock = FakeClock()
    bucket = TokenBucket(60, clock=clock, sleep=clock.sleep)
    for _ in range(60):
        bucket.acquire()
    assert clock.t == 0.0
    bucket.acquire()
    assert clock.t == pytest.approx(1.0)


def test_stub_is_deterministic_and_well_formed():
    a = StubChatProvider(seed=1)
    b = StubChatProvider(seed=1)
    assert a.complete("prompt x") == b.complete("prompt x")
    assert a.complete("prompt x") != StubChatProvider(seed=2).complete("prompt x")
    vector = parse_feature_vector(a.complete("prompt x"))
    assert all(0 <= v <= 9 for v in vector.as_tuple())


def test_fixture_provider_returns_configured_vector():
    provider = FixtureChatProvider.from_pairs({("cap one", "cap two"): [9, 8, 7, 6, 5, 4]})
    from oocd.prompting import render_prompt

    assert provider.complete(render_prompt("cap one", "cap two")) == "[9, 8, 7, 6, 5, 4]"
    with pytest.raises(ConfigError):
        provider.complete(render_prompt("unknown", "pair"))


def test_fixture_provider_accepts_raw_strings():
    provider = FixtureChatProvider.from_pairs({("a b", "c d"): "utter nonsense"})
    from oocd.prompting import render_prompt

    assert provider.complete(render_prompt("a b", "c d")) == "utter nonsense"


def test_adversarial_modes_cover_schedule():
    provider = AdversarialStubProvider(seed=3)
    modes = {provider.mode_for(f"prompt {i}") for i in range(40)}
    assert modes == set(AdversarialStubProvider.MODES)


def test_adversarial_transient_prose_recovers_on_retry():
    provider = AdversarialStubProvider(seed=0)
    prompt = next(
        f"prompt {i}" for i in range(200) if provider.mode_for(f"prompt {i}") == "transient_prose"
    )
    first = provider.complete(prompt)
    second = provider.complete(prompt)
    with pytest.raises(Exception):
        parse_feature_vector(first)
    assert parse_feature_vector(second) is not None


def test_adversarial_out_of_range_is_persistent():
    provider = AdversarialStubProvider(seed=0)
    prompt = next(
        f"prompt {i}" for i in range(200) if provider.mode_for(f"prompt {i}") == "out_of_range"
    )
    for _ in range(3):
        with pytest.raises(ComponentOutOfRange):
            parse_feature_vector(provider.complete(prompt))
