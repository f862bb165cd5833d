"""Stub backend determinism and the remote wire protocol."""

from __future__ import annotations

import subprocess
import sys

import pytest

from sgicl import (
    ConfigurationError,
    GenerationFailedError,
    InputError,
    RemoteBackend,
    SamplingConfig,
    ScoringError,
    StubBackend,
    StubScript,
    TransportError,
    fingerprint,
    truncate_at_stop,
)

SAMPLING = SamplingConfig()


def test_fingerprint_is_16_hex_chars():
    fp = fingerprint("Review : x\nSentiment : ")
    assert len(fp) == 16
    assert int(fp, 16) >= 0
    assert fingerprint("a") != fingerprint("b")


def test_truncate_at_stop_earliest_wins():
    assert truncate_at_stop("a|b\nc", ("\n", "|")) == "a"
    assert truncate_at_stop("clean", ("\n",)) == "clean"


# ---------------------------------------------------------------------------
# Stub
# ---------------------------------------------------------------------------


def test_scripted_completion_is_echoed():
    script = StubScript()
    prompt = 'Generate a "negative"  review : '
    script.add_completion(prompt, 0, "a dull, lifeless slog .")
    backend = StubBackend(script)
    assert backend.complete(prompt, SAMPLING, 0) == "a dull, lifeless slog ."


def test_stub_completion_deterministic_in_prompt_and_seed():
    backend = StubBackend(StubScript())
    first = backend.complete("some prompt : ", SAMPLING, 7)
    second = backend.complete("some prompt : ", SAMPLING, 7)
    assert first == second
    assert first.strip()


def test_stub_completion_never_contains_stop_sequence():
    script = StubScript()
    script.add_completion("p", 0, "first part | second part")
    backend = StubBackend(script)
    sampling = SamplingConfig(stop_sequences=(" | ",))
    assert backend.complete("p", sampling, 0) == "first part"


def test_scripted_scores_align_with_candidates():
    script = StubScript()
    prompt = "Review : x\nSentiment : "
    script.add_score(prompt, "positive", -0.2)
    script.add_score(prompt, "negative", -1.8)
    backend = StubBackend(script)
    assert backend.score_continuations(prompt, ["positive", "negative"]) == [-0.2, -1.8]
    assert backend.score_continuations(prompt, ["negative", "positive"]) == [-1.8, -0.2]


def test_score_shape_matches_candidates(stub_backend):
    scores = stub_backend.score_continuations("p", ["a", "b", "c"])
    assert len(scores) == 3
    assert all(s <= 0 for s in scores)


def test_default_score_used_for_unscripted_pairs():
    backend = StubBackend(StubScript(default_score=-4.5))
    assert backend.score_continuations("p", ["word"]) == [-4.5]


def test_hash_scores_are_deterministic_and_nonpositive():
    a = StubBackend(StubScript(score_mode="hash"))
    b = StubBackend(StubScript(score_mode="hash"))
    sa = a.score_continuations("p", ["x", "y"])
    sb = b.score_continuations("p", ["x", "y"])
    assert sa == sb
    assert all(s < 0 for s in sa)
    assert sa[0] != sa[1]


def test_stub_embedding_rules_and_normalization():
    script = StubScript()
    script.add_embedding("already unit", (0.6, 0.8))
    script.add_embedding("scaled", (3.0, 4.0))
    backend = StubBackend(script)
    assert backend.embed("already unit") == (0.6, 0.8)
    assert backend.embed("scaled") == (0.6, 0.8)
    assert backend.embed("free text") == backend.embed("free text")


def test_zero_embedding_rule_rejected():
    with pytest.raises(ConfigurationError):
        StubScript().add_embedding("x", (0.0, 0.0))


def test_positive_score_rule_rejected():
    with pytest.raises(ConfigurationError):
        StubScript().add_score("p", "w", 0.5)
    with pytest.raises(ConfigurationError):
        StubScript(default_score=1.0)


def test_scoring_preconditions(stub_backend):
    with pytest.raises(InputError):
        stub_backend.score_continuations("p", [])
    with pytest.raises(InputError):
        stub_backend.score_continuations("p", ["ok", ""])
    with pytest.raises(InputError):
        stub_backend.complete("", SAMPLING, 0)


def test_stub_counters_count_calls(stub_backend):
    stub_backend.complete("p", SAMPLING, 0)
    stub_backend.complete("p", SAMPLING, 1)
    stub_backend.score_continuations("p", ["a"])
    stub_backend.embed("t")
    assert stub_backend.complete_calls == 2
    assert stub_backend.score_calls == 1
    assert stub_backend.embed_calls == 1


def test_script_file_round_trip(tmp_path):
    script = StubScript(default_score=-3.25, score_mode="hash")
    script.add_completion("prompt one : ", 0, "alpha beta .")
    script.add_completion("prompt two : ", 4, "gamma .")
    script.add_score("prompt one : ", "yes", -0.125)
    script.add_embedding("some text", (1.0, 2.0, -0.5))
    path = tmp_path / "stub.txt"
    script.save(path)
    loaded = StubScript.load(path)
    assert loaded == script


def test_script_parse_error_names_line(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("# header\nscore\tdeadbeef\tword\tnot-a-number\n")
    with pytest.raises(ConfigurationError, match="line 2"):
        StubScript.load(path)


def test_script_rejects_tab_or_newline_in_rules():
    with pytest.raises(ConfigurationError):
        StubScript().add_completion("p", 0, "has\ttab")
    with pytest.raises(ConfigurationError):
        StubScript().add_completion("p", 0, "has\nnewline")


def test_stub_bitwise_reproducible_across_processes(tmp_path):
    script = StubScript(score_mode="hash")
    script.add_completion("scripted : ", 3, "fixed output .")
    path = tmp_path / "stub.txt"
    script.save(path)
    code = (
        "from sgicl import StubBackend, StubScript, SamplingConfig\n"
        f"backend = StubBackend(StubScript.load({str(path)!r}))\n"
        "print(backend.complete('scripted : ', SamplingConfig(), 3))\n"
        "print(backend.complete('unscripted : ', SamplingConfig(), 11))\n"
        "print(backend.score_continuations('q', ['a', 'b']))\n"
        "print(backend.embed('text'))\n"
    )
    runs = [
        subprocess.run(
            [sys.executable, "-c", code], capture_output=True, text=True, check=True
        ).stdout
        for _ in range(2)
    ]
    assert runs[0] == runs[1]
    assert runs[0].startswith("fixed output .\n")


# ---------------------------------------------------------------------------
# Remote
# ---------------------------------------------------------------------------


def _remote(server, **kwargs) -> RemoteBackend:
    kwargs.setdefault("backoff_base", 0.001)
    return RemoteBackend(server.url + "/v1/completions", **kwargs)


def test_remote_complete_sends_wire_fields_and_truncates(canned_server):
    canned_server.respond_with(
        lambda record: (200, {"choices": [{"text": "great movie\nextra"}]})
    )
    backend = _remote(canned_server, model="test-model")
    out = backend.complete("Review : x\nSentiment : ", SAMPLING, seed=42)
    assert out == "great movie"
    body = canned_server.requests[0]["body"]
    assert body["prompt"] == "Review : x\nSentiment : "
    assert body["max_tokens"] == 64
    assert body["temperature"] == 0.5
    assert body["stop"] == ["\n"]
    assert body["seed"] == 42
    assert body["model"] == "test-model"


def test_remote_echo_scoring_exact_boundary(canned_server):
    prompt = "Review : x\nSentiment : "  # 23 chars

    def responder(record):
        assert record["body"]["echo"] is True
        assert record["body"]["logprobs"] == 1
        assert record["body"]["max_tokens"] == 0
        return 200, {
            "choices": [
                {
                    "logprobs": {
                        "tokens": ["Review", " :", " x", "\n", "Sentiment", " :", " ", "great"],
                        "token_logprobs": [None, -1.0, -2.0, -0.5, -3.0, -0.25, -0.125, -0.75],
                        "text_offset": [0, 6, 8, 10, 11, 20, 22, 23],
                    }
                }
            ]
        }

    canned_server.respond_with(responder)
    backend = _remote(canned_server)
    # single-token candidate: the summed score equals that token's logprob
    assert backend.score_continuations(prompt, ["great"]) == [-0.75]


def test_remote_echo_scoring_includes_boundary_merged_token(canned_server):
    prompt = "Sentiment : "  # 12 chars; " good" starts at offset 11

    def responder(record):
        return 200, {
            "choices": [
                {
                    "logprobs": {
                        "tokens": ["Sent", "iment", " :", " good"],
                        "token_logprobs": [None, -0.5, -0.25, -1.5],
                        "text_offset": [0, 4, 9, 11],
                    }
                }
            ]
        }

    canned_server.respond_with(responder)
    backend = _remote(canned_server)
    assert backend.score_continuations(prompt, ["good"]) == [-1.5]


def test_remote_multi_token_candidate_sums_and_normalizes(canned_server):
    prompt = "X: "  # 3 chars

    def responder(record):
        return 200, {
            "choices": [
                {
                    "logprobs": {
                        "tokens": ["X", ":", " terr", "ible"],
                        "token_logprobs": [None, -0.1, -2.0, -0.5],
                        "text_offset": [0, 1, 2, 7],
                    }
                }
            ]
        }

    canned_server.respond_with(responder)
    # sum of the candidate's per-token conditional log-probabilities
    assert _remote(canned_server).score_continuations(prompt, ["terrible"]) == [-2.5]
    assert _remote(canned_server, length_normalize=True).score_continuations(
        prompt, ["terrible"]
    ) == [-1.25]


def test_remote_scoring_without_logprobs_names_candidate(canned_server):
    canned_server.respond_with(lambda record: (200, {"choices": [{"text": "x"}]}))
    backend = _remote(canned_server)
    with pytest.raises(ScoringError) as excinfo:
        backend.score_continuations("p : ", ["positive"])
    assert excinfo.value.candidate == "positive"


def test_remote_retries_transport_errors_then_succeeds(canned_server):
    state = {"calls": 0}

    def responder(record):
        state["calls"] += 1
        if state["calls"] == 1:
            return 500, {"error": "boom"}
        return 200, {"choices": [{"text": "ok ."}]}

    canned_server.respond_with(responder)
    backend = _remote(canned_server)
    assert backend.complete("p : ", SAMPLING, 0) == "ok ."
    assert state["calls"] == 2


def test_remote_exhausted_retries_become_generation_failed(canned_server):
    canned_server.respond_with(lambda record: (500, {"error": "down"}))
    backend = _remote(canned_server)
    sampling = SamplingConfig(retry_limit=1)
    with pytest.raises(GenerationFailedError) as excinfo:
        backend.complete("p : ", sampling, 0)
    assert excinfo.value.prompt_fingerprint == fingerprint("p : ")
    assert len(canned_server.requests) == 2  # initial + 1 retry


def test_remote_refusal_is_not_retried(canned_server):
    canned_server.respond_with(lambda record: (400, {"error": "bad request"}))
    backend = _remote(canned_server)
    with pytest.raises(GenerationFailedError):
        backend.complete("p : ", SAMPLING, 0)
    assert len(canned_server.requests) == 1


def test_remote_embed_normalizes_and_hits_embed_endpoint(canned_server):
    canned_server.respond_with(lambda record: (200, {"data": [{"embedding": [3, 4]}]}))
    backend = RemoteBackend(
        canned_server.url + "/v1/completions",
        embed_endpoint=canned_server.url + "/v1/embeddings",
        backoff_base=0.001,
    )
    assert backend.embed("some text") == (0.6, 0.8)
    assert canned_server.requests[0]["path"] == "/v1/embeddings"
    assert canned_server.requests[0]["body"]["input"] == "some text"


def test_remote_embed_without_endpoint_is_config_error(canned_server):
    backend = _remote(canned_server)
    with pytest.raises(ConfigurationError):
        backend.embed("text")


def test_remote_embed_transport_error_retryable(canned_server):
    canned_server.respond_with(lambda record: (500, {"error": "down"}))
    backend = RemoteBackend(
        canned_server.url + "/v1/completions",
        embed_endpoint=canned_server.url + "/v1/embeddings",
        transport_retries=1,
        backoff_base=0.001,
    )
    with pytest.raises(TransportError):
        backend.embed("text")


def test_remote_sends_bearer_token_from_env(canned_server, monkeypatch):
    monkeypatch.setenv("SGICL_TEST_TOKEN", "sekret")
    canned_server.respond_with(lambda record: (200, {"choices": [{"text": "ok"}]}))
    backend = _remote(canned_server, auth_env="SGICL_TEST_TOKEN")
    backend.complete("p : ", SAMPLING, 0)
    assert canned_server.requests[0]["headers"]["authorization"] == "Bearer sekret"
