import json

import pytest
import requests

from toxtrig.clients import (
    API_KEY_ENV, CompletionClient, HttpCompletionClient, RecordingClient, ReplayClient, prompt_hash, read_fixtures,
    write_fixtures,
)
from toxtrig.exceptions import CompletionError, ConfigError, ReplayMissError, ResponseParseError

from tests.helpers import ScriptedModel, completion_response

MESSAGES = [{'role': 'system', 'content': 'Extrae hábitos.'}, {'role': 'user', 'content': 'Texto:\nNo fumador.'}]
PAYLOAD = '{"tobacco": ["No fumador"], "alcohol": [], "cannabis": [], "drug": []}'


class CountingPost:

    def __init__(self, *responses):
        self.responses = list(responses)
        self.calls = 0

    def __call__(self, url, json=None, headers=None, timeout=None):
        self.calls += 1
        response = self.responses[min(self.calls, len(self.responses)) - 1]
        if isinstance(response, Exception):
            raise response
        return response


@pytest.fixture
def client():
    return HttpCompletionClient('https://llm.test/', api_key='secret', backoff_ms=0, backoff_max_ms=0)


def test_prompt_hash_is_canonical():
    reordered = [{'content': m['content'], 'role': m['role']} for m in MESSAGES]
    assert prompt_hash(MESSAGES) == prompt_hash(reordered)
    assert prompt_hash(MESSAGES) != prompt_hash(MESSAGES[:1])
    assert len(prompt_hash(MESSAGES)) == 64


def test_replay_hit(tmp_path):
    path = tmp_path / 'replay.jsonl'
    write_fixtures(path, {prompt_hash(MESSAGES): PAYLOAD})
    assert ReplayClient(path).complete({'messages': MESSAGES}) == PAYLOAD


def test_replay_miss_names_the_hash(tmp_path):
    path = tmp_path / 'replay.jsonl'
    write_fixtures(path, {})
    other = MESSAGES[:1] + [{'role': 'user', 'content': 'Texto:\nOtra sección.'}]
    with pytest.raises(ReplayMissError) as e:
        ReplayClient(path).complete({'messages': other})
    assert e.value.prompt_hash == prompt_hash(other)
    assert prompt_hash(other) in str(e.value)


def test_replay_file_must_exist(tmp_path):
    with pytest.raises(ConfigError):
        ReplayClient(tmp_path / 'missing.jsonl')


def test_replay_rejects_bad_records(tmp_path):
    path = tmp_path / 'replay.jsonl'
    path.write_text('{"prompt_hash": "abc"}\n', encoding='utf-8')
    with pytest.raises(CompletionError):
        read_fixtures(path)


def test_fixture_file_is_sorted_and_one_record_per_line(tmp_path):
    path = tmp_path / 'replay.jsonl'
    write_fixtures(path, {'b' * 64: 'dos', 'a' * 64: 'uno'})
    lines = path.read_text(encoding='utf-8').splitlines()
    assert [json.loads(line)['payload'] for line in lines] == ['uno', 'dos']


def test_http_success(monkeypatch, client):
    post = ScriptedModel({'No fumador.': {'tobacco': ['No fumador'], 'alcohol': [], 'cannabis': [], 'drug': []}})
    monkeypatch.setattr(requests, 'post', post)
    content = client.complete({'messages': MESSAGES})
    assert json.loads(content)['tobacco'] == ['No fumador']
    sent, = post.requests
    assert sent['url'] == 'https://llm.test/chat/completions'
    assert sent['headers'] == {'Authorization': 'Bearer secret'}


def test_http_429_retries_then_fails(monkeypatch, client):
    post = CountingPost(completion_response('', status=429))
    monkeypatch.setattr(requests, 'post', post)
    with pytest.raises(CompletionError):
        client.complete({'messages': MESSAGES})
    assert post.calls == 3


def test_http_recovers_after_transient_errors(monkeypatch, client):
    post = CountingPost(requests.ConnectionError('reset'), completion_response('', status=503),
                        completion_response(PAYLOAD))
    monkeypatch.setattr(requests, 'post', post)
    assert client.complete({'messages': MESSAGES}) == PAYLOAD
    assert post.calls == 3


def test_http_client_errors_are_not_retried(monkeypatch, client):
    post = CountingPost(completion_response('', status=400))
    monkeypatch.setattr(requests, 'post', post)
    with pytest.raises(CompletionError):
        client.complete({'messages': MESSAGES})
    assert post.calls == 1


def test_http_unexpected_body(monkeypatch, client):
    response = completion_response(PAYLOAD)
    response._content = b'{"choices": []}'
    monkeypatch.setattr(requests, 'post', CountingPost(response))
    with pytest.raises(ResponseParseError) as e:
        client.complete({'messages': MESSAGES})
    assert e.value.raw == '{"choices": []}'


def test_http_needs_endpoint_and_key(monkeypatch):
    monkeypatch.delenv(API_KEY_ENV, raising=False)
    with pytest.raises(ConfigError):
        HttpCompletionClient(None, api_key='secret')
    with pytest.raises(ConfigError):
        HttpCompletionClient('https://llm.test')
    monkeypatch.setenv(API_KEY_ENV, 'from-env')
    assert HttpCompletionClient('https://llm.test').api_key == 'from-env'


class Echo(CompletionClient):

    def complete(self, request):
        return request['messages'][-1]['content'].upper()


def test_recording_then_replay(tmp_path):
    path = tmp_path / 'replay.jsonl'
    recorder = RecordingClient(Echo(), path)
    assert recorder.complete({'messages': MESSAGES}) == 'TEXTO:\nNO FUMADOR.'
    recorder.save()

    replay = ReplayClient(path)
    assert replay.complete({'messages': MESSAGES}) == 'TEXTO:\nNO FUMADOR.'
    assert len(replay.records) == 1
