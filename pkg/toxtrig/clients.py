"""Chat-completion backends: a live HTTP client plus record/replay fixtures for offline runs."""
import hashlib
import json
import logging
import os
import threading
from pathlib import Path

import requests
from retrying import Retrying

from toxtrig.exceptions import CompletionError, ConfigError, ReplayMissError, ResponseParseError

log = logging.getLogger(__name__)

API_KEY_ENV = 'TOXTRIG_API_KEY'
DEFAULT_PATH = '/chat/completions'
DEFAULT_TIMEOUT = 60.0
DEFAULT_MAX_RETRIES = 2


def prompt_hash(messages):
    """sha256 over the canonical JSON form of a rendered message sequence."""
    canonical = json.dumps(messages, ensure_ascii=False, sort_keys=True, separators=(',', ':'))
    return hashlib.sha256(canonical.encode('utf-8')).hexdigest()


def _is_retryable(exception):
    if isinstance(exception, (requests.Timeout, requests.ConnectionError)):
        return True
    if isinstance(exception, requests.HTTPError) and exception.response is not None:
        status = exception.response.status_code
        return status == 429 or status >= 500
    return False


class CompletionClient:
    """Turns a chat-completion request body into the raw content of the first choice."""

    def complete(self, request):
        raise NotImplementedError


class HttpCompletionClient(CompletionClient):

    def __init__(self, endpoint, path=DEFAULT_PATH, api_key=None, timeout=DEFAULT_TIMEOUT,
                 max_retries=DEFAULT_MAX_RETRIES, backoff_ms=1000, backoff_max_ms=10000):
        if not endpoint:
            raise ConfigError('An LLM endpoint is required for live requests.')
        self.url = endpoint.rstrip('/') + '/' + path.lstrip('/')
        self.api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV)
        if not self.api_key:
            raise ConfigError('Set {} to call {}.'.format(API_KEY_ENV, self.url))
        self.timeout = timeout
        self.max_retries = max_retries
        self.backoff_ms = backoff_ms
        self.backoff_max_ms = backoff_max_ms

    def __repr__(self):
        return '<HttpCompletionClient {}>'.format(self.url)

    def _post(self, request):
        log.debug('POST %s', self.url)
        try:
            response = requests.post(
                self.url,
                json=request,
                headers={'Authorization': 'Bearer {}'.format(self.api_key)},
                timeout=self.timeout,
            )
            response.raise_for_status()
        except requests.RequestException:
            log.exception('Completion request failure.')
            raise
        return response

    def _query(self, request):
        retrying = Retrying(
            stop_max_attempt_number=self.max_retries + 1,
            wait_exponential_multiplier=self.backoff_ms,
            wait_exponential_max=self.backoff_max_ms,
            retry_on_exception=_is_retryable,
        )
        return retrying.call(self._post, request)

    def complete(self, request):
        try:
            response = self._query(request)
        except requests.RequestException as e:
            raise CompletionError('Completion request to {} failed: {}'.format(self.url, e)) from e

        try:
            content = response.json()['choices'][0]['message']['content']
        except (ValueError, KeyError, IndexError, TypeError) as e:
            raise ResponseParseError('Unexpected completion response: {}'.format(e), raw=response.text) from e
        if not isinstance(content, str):
            raise ResponseParseError('Completion carried no text content.', raw=response.text)
        return content


def read_fixtures(path):
    records = {}
    path = Path(path)
    if not path.exists():
        return records
    with open(path, 'r', encoding='utf-8') as f:
        for line_number, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                records[record['prompt_hash']] = record['payload']
            except (ValueError, KeyError, TypeError) as e:
                raise CompletionError('{}: line {}: bad replay record: {}'.format(path, line_number, e)) from e
    return records


def write_fixtures(path, records):
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        for key in sorted(records):
            f.write(json.dumps({'prompt_hash': key, 'payload': records[key]}, ensure_ascii=False) + '\n')


class ReplayClient(CompletionClient):
    """Serves recorded payloads keyed by prompt hash; a miss is an error."""

    def __init__(self, path):
        self.path = Path(path)
        if not self.path.exists():
            raise ConfigError('Replay file {} does not exist.'.format(self.path))
        self.records = read_fixtures(self.path)
        log.info('Loaded %d replay records from %s', len(self.records), self.path)

    def __repr__(self):
        return '<ReplayClient {} ({} records)>'.format(self.path, len(self.records))

    def complete(self, request):
        key = prompt_hash(request['messages'])
        try:
            return self.records[key]
        except KeyError:
            raise ReplayMissError(key)


class RecordingClient(CompletionClient):
    """Wraps a live client and keeps every payload for a replay file."""

    def __init__(self, client, path):
        self.client = client
        self.path = Path(path)
        self.records = read_fixtures(self.path)
        self._lock = threading.Lock()

    def __repr__(self):
        return '<RecordingClient {} -> {}>'.format(self.client, self.path)

    def complete(self, request):
        payload = self.client.complete(request)
        with self._lock:
            self.records[prompt_hash(request['messages'])] = payload
        return payload

    def save(self):
        with self._lock:
            write_fixtures(self.path, self.records)
        log.info('Recorded %d replay records to %s', len(self.records), self.path)
