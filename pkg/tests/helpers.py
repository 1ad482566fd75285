"""Shared test helpers: fixture paths, mention builders and a scripted chat model."""
import json
from pathlib import Path

import requests

from toxtrig.corpus import Document, Mention, TriggerType

FIXTURES = Path(__file__).parent / 'fixtures'
CORPUS_DIR = FIXTURES / 'corpus'
PRED_DIR = FIXTURES / 'pred'
GOLDEN_REPORT = FIXTURES / 'golden_report.tsv'
LLM_ANSWERS = FIXTURES / 'llm_answers.json'
REPLAY_FIXTURE = FIXTURES / 'fixtures.rpl'

TOBACCO = TriggerType.TOBACCO
ALCOHOL = TriggerType.ALCOHOL
CANNABIS = TriggerType.CANNABIS
DRUG = TriggerType.DRUG


def mention_of(doc, kind, surface, nth=1):
    """The `nth` occurrence of `surface` in `doc.text` as a Mention."""
    start = -1
    for _ in range(nth):
        start = doc.text.index(surface, start + 1)
    return Mention(doc.id, kind, start, start + len(surface), surface)


def span(kind, start, end, doc_id='d1'):
    """A Mention whose surface is a placeholder of the right length."""
    return Mention(doc_id, kind, start, end, 'x' * (end - start))


def make_doc(text, doc_id='d1'):
    return Document(doc_id, text)


def completion_response(content, status=200):
    response = requests.Response()
    response.status_code = status
    response.url = 'https://llm.test/chat/completions'
    body = {'choices': [{'message': {'role': 'assistant', 'content': content}}]}
    response._content = json.dumps(body, ensure_ascii=False).encode('utf-8')
    response.encoding = 'utf-8'
    return response


class ScriptedModel:
    """Stands in for `requests.post`: answers by looking up the section text of the last message."""

    def __init__(self, answers=None, prefix='Texto:\n'):
        if answers is None:
            with open(LLM_ANSWERS, encoding='utf-8') as f:
                answers = json.load(f)
        self.answers = answers
        self.prefix = prefix
        self.requests = []

    def __call__(self, url, json=None, headers=None, timeout=None):
        self.requests.append({'url': url, 'body': json, 'headers': headers, 'timeout': timeout})
        text = json['messages'][-1]['content'][len(self.prefix):]
        answer = self.answers.get(text, {'tobacco': [], 'alcohol': [], 'cannabis': [], 'drug': []})
        return completion_response(_dumps(answer))


def _dumps(answer):
    return json.dumps(answer, ensure_ascii=False)
