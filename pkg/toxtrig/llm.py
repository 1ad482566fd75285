"""Zero/few-shot trigger extraction with a chat-completion model.

Each document is cut into sections, every section gets its own request made of
the task prompt, the sampled demonstrations and the section text, and the
model answers with one phrase list per trigger type.
"""
import json
import logging
import queue
import random
import re
import threading
from dataclasses import dataclass, field
from string import Template
from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, StrictStr, ValidationError, field_validator

from toxtrig.corpus import TriggerType, sort_key
from toxtrig.exceptions import ConfigError, PromptError, ResponseParseError, SamplingError, ToxTrigError
from toxtrig.segmentation import segment_sections

log = logging.getLogger(__name__)

DEFAULT_MODEL = 'gpt-4.1'
DEFAULT_K = 5
DEFAULT_SEED = 42
DEFAULT_EXAMPLE_CHAR_BUDGET = 2000
DEFAULT_PARALLELISM = 4

NEGATION_CUES = frozenset(['no', 'niega', 'negaba', 'negó', 'sin', 'nunca', 'ni', 'jamás'])
NEGATION_WINDOW = 3
WORD = re.compile(r'\w+')

FIELD_TYPES = (
    ('tobacco', TriggerType.TOBACCO),
    ('alcohol', TriggerType.ALCOHOL),
    ('cannabis', TriggerType.CANNABIS),
    ('drug', TriggerType.DRUG),
)


class PhraseSet(BaseModel):
    """The model's answer for one section: phrases per trigger type."""
    model_config = ConfigDict(extra='forbid', frozen=True)

    tobacco: List[StrictStr]
    alcohol: List[StrictStr]
    cannabis: List[StrictStr]
    drug: List[StrictStr]

    @field_validator('tobacco', 'alcohol', 'cannabis', 'drug')
    @classmethod
    def _trim(cls, phrases):
        return [p.strip() for p in phrases if p.strip()]

    @classmethod
    def empty(cls):
        return cls(tobacco=[], alcohol=[], cannabis=[], drug=[])

    @classmethod
    def from_mentions(cls, mentions):
        lists = {name: [] for name, _ in FIELD_TYPES}
        names = {kind: name for name, kind in FIELD_TYPES}
        for mention in sorted(mentions, key=sort_key):
            lists[names[mention.kind]].append(mention.surface)
        return cls(**lists)

    def by_type(self):
        return [(kind, getattr(self, name)) for name, kind in FIELD_TYPES]

    def __len__(self):
        return sum(len(phrases) for _, phrases in self.by_type())


class AssertedPhrase(BaseModel):
    model_config = ConfigDict(extra='forbid')

    phrase: StrictStr
    assertion: Literal['asserted', 'negated']


class AssertedPhraseSet(BaseModel):
    """Answer shape for the assertion-aware prompt."""
    model_config = ConfigDict(extra='forbid')

    tobacco: List[AssertedPhrase]
    alcohol: List[AssertedPhrase]
    cannabis: List[AssertedPhrase]
    drug: List[AssertedPhrase]

    def to_phrase_set(self):
        return PhraseSet(**{name: [item.phrase for item in getattr(self, name)] for name, _ in FIELD_TYPES})

    def negated_count(self):
        return sum(item.assertion == 'negated' for name, _ in FIELD_TYPES for item in getattr(self, name))


def response_schema(assertion_variant=False):
    model = AssertedPhraseSet if assertion_variant else PhraseSet
    return {
        'type': 'json_schema',
        'json_schema': {
            'name': 'toxic_habit_triggers',
            'strict': True,
            'schema': model.model_json_schema(),
        },
    }


def serialize_phrase_set(phrases, negated=None):
    """Canonical JSON answer for a PhraseSet; with `negated`, in the assertion-aware shape."""
    if negated is None:
        data = {name: list(getattr(phrases, name)) for name, _ in FIELD_TYPES}
    else:
        data = {
            name: [
                {'phrase': p, 'assertion': 'negated' if p in getattr(negated, name) else 'asserted'}
                for p in getattr(phrases, name)
            ]
            for name, _ in FIELD_TYPES
        }
    return json.dumps(data, ensure_ascii=False)


def parse_response(raw, assertion_variant=False):
    """Validates a structured answer and returns its PhraseSet.

    Assertion labels, when present, are checked and then dropped: negated
    triggers are still mentions.
    """
    data = raw
    if isinstance(raw, (str, bytes)):
        try:
            data = json.loads(raw)
        except ValueError as e:
            raise ResponseParseError('Response is not JSON: {}'.format(e), raw=raw) from e

    try:
        if assertion_variant:
            answer = AssertedPhraseSet.model_validate(data)
            negated = answer.negated_count()
            if negated:
                log.debug('Response carries %d negated triggers', negated)
            return answer.to_phrase_set()
        return PhraseSet.model_validate(data)
    except ValidationError as e:
        raise ResponseParseError('Response does not match the phrase schema: {}'.format(e), raw=raw) from e


@dataclass(frozen=True)
class FewShotExample:
    doc_id: str
    text: str
    gold: PhraseSet
    negated: PhraseSet = field(default_factory=PhraseSet.empty)

    def __post_init__(self):
        for kind, phrases in self.gold.by_type():
            for phrase in phrases:
                if phrase not in self.text:
                    raise SamplingError('{}: {} phrase {!r} does not occur in the example text'.format(
                        self.doc_id, kind.name, phrase))


DEFAULT_SYSTEM_TEXT = (
    'You are a clinical information extraction assistant. You read Spanish clinical case '
    'reports and find mentions of toxic habits: the use or abuse of tobacco, alcohol, '
    'cannabis and other drugs.'
)

DEFAULT_TASK_INSTRUCTION = (
    'Extract every phrase of the text that mentions a toxic habit and sort the phrases into '
    'four lists: tobacco, alcohol, cannabis and drug. Copy each phrase exactly as it is written '
    'in the text and keep it as short as possible, without the surrounding context such as '
    'amounts, frequency or how the substance is taken. Return an empty list for a type that '
    'is not mentioned. Answer with a JSON object with the keys "tobacco", "alcohol", '
    '"cannabis" and "drug", each holding a list of strings.'
)

ASSERTION_INSTRUCTION = (
    'For every phrase also say whether the habit is asserted or negated in the text. Negated '
    'habits, for example "No fumador", must still be listed. Each list item is an object with '
    'the keys "phrase" and "assertion", where assertion is "asserted" or "negated".'
)

DEFAULT_EXAMPLE_FORMAT = 'Texto:\n$text'


@dataclass(frozen=True)
class PromptTemplate:
    system_text: str = DEFAULT_SYSTEM_TEXT
    task_instruction: str = DEFAULT_TASK_INSTRUCTION
    example_format: str = DEFAULT_EXAMPLE_FORMAT
    assertion_variant: bool = False

    def system_message(self):
        parts = [self.system_text, self.task_instruction]
        if self.assertion_variant:
            parts.append(ASSERTION_INSTRUCTION)
        return '\n\n'.join(p.strip() for p in parts if p.strip())

    def user_message(self, text):
        try:
            return Template(self.example_format).substitute(text=text)
        except (KeyError, ValueError) as e:
            raise PromptError('Cannot fill example format {!r}: {}'.format(self.example_format, e)) from e


@dataclass(frozen=True)
class LlmRequestConfig:
    model: str = DEFAULT_MODEL
    temperature: float = 0.0
    top_p: float = 1.0
    max_tokens: int = 4000
    seed: int = DEFAULT_SEED
    k: int = DEFAULT_K
    example_char_budget: int = DEFAULT_EXAMPLE_CHAR_BUDGET
    parallelism: int = DEFAULT_PARALLELISM

    def __post_init__(self):
        if self.temperature < 0:
            raise ConfigError('temperature must be >= 0, got {}'.format(self.temperature))
        if self.max_tokens <= 0:
            raise ConfigError('max_tokens must be > 0, got {}'.format(self.max_tokens))
        if self.k < 0:
            raise ConfigError('k must be >= 0, got {}'.format(self.k))
        if self.parallelism < 1:
            raise ConfigError('parallelism must be >= 1, got {}'.format(self.parallelism))


def is_negated(text, start):
    """True when a negation cue sits among the few words before `start` on the same line."""
    line_start = text.rfind('\n', 0, start) + 1
    words = [w.lower() for w in WORD.findall(text[line_start:start])]
    return any(w in NEGATION_CUES for w in words[-NEGATION_WINDOW:])


def _example_from(doc, text, offset, mentions):
    local = [m for m in mentions if offset <= m.start and m.end <= offset + len(text)]
    negated = [m for m in local if is_negated(doc.text, m.start)]
    return FewShotExample(
        doc_id=doc.id,
        text=text,
        gold=PhraseSet.from_mentions(local),
        negated=PhraseSet.from_mentions(negated),
    )


def _candidate_example(doc, mentions, char_budget):
    if not mentions:
        return None
    if len(doc.text) <= char_budget:
        return _example_from(doc, doc.text, 0, mentions)
    for section in segment_sections(doc.text):
        if any(section.start <= m.start and m.end <= section.end for m in mentions):
            return _example_from(doc, section.text, section.start, mentions)
    return None


def sample_examples(train, k, seed, char_budget=DEFAULT_EXAMPLE_CHAR_BUDGET):
    """Draws `k` demonstrations from annotated train documents, reproducibly for a seed.

    Short documents are used whole; longer ones contribute their first section
    that holds a gold mention.
    """
    if k == 0:
        return []

    eligible = {}
    for doc in train:
        example = _candidate_example(doc, train.gold_for(doc.id), char_budget)
        if example is not None:
            eligible[doc.id] = example

    if k > len(eligible):
        raise SamplingError('Asked for {} examples but only {} train documents are eligible'.format(
            k, len(eligible)))

    chosen = random.Random(seed).sample(sorted(eligible), k)
    log.info('Sampled %d examples (seed=%s): %s', k, seed, ', '.join(chosen))
    return [eligible[doc_id] for doc_id in chosen]


def render_prompt(template, examples, section):
    """Builds the message sequence: system prompt, demonstration pairs, then the section."""
    system = template.system_message()
    missing = [name for name, _ in FIELD_TYPES if name not in system.lower()]
    if missing:
        raise PromptError('Prompt does not name the trigger types: {}'.format(', '.join(missing)))

    messages = [{'role': 'system', 'content': system}]
    for example in examples:
        answer = serialize_phrase_set(example.gold, example.negated if template.assertion_variant else None)
        messages.append({'role': 'user', 'content': template.user_message(example.text)})
        messages.append({'role': 'assistant', 'content': answer})
    messages.append({'role': 'user', 'content': template.user_message(section.text)})
    return messages


def build_request(cfg, template, messages):
    return {
        'model': cfg.model,
        'messages': messages,
        'temperature': cfg.temperature,
        'top_p': cfg.top_p,
        'max_tokens': cfg.max_tokens,
        'response_format': response_schema(template.assertion_variant),
    }


@dataclass(frozen=True)
class SectionFailure:
    doc_id: str
    section: Optional[int]
    error: str
    raw: Optional[str] = None

    def to_dict(self):
        return {'section': self.section, 'error': self.error, 'raw': self.raw}


def llm_extract_document(doc, cfg, template, examples, client, failures=None):
    """One request per section; a failed section yields an empty PhraseSet and a failure record."""
    results = []
    for section in segment_sections(doc.text):
        phrases = PhraseSet.empty()
        try:
            request = build_request(cfg, template, render_prompt(template, examples, section))
            phrases = parse_response(client.complete(request), template.assertion_variant)
        except ToxTrigError as e:
            log.warning('%s: section %d failed: %s', doc.id, section.index, e)
            if failures is not None:
                raw = getattr(e, 'raw', None)
                failures.append(SectionFailure(doc.id, section.index, str(e), raw if isinstance(raw, str) else None))
        results.append((section, phrases))
    return results


def _worker(jobs, results, failures, cfg, template, examples, client):
    while True:
        doc = jobs.get()
        if doc is None:
            jobs.task_done()
            return
        doc_failures = []
        try:
            results[doc.id] = llm_extract_document(doc, cfg, template, examples, client, doc_failures)
        except Exception as e:  # noqa
            log.exception('%s: extraction error', doc.id)
            results[doc.id] = []
            doc_failures.append(SectionFailure(doc.id, None, str(e)))
        failures[doc.id] = doc_failures
        jobs.task_done()


def extract_corpus(documents, cfg, template, examples, client):
    """Runs llm_extract_document over `documents` with `cfg.parallelism` worker threads.

    Returns (results, failures), both keyed by document id in sorted order.
    """
    documents = list(documents)
    jobs = queue.Queue()
    results = {}
    failures = {}

    workers = []
    for i in range(min(cfg.parallelism, max(1, len(documents)))):
        t = threading.Thread(
            name='extract-worker-{}'.format(i),
            target=_worker,
            args=(jobs, results, failures, cfg, template, examples, client),
            daemon=True,
        )
        t.start()
        workers.append(t)

    for doc in documents:
        jobs.put(doc)
    for _ in workers:
        jobs.put(None)
    for t in workers:
        t.join()

    ordered = sorted(results)
    n_failed = sum(len(failures[doc_id]) for doc_id in ordered)
    log.info('Extracted %d documents with %d workers, %d failed sections', len(ordered), len(workers), n_failed)
    return {doc_id: results[doc_id] for doc_id in ordered}, {doc_id: failures[doc_id] for doc_id in ordered}
