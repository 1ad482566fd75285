"""Standoff (brat-style) corpora: documents, trigger mentions, splits and statistics."""
import enum
import hashlib
import logging
import random
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import Mapping, Tuple

from toxtrig.exceptions import CorpusError, IntegrityError, SplitError, StandoffParseError
from toxtrig.segmentation import count_sentences

log = logging.getLogger(__name__)

BOM = '\ufeff'

LOAD_WORKERS = 4

TRIGGER_LINE = re.compile(r'^(?P<id>T\d+)\t(?P<tag>[^\t ]+) (?P<offsets>[^\t]+)\t(?P<surface>[^\t]*)$')
OFFSETS = re.compile(r'^(?P<start>\d+) (?P<end>\d+)$')
# Any other brat record: an id (R1, A3, #2, E1, *, ...) followed by a tab.
OTHER_LINE = re.compile(r'^(?:[A-Z#]\w*|\*)\t')


class TriggerType(enum.Enum):
    TOBACCO = 'TOBACCO'
    ALCOHOL = 'ALCOHOL'
    CANNABIS = 'CANNABIS'
    DRUG = 'DRUG'


DEFAULT_TAG_MAP = MappingProxyType({t.name: t for t in TriggerType})


def build_tag_map(aliases=None):
    """Extends the default tag map with `alias -> type name` pairs (keys are case-insensitive)."""
    tag_map = dict(DEFAULT_TAG_MAP)
    for alias, type_name in (aliases or {}).items():
        try:
            tag_map[alias.upper()] = TriggerType[type_name.strip().upper()]
        except KeyError:
            raise CorpusError('Tag alias {} points at unknown trigger type {}'.format(alias, type_name))
    return MappingProxyType(tag_map)


@dataclass(frozen=True)
class Document:
    id: str
    text: str

    def __post_init__(self):
        if not self.id:
            raise CorpusError('Document id must not be empty.')

    def __repr__(self):
        return '<Document {id}: {n} chars>'.format(id=self.id, n=len(self.text))


@dataclass(frozen=True)
class Mention:
    doc_id: str
    kind: TriggerType
    start: int
    end: int
    surface: str

    @property
    def span(self):
        return (self.start, self.end)

    @property
    def length(self):
        return self.end - self.start

    def overlaps(self, other):
        return self.start < other.end and other.start < self.end

    def check(self, text=None, annotation_id=None):
        """Raises IntegrityError unless the mention is a valid span (of `text`, when given)."""
        limit = len(text) if text is not None else None
        if self.start < 0 or self.start >= self.end or (limit is not None and self.end > limit):
            raise IntegrityError(
                'span {}-{} outside 0 <= start < end <= {}'.format(self.start, self.end, limit),
                annotation_id,
            )
        if len(self.surface) != self.end - self.start:
            raise IntegrityError(
                'surface {!r} has length {} but span {}-{} has length {}'.format(
                    self.surface, len(self.surface), self.start, self.end, self.end - self.start),
                annotation_id,
            )
        if text is not None and text[self.start:self.end] != self.surface:
            raise IntegrityError(
                'surface {!r} does not match text {!r} at {}-{}'.format(
                    self.surface, text[self.start:self.end], self.start, self.end),
                annotation_id,
            )


def sort_key(mention):
    return (mention.start, mention.end)


@dataclass(frozen=True)
class Corpus:
    documents: Tuple[Document, ...]
    gold: Mapping[str, Tuple[Mention, ...]] = field(default_factory=dict)
    has_gold: bool = False

    def __post_init__(self):
        seen = set()
        for doc in self.documents:
            if doc.id in seen:
                raise CorpusError('Duplicate document id {}'.format(doc.id))
            seen.add(doc.id)
        for doc_id, mentions in self.gold.items():
            if doc_id not in seen:
                raise CorpusError('Gold annotations for unknown document {}'.format(doc_id))
            for mention in mentions:
                if mention.doc_id != doc_id:
                    raise CorpusError('Mention {!r} filed under document {}'.format(mention, doc_id))
        object.__setattr__(self, 'documents', tuple(self.documents))
        object.__setattr__(
            self, 'gold', MappingProxyType({k: tuple(v) for k, v in self.gold.items()}))
        object.__setattr__(self, '_by_id', {doc.id: doc for doc in self.documents})

    def __len__(self):
        return len(self.documents)

    def __iter__(self):
        return iter(self.documents)

    def __repr__(self):
        return '<Corpus: {n} documents, gold={gold}>'.format(n=len(self.documents), gold=self.has_gold)

    @property
    def ids(self):
        return [doc.id for doc in self.documents]

    def document(self, doc_id):
        try:
            return self._by_id[doc_id]
        except KeyError:
            raise CorpusError('Unknown document {}'.format(doc_id))

    def __contains__(self, doc_id):
        return doc_id in self._by_id

    def gold_for(self, doc_id):
        return self.gold.get(doc_id, ())

    def subset(self, doc_ids):
        wanted = set(doc_ids)
        documents = [doc for doc in self.documents if doc.id in wanted]
        gold = {doc.id: self.gold[doc.id] for doc in documents if doc.id in self.gold}
        return Corpus(documents, gold, has_gold=self.has_gold)


@dataclass(frozen=True)
class CorpusStats:
    n_documents: int
    n_sentences: int
    n_mentions: int
    per_type: Mapping[TriggerType, int]


def parse_standoff(ann_content, doc, tag_map=DEFAULT_TAG_MAP, source=None):
    """Parses the trigger lines of a standoff file into Mentions over `doc.text`.

    Lines that are not triggers (attributes, relations, notes, entities with
    tags outside the tag map) are skipped.
    """
    if ann_content.startswith(BOM):
        ann_content = ann_content[1:]

    mentions = []
    seen_ids = set()
    for line_number, line in enumerate(ann_content.split('\n'), start=1):
        if line.endswith('\r'):
            line = line[:-1]
        if not line.strip():
            continue

        match = TRIGGER_LINE.match(line)
        if match is None:
            if line.startswith('T'):
                raise StandoffParseError('malformed text-bound annotation {!r}'.format(line),
                                         line_number, source)
            if OTHER_LINE.match(line) is None:
                raise StandoffParseError('unrecognised line {!r}'.format(line), line_number, source)
            log.debug('%s: skipping non-trigger line %d: %s', source or doc.id, line_number, line)
            continue

        ann_id = match.group('id')
        if ann_id in seen_ids:
            raise StandoffParseError('duplicate annotation id {}'.format(ann_id), line_number, source)
        seen_ids.add(ann_id)

        kind = tag_map.get(match.group('tag').upper())
        if kind is None:
            log.debug('%s: skipping %s with non-trigger tag %s', source or doc.id, ann_id, match.group('tag'))
            continue

        offsets = OFFSETS.match(match.group('offsets'))
        if offsets is None:
            # "0 5;8 12" style fragments.
            raise StandoffParseError(
                'unsupported offsets {!r} for {} (discontinuous spans are not supported)'.format(
                    match.group('offsets'), ann_id),
                line_number, source)

        mention = Mention(
            doc_id=doc.id,
            kind=kind,
            start=int(offsets.group('start')),
            end=int(offsets.group('end')),
            surface=match.group('surface'),
        )
        mention.check(doc.text, annotation_id=ann_id)
        mentions.append(mention)

    return mentions


def write_standoff(mentions, doc=None):
    """Serialises mentions of one document as `T<i>` lines numbered from 1 in input order."""
    mentions = list(mentions)
    lines = []
    previous = None
    for i, mention in enumerate(mentions, start=1):
        ann_id = 'T{}'.format(i)
        if doc is not None and mention.doc_id != doc.id:
            raise IntegrityError('mention belongs to {}, not {}'.format(mention.doc_id, doc.id), ann_id)
        if mentions[0].doc_id != mention.doc_id:
            raise IntegrityError('mentions span documents {} and {}'.format(
                mentions[0].doc_id, mention.doc_id), ann_id)
        if previous is not None and sort_key(mention) < sort_key(previous):
            raise IntegrityError('mentions are not sorted by (start, end)', ann_id)
        if any(c in mention.surface for c in '\t\n\r'):
            raise IntegrityError('surface {!r} cannot be written to a standoff line'.format(mention.surface), ann_id)
        mention.check(doc.text if doc is not None else None, annotation_id=ann_id)
        lines.append('{id}\t{kind} {start} {end}\t{surface}\n'.format(
            id=ann_id, kind=mention.kind.name, start=mention.start, end=mention.end, surface=mention.surface))
        previous = mention
    return ''.join(lines)


def read_text_file(path):
    # newline='' keeps CRLF so offsets match the bytes on disk; utf-8-sig drops a BOM.
    with open(path, 'r', encoding='utf-8-sig', newline='') as f:
        return f.read()


def write_text_file(path, content):
    with open(path, 'w', encoding='utf-8', newline='') as f:
        f.write(content)


def _load_one(txt_path, ann_path, tag_map):
    doc = Document(txt_path.stem, read_text_file(txt_path))
    mentions = None
    if ann_path is not None:
        mentions = parse_standoff(read_text_file(ann_path), doc, tag_map, source=ann_path.name)
    return doc, mentions


def load_corpus(directory, with_gold=True, tag_map=DEFAULT_TAG_MAP, workers=LOAD_WORKERS):
    """Loads `<id>.txt` files (and `<id>.ann` when `with_gold`) from `directory`."""
    directory = Path(directory)
    if not directory.is_dir():
        raise CorpusError('{} is not a directory'.format(directory))

    texts = {p.stem: p for p in directory.glob('*.txt')}
    anns = {p.stem: p for p in directory.glob('*.ann')}

    orphans = sorted(set(anns) - set(texts))
    if orphans:
        raise CorpusError('Annotation files without text in {}: {}'.format(directory, ', '.join(orphans)))

    ids = sorted(texts)
    if with_gold:
        missing = [doc_id for doc_id in ids if doc_id not in anns]
        if missing:
            raise CorpusError('Missing .ann files in {}: {}'.format(directory, ', '.join(missing)))

    jobs = [(texts[doc_id], anns[doc_id] if with_gold else None) for doc_id in ids]
    try:
        with ThreadPoolExecutor(max_workers=max(1, workers), thread_name_prefix='corpus-loader') as pool:
            loaded = list(pool.map(lambda job: _load_one(job[0], job[1], tag_map), jobs))
    except (OSError, UnicodeDecodeError) as e:
        raise CorpusError('Unable to read corpus file: {}'.format(e)) from e

    documents = [doc for doc, _ in loaded]
    gold = {doc.id: mentions for doc, mentions in loaded if mentions is not None}
    corpus = Corpus(documents, gold, has_gold=with_gold)
    log.info('Loaded %s from %s', corpus, directory)
    return corpus


def save_corpus(corpus, directory):
    """Writes `.txt` files, plus `.ann` files when the corpus carries gold."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for doc in corpus:
        write_text_file(directory / '{}.txt'.format(doc.id), doc.text)
        if corpus.has_gold:
            write_text_file(directory / '{}.ann'.format(doc.id), write_standoff(corpus.gold_for(doc.id), doc))
    log.info('Wrote %s to %s', corpus, directory)


def save_predictions(directory, documents, predictions):
    """Writes one `<id>.ann` per document; documents without predictions get an empty file."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for doc in documents:
        mentions = sorted(predictions.get(doc.id, ()), key=sort_key)
        write_text_file(directory / '{}.ann'.format(doc.id), write_standoff(mentions, doc))


def load_predictions(directory, corpus, tag_map=DEFAULT_TAG_MAP):
    """Reads `<id>.ann` prediction files against the texts of `corpus`."""
    directory = Path(directory)
    if not directory.is_dir():
        raise CorpusError('{} is not a directory'.format(directory))
    predictions = {}
    for path in sorted(directory.glob('*.ann')):
        if path.stem not in corpus:
            raise CorpusError('Prediction file {} has no matching document'.format(path.name))
        doc = corpus.document(path.stem)
        predictions[doc.id] = parse_standoff(read_text_file(path), doc, tag_map, source=path.name)
    return predictions


def split_corpus(corpus, n_holdout, seed):
    """Deterministically partitions `corpus` into (rest, holdout) by document."""
    if not 0 < n_holdout < len(corpus):
        raise SplitError('n_holdout must be in 1..{}, got {}'.format(len(corpus) - 1, n_holdout))

    ids = sorted(corpus.ids)
    holdout = set(random.Random(seed).sample(ids, n_holdout))
    rest = [doc_id for doc_id in ids if doc_id not in holdout]
    log.info('Split %d documents into %d / %d (seed=%s)', len(ids), len(rest), n_holdout, seed)
    return corpus.subset(rest), corpus.subset(holdout)


def corpus_stats(corpus):
    per_type = {kind: 0 for kind in TriggerType}
    for mentions in corpus.gold.values():
        for mention in mentions:
            per_type[mention.kind] += 1
    return CorpusStats(
        n_documents=len(corpus),
        n_sentences=sum(count_sentences(doc.text) for doc in corpus),
        n_mentions=sum(per_type.values()),
        per_type=MappingProxyType(per_type),
    )


def format_stats(stats, name='Corpus'):
    rows = [
        ('# Documents', stats.n_documents),
        ('# Sentences', stats.n_sentences),
        ('# Mentions', stats.n_mentions),
    ]
    rows += [('  {}'.format(kind.name.title()), stats.per_type[kind]) for kind in TriggerType]
    width = max(len(label) for label, _ in rows)
    lines = ['{:<{w}}  {:>10}'.format('Characteristic', name, w=width)]
    lines += ['{:<{w}}  {:>10,}'.format(label, value, w=width) for label, value in rows]
    return '\n'.join(lines)


def corpus_digest(corpus):
    """sha256 over the sorted (id, text) pairs."""
    digest = hashlib.sha256()
    for doc in sorted(corpus, key=lambda d: d.id):
        digest.update(doc.id.encode('utf-8'))
        digest.update(b'\0')
        digest.update(doc.text.encode('utf-8'))
        digest.update(b'\0')
    return digest.hexdigest()
