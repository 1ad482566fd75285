"""Gazetteer baseline: a dictionary of unambiguously labelled surface forms from the train split."""
import hashlib
import logging
from collections import Counter, defaultdict
from pathlib import Path
from types import MappingProxyType

from toxtrig.alignment import find_occurrences
from toxtrig.corpus import Mention, TriggerType, read_text_file, sort_key, write_text_file
from toxtrig.exceptions import CorpusError
from toxtrig.normalize import DEFAULT_POLICY

log = logging.getLogger(__name__)

DEFAULT_MIN_LABEL_RATIO = 1.0


class Dictionary(object):
    """Normalised surface form -> TriggerType.

    The normalisation policy travels with the entries so matching always
    folds text the same way the entries were folded at build time.
    """

    def __init__(self, entries, policy=DEFAULT_POLICY, rejected_conflict=0, rejected_ratio=0):
        cleaned = {}
        for surface, kind in entries.items():
            if not surface.strip():
                raise ValueError('Dictionary entries must not be blank.')
            cleaned[policy.normalize(surface)] = kind
        self.entries = MappingProxyType(cleaned)
        self.policy = policy
        self.rejected_conflict = rejected_conflict
        self.rejected_ratio = rejected_ratio

    def __repr__(self):
        return '<Dictionary: {n} entries, {policy}>'.format(n=len(self.entries), policy=self.policy)

    def __len__(self):
        return len(self.entries)

    def __contains__(self, surface):
        return self.policy.normalize(surface) in self.entries

    def __getitem__(self, surface):
        return self.entries[self.policy.normalize(surface)]

    def __eq__(self, other):
        if not isinstance(other, Dictionary):
            return NotImplemented
        return dict(self.entries) == dict(other.entries) and self.policy == other.policy

    def to_text(self):
        return ''.join('{}\t{}\n'.format(surface, self.entries[surface].name) for surface in sorted(self.entries))

    def digest(self):
        """sha256 over the saved form of the entries."""
        return hashlib.sha256(self.to_text().encode('utf-8')).hexdigest()


def build_dictionary(train, policy=DEFAULT_POLICY, min_label_ratio=DEFAULT_MIN_LABEL_RATIO):
    """Collects gold surfaces whose labels agree on one type and that are labelled often enough.

    A surface is kept when every labelled occurrence carries the same type and
    labelled / (labelled + unlabelled) occurrences in the train texts is at
    least `min_label_ratio`.
    """
    if not 0.0 <= min_label_ratio <= 1.0:
        raise ValueError('min_label_ratio must be within [0, 1], got {}'.format(min_label_ratio))

    labels = defaultdict(Counter)
    labelled_positions = defaultdict(set)
    for doc_id, mentions in train.gold.items():
        for mention in mentions:
            if not mention.surface.strip():
                continue
            surface = policy.normalize(mention.surface)
            labels[surface][mention.kind] += 1
            labelled_positions[surface].add((doc_id, mention.start, mention.end))

    normalized = [(doc, policy.normalize(doc.text)) for doc in train]
    entries = {}
    rejected_conflict = rejected_ratio = 0
    for surface in sorted(labels):
        kinds = labels[surface]
        if len(kinds) > 1:
            log.debug('Rejecting %r: labelled as %s', surface, dict((k.name, v) for k, v in kinds.items()))
            rejected_conflict += 1
            continue

        positions = set(labelled_positions[surface])
        for doc, folded in normalized:
            for start, end in find_occurrences(doc.text, surface, policy, folded):
                positions.add((doc.id, start, end))
        ratio = len(labelled_positions[surface]) / len(positions)
        if ratio < min_label_ratio:
            log.debug('Rejecting %r: labelled in %d of %d occurrences',
                      surface, len(labelled_positions[surface]), len(positions))
            rejected_ratio += 1
            continue

        kind, = kinds
        entries[surface] = kind

    dictionary = Dictionary(entries, policy, rejected_conflict, rejected_ratio)
    log.info('Built %r (rejected %d for type conflicts, %d below label ratio %s)',
             dictionary, rejected_conflict, rejected_ratio, min_label_ratio)
    return dictionary


def _longest_first(span):
    start, end, kind = span
    return (start - end, start, kind.name)


def dict_extract(doc, dictionary):
    """Finds every dictionary entry in `doc.text`; overlapping matches keep the longest."""
    candidates = []
    folded = dictionary.policy.normalize(doc.text)
    for surface, kind in dictionary.entries.items():
        for start, end in find_occurrences(doc.text, surface, dictionary.policy, folded):
            candidates.append((start, end, kind))

    kept = []
    for start, end, kind in sorted(candidates, key=_longest_first):
        if any(start < k_end and k_start < end for k_start, k_end, _ in kept):
            continue
        kept.append((start, end, kind))

    mentions = [Mention(doc.id, kind, start, end, doc.text[start:end]) for start, end, kind in kept]
    return sorted(mentions, key=sort_key)


def save_dictionary(dictionary, path):
    write_text_file(Path(path), dictionary.to_text())
    log.info('Wrote %r to %s', dictionary, path)


def load_dictionary(path, policy=DEFAULT_POLICY):
    entries = {}
    for line_number, line in enumerate(read_text_file(Path(path)).split('\n'), start=1):
        if not line.strip():
            continue
        try:
            surface, type_name = line.rstrip('\r').split('\t')
            kind = TriggerType[type_name]
        except (ValueError, KeyError):
            raise CorpusError('{}: line {}: expected "surface<TAB>TYPE", got {!r}'.format(path, line_number, line))
        surface = policy.normalize(surface)
        if entries.get(surface, kind) != kind:
            raise CorpusError('{}: line {}: {!r} listed with two types'.format(path, line_number, surface))
        entries[surface] = kind
    dictionary = Dictionary(entries, policy)
    log.info('Loaded %r from %s', dictionary, path)
    return dictionary
