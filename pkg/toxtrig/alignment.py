"""Maps extracted phrases back to character spans and resolves overlapping spans."""
import enum
import logging
from dataclasses import dataclass, field
from typing import List, Tuple

from toxtrig.corpus import Mention, TriggerType, sort_key
from toxtrig.normalize import DEFAULT_POLICY, at_word_boundary

log = logging.getLogger(__name__)

LINE_BREAKS = '\n\r\t'


class Source(enum.Enum):
    DICT = 'DICT'
    LLM = 'LLM'


@dataclass(frozen=True)
class CandidateSpan:
    doc_id: str
    start: int
    end: int
    kind: TriggerType
    surface: str
    source: Source = Source.LLM

    @property
    def length(self):
        return self.end - self.start

    @property
    def key(self):
        return (self.start, self.end, self.kind)

    def overlaps(self, other):
        return self.start < other.end and other.start < self.end

    def to_mention(self):
        return Mention(self.doc_id, self.kind, self.start, self.end, self.surface)

    @classmethod
    def from_mention(cls, mention, source):
        return cls(mention.doc_id, mention.start, mention.end, mention.kind, mention.surface, source)


@dataclass
class AlignmentDiagnostics:
    """What happened to one document's phrases on their way to mentions."""
    doc_id: str
    hallucinated: List[Tuple[str, str, int]] = field(default_factory=list)
    line_breaks: List[Tuple[str, str, int]] = field(default_factory=list)
    duplicates: int = 0
    overlaps_resolved: int = 0

    def to_dict(self):
        return {
            'hallucinated_phrases': [
                {'type': kind, 'phrase': phrase, 'section': index} for kind, phrase, index in self.hallucinated
            ],
            'line_break_phrases': [
                {'type': kind, 'phrase': phrase, 'section': index} for kind, phrase, index in self.line_breaks
            ],
            'duplicates': self.duplicates,
            'overlaps_resolved': self.overlaps_resolved,
        }


def find_occurrences(text, phrase, policy=DEFAULT_POLICY, normalized=None):
    """All non-overlapping occurrences of `phrase` in `text`, left to right.

    `normalized` is `policy.normalize(text)` when the caller already has it.
    """
    if not phrase:
        return []

    haystack = policy.normalize(text) if normalized is None else normalized
    needle = policy.normalize(phrase)

    found = []
    position = 0
    while True:
        start = haystack.find(needle, position)
        if start < 0:
            break
        end = start + len(needle)
        if policy.require_word_boundary and not at_word_boundary(text, start, end):
            position = start + 1
            continue
        found.append((start, end))
        position = end
    return found


def align_phrases(doc, per_section, policy=DEFAULT_POLICY, diagnostics=None):
    """Searches each phrase inside its own section and returns document-level spans.

    Phrases that cannot be found are recorded on `diagnostics` as hallucinated.
    Phrases holding a line break or tab cannot be stored on a standoff line;
    they are dropped and recorded separately.
    """
    spans = []
    seen = set()
    for section, phrases in per_section:
        for kind, phrase_list in phrases.by_type():
            for phrase in phrase_list:
                if any(c in phrase for c in LINE_BREAKS):
                    log.debug('%s: %s phrase %r crosses a line in section %d', doc.id, kind.name, phrase, section.index)
                    if diagnostics is not None:
                        diagnostics.line_breaks.append((kind.name, phrase, section.index))
                    continue
                occurrences = find_occurrences(section.text, phrase, policy)
                if not occurrences:
                    log.debug('%s: %s phrase %r not found in section %d', doc.id, kind.name, phrase, section.index)
                    if diagnostics is not None:
                        diagnostics.hallucinated.append((kind.name, phrase, section.index))
                    continue
                for start, end in occurrences:
                    start += section.start
                    end += section.start
                    if (start, end, kind) in seen:
                        if diagnostics is not None:
                            diagnostics.duplicates += 1
                        continue
                    seen.add((start, end, kind))
                    spans.append(CandidateSpan(doc.id, start, end, kind, doc.text[start:end], Source.LLM))
    return spans


def _priority(span):
    return (span.length, span.start, span.kind.name)


def resolve_overlaps(spans, diagnostics=None):
    """Keeps the shortest spans first and drops anything overlapping a kept span.

    Overlap is tested on character ranges regardless of type. Ties are broken
    by start offset, then type name.
    """
    kept = []
    for span in sorted(spans, key=_priority):
        if any(span.overlaps(other) for other in kept):
            if diagnostics is not None and span.key not in {k.key for k in kept}:
                diagnostics.overlaps_resolved += 1
            continue
        kept.append(span)
    return sorted((span.to_mention() for span in kept), key=sort_key)
