"""Section splitting for LLM calls and a rule-based sentence counter."""
import re
from dataclasses import dataclass

# Two or more consecutive newlines (CRLF or LF).
SECTION_BREAK = re.compile(r'\r?\n(?:\r?\n)+')

TERMINATORS = '.?!…'
SENTENCE_OPENERS = '¿¡'


@dataclass(frozen=True)
class Section:
    start: int
    end: int
    text: str
    index: int = 0

    def __repr__(self):
        return '<Section {index} @ {start}-{end}>'.format(index=self.index, start=self.start, end=self.end)


def segment_sections(text):
    """Splits `text` on blank lines; offsets refer to `text`.

    Separator runs belong to no section, whitespace-only fragments are dropped
    and the rest are trimmed of surrounding whitespace, so
    `section.text == text[section.start:section.end]` always holds.
    """
    sections = []
    position = 0
    for match in SECTION_BREAK.finditer(text):
        _add_fragment(sections, text, position, match.start())
        position = match.end()
    _add_fragment(sections, text, position, len(text))
    return sections


def _add_fragment(sections, text, start, end):
    fragment = text[start:end]
    stripped = fragment.strip()
    if not stripped:
        return
    start += len(fragment) - len(fragment.lstrip())
    end = start + len(stripped)
    sections.append(Section(start, end, text[start:end], index=len(sections)))


def count_sentences(text):
    """Counts sentences with a simple terminator rule.

    A sentence ends at one of `. ? ! …` followed by whitespace and then an
    uppercase letter, `¿`, `¡` or the end of the text. A newline also closes
    a sentence in progress. A non-empty trailing fragment counts as one.
    """
    count = 0
    in_sentence = False
    length = len(text)
    i = 0
    while i < length:
        char = text[i]
        if char == '\n':
            if in_sentence:
                count += 1
                in_sentence = False
            i += 1
            continue
        if char.isspace():
            i += 1
            continue

        in_sentence = True
        if char in TERMINATORS:
            j = i + 1
            while j < length and text[j] in TERMINATORS:
                j += 1
            k = j
            while k < length and text[k].isspace() and text[k] != '\n':
                k += 1
            at_end = k >= length or text[k] == '\n'
            if at_end or (k > j and (text[k].isupper() or text[k] in SENTENCE_OPENERS)):
                count += 1
                in_sentence = False
            i = j
            continue
        i += 1

    if in_sentence:
        count += 1
    return count
