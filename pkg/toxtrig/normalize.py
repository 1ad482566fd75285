"""Surface-form normalisation shared by dictionary matching and phrase alignment."""
from dataclasses import dataclass


@dataclass(frozen=True)
class NormalizationPolicy:
    case_fold: bool = True
    require_word_boundary: bool = True

    def normalize(self, text):
        return fold(text) if self.case_fold else text


DEFAULT_POLICY = NormalizationPolicy()


def fold(text):
    """Case-folds character by character, keeping characters whose fold changes length.

    The result always has the same length as `text`, so offsets found in the
    folded string are valid in the original.
    """
    folded = []
    for char in text:
        lower = char.casefold()
        folded.append(lower if len(lower) == 1 else char)
    return ''.join(folded)


def is_word_char(char):
    return char.isalpha()


def at_word_boundary(text, start, end):
    """True when neither edge of text[start:end] sits inside a run of letters."""
    if start > 0 and is_word_char(text[start - 1]) and is_word_char(text[start]):
        return False
    if end < len(text) and is_word_char(text[end - 1]) and is_word_char(text[end]):
        return False
    return True
