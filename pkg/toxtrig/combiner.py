"""Hybrid predictions from the dictionary baseline and the LLM pipeline."""
import enum
import logging

from toxtrig.alignment import CandidateSpan, Source, resolve_overlaps
from toxtrig.corpus import sort_key
from toxtrig.exceptions import IntegrityError

log = logging.getLogger(__name__)


class CombinePolicy(enum.Enum):
    UNION_SHORTER = 'union_shorter'
    DICT_PRIORITY = 'dict_priority'
    LLM_PRIORITY = 'llm_priority'


DEFAULT_POLICY = CombinePolicy.UNION_SHORTER


def _check_same_document(*mention_lists):
    doc_ids = {m.doc_id for mentions in mention_lists for m in mentions}
    if len(doc_ids) > 1:
        raise IntegrityError('Cannot combine mentions from different documents: {}'.format(', '.join(sorted(doc_ids))))


def _with_priority(first, second):
    kept = list(first)
    for mention in second:
        if any(mention.overlaps(other) for other in kept):
            continue
        kept.append(mention)
    return sorted(kept, key=sort_key)


def combine(dict_mentions, llm_mentions, policy=DEFAULT_POLICY):
    """Merges two non-overlapping prediction lists of one document."""
    dict_mentions = list(dict_mentions)
    llm_mentions = list(llm_mentions)
    _check_same_document(dict_mentions, llm_mentions)

    if not dict_mentions:
        return sorted(llm_mentions, key=sort_key)
    if not llm_mentions:
        return sorted(dict_mentions, key=sort_key)

    if policy is CombinePolicy.UNION_SHORTER:
        pooled = {}
        for source, mentions in ((Source.DICT, dict_mentions), (Source.LLM, llm_mentions)):
            for mention in mentions:
                pooled.setdefault((mention.start, mention.end, mention.kind), CandidateSpan.from_mention(mention, source))
        return resolve_overlaps(pooled.values())
    if policy is CombinePolicy.DICT_PRIORITY:
        return _with_priority(dict_mentions, llm_mentions)
    if policy is CombinePolicy.LLM_PRIORITY:
        return _with_priority(llm_mentions, dict_mentions)
    raise ValueError('Unknown combine policy {}'.format(policy))


def combine_predictions(a, b, policy=DEFAULT_POLICY):
    """Applies `combine` per document over two doc_id -> mentions maps."""
    combined = {}
    for doc_id in sorted(set(a) | set(b)):
        combined[doc_id] = combine(a.get(doc_id, ()), b.get(doc_id, ()), policy)
    log.info('Combined %d documents with %s', len(combined), policy.value)
    return combined
