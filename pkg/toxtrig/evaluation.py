"""Scoring: strict span+type P/R/F1, gold-containment rates (GC/GCT) and character-level IoU."""
import logging
from collections import Counter, defaultdict
from dataclasses import dataclass
from pathlib import Path
from types import MappingProxyType
from typing import Mapping

from toxtrig.corpus import TriggerType, write_text_file
from toxtrig.exceptions import EvaluationError

log = logging.getLogger(__name__)

MICRO = 'MICRO'
ALL = 'ALL'


@dataclass(frozen=True)
class Counts:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    def __add__(self, other):
        return Counts(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn)


@dataclass(frozen=True)
class Scores:
    tp: int
    fp: int
    fn: int
    precision: float
    recall: float
    f1: float

    @classmethod
    def from_counts(cls, counts):
        tp, fp, fn = counts.tp, counts.fp, counts.fn
        if tp == fp == fn == 0:
            return cls(tp, fp, fn, 1.0, 1.0, 1.0)
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        return cls(tp, fp, fn, precision, recall, f1_score(precision, recall))


@dataclass(frozen=True)
class StrictCounts:
    per_type: Mapping[TriggerType, Counts]
    micro: Counts


@dataclass(frozen=True)
class EvalReport:
    per_type: Mapping[TriggerType, Scores]
    micro: Scores
    gc: float
    gct: float
    char_iou: float
    n_documents: int = 0


def f1_score(precision, recall):
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def _key(mention):
    return (mention.doc_id, mention.start, mention.end, mention.kind)


def _check_documents(mentions, doc_ids, side):
    if doc_ids is None:
        return
    unknown = sorted({m.doc_id for m in mentions} - set(doc_ids))
    if unknown:
        raise EvaluationError('{} mentions reference unknown documents: {}'.format(side, ', '.join(unknown)))


def strict_counts(gold, pred, doc_ids=None):
    """Exact (document, start, end, type) matching, one prediction per gold mention."""
    gold = list(gold)
    pred = list(pred)
    _check_documents(gold, doc_ids, 'Gold')
    _check_documents(pred, doc_ids, 'Predicted')

    gold_keys = Counter(_key(m) for m in gold)
    pred_keys = Counter(_key(m) for m in pred)

    tallies = {kind: [0, 0, 0] for kind in TriggerType}
    for key in gold_keys.keys() | pred_keys.keys():
        kind = key[3]
        matched = min(gold_keys[key], pred_keys[key])
        tallies[kind][0] += matched
        tallies[kind][1] += pred_keys[key] - matched
        tallies[kind][2] += gold_keys[key] - matched

    per_type = {kind: Counts(*tallies[kind]) for kind in TriggerType}
    micro = sum(per_type.values(), Counts())
    return StrictCounts(MappingProxyType(per_type), micro)


def _by_document(mentions):
    grouped = defaultdict(list)
    for mention in mentions:
        grouped[mention.doc_id].append(mention)
    return grouped


def gc_gct(gold, pred):
    """Share of gold mentions inside some prediction (GC), and inside one of the same type (GCT)."""
    gold = list(gold)
    if not gold:
        return 1.0, 1.0

    predicted = _by_document(pred)
    contained = contained_typed = 0
    for g in gold:
        covering = [p for p in predicted.get(g.doc_id, ()) if p.start <= g.start and g.end <= p.end]
        if covering:
            contained += 1
            if any(p.kind == g.kind for p in covering):
                contained_typed += 1
    return contained / len(gold), contained_typed / len(gold)


def _merge(spans):
    merged = []
    for start, end in sorted(spans):
        if merged and start <= merged[-1][1]:
            if end > merged[-1][1]:
                merged[-1][1] = end
        else:
            merged.append([start, end])
    return merged


def _covered(intervals):
    return sum(end - start for start, end in intervals)


def _intersection(a, b):
    total = i = j = 0
    while i < len(a) and j < len(b):
        low = max(a[i][0], b[j][0])
        high = min(a[i][1], b[j][1])
        if low < high:
            total += high - low
        if a[i][1] < b[j][1]:
            i += 1
        else:
            j += 1
    return total


def char_iou(gold, pred):
    """Corpus-level character IoU: summed intersections over summed unions."""
    gold_docs = _by_document(gold)
    pred_docs = _by_document(pred)
    intersection = union = 0
    for doc_id in gold_docs.keys() | pred_docs.keys():
        g = _merge((m.start, m.end) for m in gold_docs.get(doc_id, ()))
        p = _merge((m.start, m.end) for m in pred_docs.get(doc_id, ()))
        shared = _intersection(g, p)
        intersection += shared
        union += _covered(g) + _covered(p) - shared
    if union == 0:
        return 1.0
    return intersection / union


def evaluate(gold_corpus, predictions):
    """Scores `predictions` (doc_id -> mentions) against the gold of `gold_corpus`."""
    unknown = sorted(doc_id for doc_id in predictions if doc_id not in gold_corpus)
    if unknown:
        raise EvaluationError('Predictions for documents missing from the gold corpus: {}'.format(', '.join(unknown)))

    gold = [m for doc in gold_corpus for m in gold_corpus.gold_for(doc.id)]
    pred = [m for doc_id in sorted(predictions) for m in predictions[doc_id]]
    for doc_id, mentions in predictions.items():
        for mention in mentions:
            if mention.doc_id != doc_id:
                raise EvaluationError('Prediction {!r} filed under document {}'.format(mention, doc_id))

    counts = strict_counts(gold, pred, doc_ids=gold_corpus.ids)
    gc, gct = gc_gct(gold, pred)
    report = EvalReport(
        per_type=MappingProxyType({kind: Scores.from_counts(counts.per_type[kind]) for kind in TriggerType}),
        micro=Scores.from_counts(counts.micro),
        gc=gc,
        gct=gct,
        char_iou=char_iou(gold, pred),
        n_documents=len(gold_corpus),
    )
    log.info('Micro P=%.4f R=%.4f F1=%.4f GC=%.4f GCT=%.4f IoU=%.4f',
             report.micro.precision, report.micro.recall, report.micro.f1, gc, gct, report.char_iou)
    return report


def _rows(report):
    for kind in TriggerType:
        yield kind.name, report.per_type[kind]
    yield MICRO, report.micro


def format_report(report):
    """Human-readable table in the Precision / Recall / F1 layout."""
    header = '{:<10} {:>9} {:>9} {:>9} {:>7} {:>7} {:>7}'.format(
        'Type', 'Precision', 'Recall', 'F1', 'TP', 'FP', 'FN')
    lines = [header, '-' * len(header)]
    for name, scores in _rows(report):
        lines.append('{:<10} {:>9.4f} {:>9.4f} {:>9.4f} {:>7} {:>7} {:>7}'.format(
            name.title() if name != MICRO else 'Micro',
            scores.precision, scores.recall, scores.f1, scores.tp, scores.fp, scores.fn))
    lines.append('-' * len(header))
    lines.append('{:<10} {:>9.4f}'.format('GC', report.gc))
    lines.append('{:<10} {:>9.4f}'.format('GCT', report.gct))
    lines.append('{:<10} {:>9.4f}'.format('IoU', report.char_iou))
    return '\n'.join(lines)


def report_lines(report):
    """`metric<TAB>type<TAB>value` lines; ratios with six decimals, counts as integers."""
    lines = []
    for name, scores in _rows(report):
        for metric in ('tp', 'fp', 'fn'):
            lines.append('{}\t{}\t{}'.format(metric, name, getattr(scores, metric)))
        for metric in ('precision', 'recall', 'f1'):
            lines.append('{}\t{}\t{:.6f}'.format(metric, name, getattr(scores, metric)))
    lines.append('gc\t{}\t{:.6f}'.format(ALL, report.gc))
    lines.append('gct\t{}\t{:.6f}'.format(ALL, report.gct))
    lines.append('char_iou\t{}\t{:.6f}'.format(ALL, report.char_iou))
    return lines


def write_report(report, path):
    write_text_file(Path(path), '\n'.join(report_lines(report)) + '\n')
    log.info('Wrote evaluation report to %s', path)
