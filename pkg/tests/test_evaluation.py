import random
from fractions import Fraction

import pytest

from toxtrig.corpus import Corpus, Document, TriggerType, load_corpus, load_predictions
from toxtrig.evaluation import (
    Counts, Scores, char_iou, evaluate, format_report, gc_gct, report_lines, strict_counts, write_report,
)
from toxtrig.exceptions import EvaluationError

from tests.helpers import ALCOHOL, CANNABIS, CORPUS_DIR, DRUG, GOLDEN_REPORT, PRED_DIR, TOBACCO, make_doc, mention_of, span

# Predicted phrase, correct phrase, type: predictions that swallow context around the gold trigger.
BOUNDARY_ERRORS = [
    ('tabaquismo activo', 'tabaquismo', TOBACCO),
    ('fumaba mucho', 'fumaba', TOBACCO),
    ('cocaína esnifada', 'cocaína', DRUG),
    ('consumo abusivo de alcohol', 'alcohol', ALCOHOL),
    ('fuma hachís', 'hachís', CANNABIS),
    ('ex fumador', 'fumador', TOBACCO),
    ('No fumador', 'fumador', TOBACCO),
]


def test_strict_counts_example():
    gold = [span(DRUG, 0, 10), span(ALCOHOL, 20, 27)]
    pred = [span(DRUG, 0, 10), span(TOBACCO, 40, 47)]
    counts = strict_counts(gold, pred)
    assert counts.micro == Counts(1, 1, 1)
    scores = Scores.from_counts(counts.micro)
    assert (scores.precision, scores.recall, scores.f1) == (0.5, 0.5, 0.5)
    assert counts.per_type[DRUG] == Counts(1, 0, 0)
    assert counts.per_type[ALCOHOL] == Counts(0, 0, 1)
    assert counts.per_type[TOBACCO] == Counts(0, 1, 0)


def test_strict_identity():
    gold = [span(DRUG, 0, 10), span(ALCOHOL, 20, 27)]
    counts = strict_counts(gold, list(gold))
    for kind in TriggerType:
        scores = Scores.from_counts(counts.per_type[kind])
        assert (scores.precision, scores.recall, scores.f1) == (1.0, 1.0, 1.0)


def test_empty_prediction_conventions():
    scores = Scores.from_counts(strict_counts([span(DRUG, 0, 3)], []).micro)
    assert (scores.precision, scores.recall, scores.f1) == (0.0, 0.0, 0.0)
    scores = Scores.from_counts(strict_counts([], [span(DRUG, 0, 3)]).micro)
    assert (scores.precision, scores.recall, scores.f1) == (0.0, 0.0, 0.0)
    scores = Scores.from_counts(Counts())
    assert (scores.precision, scores.recall, scores.f1) == (1.0, 1.0, 1.0)


def test_strict_matching_is_one_to_one():
    counts = strict_counts([span(DRUG, 0, 3)], [span(DRUG, 0, 3), span(DRUG, 0, 3)])
    assert counts.micro == Counts(1, 1, 0)


def test_strict_rejects_unknown_documents():
    with pytest.raises(EvaluationError):
        strict_counts([span(DRUG, 0, 3, doc_id='a')], [span(DRUG, 0, 3, doc_id='b')], doc_ids=['a'])


def test_containment_example():
    gold = [span(TOBACCO, 13, 23)]
    assert gc_gct(gold, [span(TOBACCO, 13, 30)]) == (1.0, 1.0)
    assert gc_gct(gold, [span(DRUG, 13, 30)]) == (1.0, 0.0)
    assert gc_gct(gold, gold) == (1.0, 1.0)
    assert gc_gct([], [span(DRUG, 0, 3)]) == (1.0, 1.0)
    assert gc_gct(gold, [span(TOBACCO, 14, 30)]) == (0.0, 0.0)


def test_containment_is_per_document():
    assert gc_gct([span(DRUG, 0, 5, doc_id='a')], [span(DRUG, 0, 10, doc_id='b')]) == (0.0, 0.0)


def test_char_iou_examples():
    assert char_iou([span(DRUG, 0, 10)], [span(DRUG, 0, 16)]) == 0.625
    assert char_iou([span(DRUG, 0, 10)], [span(DRUG, 0, 10)]) == 1.0
    assert char_iou([span(DRUG, 0, 5)], [span(DRUG, 10, 15)]) == 0.0
    assert char_iou([], []) == 1.0


def test_char_iou_ignores_types_and_unions_overlaps():
    gold = [span(DRUG, 0, 6), span(ALCOHOL, 4, 10)]
    pred = [span(TOBACCO, 2, 10)]
    assert char_iou(gold, pred) == pytest.approx(0.8)


@pytest.mark.parametrize('predicted, correct, kind', BOUNDARY_ERRORS)
def test_boundary_errors_are_contained(predicted, correct, kind):
    doc = make_doc('Antecedentes: {}. Resto sin interés.'.format(predicted))
    pred = [mention_of(doc, kind, predicted)]
    start = doc.text.index(predicted) + predicted.index(correct)
    gold = [span(kind, start, start + len(correct))]
    assert strict_counts(gold, pred).micro.tp == 0
    assert gc_gct(gold, pred) == (1.0, 1.0)
    assert 0.0 < char_iou(gold, pred) < 1.0


def _oracle(gold, pred):
    """Quadratic matching and explicit character sets."""
    unmatched = list(gold)
    per_type = {kind: [0, 0, 0] for kind in TriggerType}
    for p in pred:
        partner = next((g for g in unmatched
                        if (g.doc_id, g.start, g.end, g.kind) == (p.doc_id, p.start, p.end, p.kind)), None)
        if partner is None:
            per_type[p.kind][1] += 1
        else:
            unmatched.remove(partner)
            per_type[p.kind][0] += 1
    for g in unmatched:
        per_type[g.kind][2] += 1

    contained = typed = 0
    for g in gold:
        covering = [p for p in pred if p.doc_id == g.doc_id and p.start <= g.start and g.end <= p.end]
        contained += bool(covering)
        typed += any(p.kind == g.kind for p in covering)

    intersection = union = 0
    for doc_id in {m.doc_id for m in gold + pred}:
        g_chars = {i for m in gold if m.doc_id == doc_id for i in range(m.start, m.end)}
        p_chars = {i for m in pred if m.doc_id == doc_id for i in range(m.start, m.end)}
        intersection += len(g_chars & p_chars)
        union += len(g_chars | p_chars)

    gc = Fraction(contained, len(gold)) if gold else Fraction(1)
    gct = Fraction(typed, len(gold)) if gold else Fraction(1)
    iou = Fraction(intersection, union) if union else Fraction(1)
    return per_type, float(gc), float(gct), float(iou)


def _random_mentions(rng, doc_ids):
    mentions = []
    for _ in range(rng.randint(0, 6)):
        start = rng.randrange(30)
        mentions.append(span(rng.choice(list(TriggerType)), start, start + rng.randint(1, 8), rng.choice(doc_ids)))
    return mentions


def test_agrees_with_brute_force_oracle():
    rng = random.Random(11)
    doc_ids = ['a', 'b', 'c']
    for _ in range(1200):
        gold = _random_mentions(rng, doc_ids)
        pred = _random_mentions(rng, doc_ids)
        if rng.random() < 0.3:
            pred += rng.sample(gold, rng.randint(0, len(gold)))

        per_type, gc, gct, iou = _oracle(gold, pred)
        counts = strict_counts(gold, pred, doc_ids)
        for kind in TriggerType:
            assert counts.per_type[kind] == Counts(*per_type[kind])
        assert gc_gct(gold, pred) == (gc, gct)
        assert char_iou(gold, pred) == pytest.approx(iou, abs=1e-12)

        micro = Scores.from_counts(counts.micro)
        assert gct <= gc
        assert micro.recall <= gct + 1e-12
        if micro.precision + micro.recall > 0:
            assert micro.f1 == pytest.approx(
                2 * micro.precision * micro.recall / (micro.precision + micro.recall), abs=1e-12)

        shuffled_gold, shuffled_pred = list(gold), list(pred)
        rng.shuffle(shuffled_gold)
        rng.shuffle(shuffled_pred)
        assert strict_counts(shuffled_gold, shuffled_pred) == counts
        assert gc_gct(shuffled_gold, shuffled_pred) == (gc, gct)


def test_evaluate_identity():
    corpus = load_corpus(CORPUS_DIR, with_gold=True)
    report = evaluate(corpus, {doc_id: list(corpus.gold_for(doc_id)) for doc_id in corpus.ids})
    assert report.micro.f1 == 1.0
    assert (report.gc, report.gct, report.char_iou) == (1.0, 1.0, 1.0)
    assert report.n_documents == 10


def test_evaluate_rejects_unknown_documents():
    corpus = Corpus([Document('a', 'texto')], {'a': []}, has_gold=True)
    with pytest.raises(EvaluationError):
        evaluate(corpus, {'zzz': []})


def test_evaluate_matches_golden_report(tmp_path):
    corpus = load_corpus(CORPUS_DIR, with_gold=True)
    report = evaluate(corpus, load_predictions(PRED_DIR, corpus))
    assert report.micro.tp == 14 and report.micro.fp == 9 and report.micro.fn == 7
    assert report.char_iou == pytest.approx(147 / 213)

    out = tmp_path / 'report.tsv'
    write_report(report, out)
    assert out.read_text(encoding='utf-8') == GOLDEN_REPORT.read_text(encoding='utf-8')
    assert report_lines(report)[-1] == 'char_iou\tALL\t0.690141'


def test_format_report_layout():
    corpus = load_corpus(CORPUS_DIR, with_gold=True)
    table = format_report(evaluate(corpus, load_predictions(PRED_DIR, corpus)))
    header = table.splitlines()[0].split()
    assert header[:4] == ['Type', 'Precision', 'Recall', 'F1']
    for label in ('Tobacco', 'Alcohol', 'Cannabis', 'Drug', 'Micro', 'GC', 'GCT', 'IoU'):
        assert any(line.startswith(label) for line in table.splitlines())
