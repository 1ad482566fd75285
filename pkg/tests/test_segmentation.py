import pytest

from toxtrig.corpus import load_corpus
from toxtrig.segmentation import Section, count_sentences, segment_sections

from tests.helpers import CORPUS_DIR


def test_blank_line_splits_sections():
    sections = segment_sections('Anamnesis.\n\nFumador activo.')
    assert [(s.start, s.end) for s in sections] == [(0, 10), (12, 27)]
    assert [s.text for s in sections] == ['Anamnesis.', 'Fumador activo.']
    assert [s.index for s in sections] == [0, 1]


def test_single_newline_does_not_split():
    assert segment_sections('A\nB') == [Section(0, 3, 'A\nB', 0)]


def test_empty_text():
    assert segment_sections('') == []
    assert segment_sections('  \n\n\n \n') == []


def test_long_breaks_do_not_create_empty_sections():
    text = 'Uno.\n\n\n\nDos.\r\n\r\nTres.'
    sections = segment_sections(text)
    assert [s.text for s in sections] == ['Uno.', 'Dos.', 'Tres.']


def test_sections_are_trimmed_and_consistent():
    text = '  Motivo de consulta  \n\n\tExploración normal.\n'
    for section in segment_sections(text):
        assert section.text == text[section.start:section.end]
        assert section.text == section.text.strip()


@pytest.mark.parametrize('text', [
    'a\n\nb\n\n\nc',
    '\n\nInicio tras salto.',
    'Final con salto.\n\n',
    'x\r\n\r\ny\n \nz',
])
def test_sections_are_ordered_and_disjoint(text):
    sections = segment_sections(text)
    for section in sections:
        assert section.text and section.text == text[section.start:section.end]
    for before, after in zip(sections, sections[1:]):
        assert before.end < after.start


def test_fixture_sections_cover_all_gold():
    corpus = load_corpus(CORPUS_DIR, with_gold=True)
    for doc in corpus:
        sections = segment_sections(doc.text)
        for mention in corpus.gold_for(doc.id):
            assert any(s.start <= mention.start and mention.end <= s.end for s in sections), mention


@pytest.mark.parametrize('text, expected', [
    ('Hola. ¿Cómo estás? Bien.', 3),
    ('', 0),
    ('sin puntuación final', 1),
    ('Fumador... Bebe vino.', 2),
    ('Dosis de 2.5 mg diaria.', 1),
    ('Antecedentes\nNiega alergias', 2),
    ('¡Alerta! Consumo diario.', 2),
])
def test_count_sentences(text, expected):
    assert count_sentences(text) == expected


def test_count_sentences_is_deterministic():
    text = 'Varón de 45 años. Fumador activo.\n\nNiega alcohol. ¿Drogas? No.'
    assert count_sentences(text) == count_sentences(text) == 5
