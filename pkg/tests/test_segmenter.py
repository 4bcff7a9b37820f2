import math
import random

import pytest

from udkit.errors import UdkitError
from udkit.segmenter import (
    BoundaryModel,
    SegmenterParams,
    SentenceSpan,
    abbreviation_score,
    load_model,
    save_model,
    segment_sentences,
    segment_to_treebank,
    tokenize_words,
    train_boundary_model,
)

DR_CORPUS = "\n".join(["I saw Dr. Cruz today. He waved."] * 200)
ENGR_CORPUS = "\n".join(["Engr. Reyes spoke."] * 200)


def llr_oracle(count_with, count_without, period_toks, total, typ):
    """Independent reimplementation of the abbreviation decision score."""
    count_a = count_with + count_without
    p_null = period_toks / total
    null = count_with * math.log(p_null) + (count_a - count_with) * math.log(1 - p_null)
    alt = count_with * math.log(0.99) + (count_a - count_with) * math.log(0.01)
    llr = -2.0 * (null - alt)
    periods = typ.count(".") + 1
    nonperiods = len(typ) - periods + 1
    return llr * math.exp(-nonperiods) * periods * (nonperiods ** -count_without)


def test_dr_becomes_abbreviation():
    model = train_boundary_model(DR_CORPUS)
    assert "dr" in model.abbreviations
    # the corpus has 1400 tokens, 600 period-final; "dr." occurs 200 times
    score = llr_oracle(200, 0, 600, 1400, "dr")
    assert score == pytest.approx(45.3237, abs=0.01)
    assert score >= SegmenterParams().abbrev
    assert abbreviation_score("dr", 200, 0, 600, 1400) == pytest.approx(score)


def test_engr_becomes_abbreviation():
    model = train_boundary_model(ENGR_CORPUS)
    assert "engr" in model.abbreviations
    score = llr_oracle(200, 0, 400, 600, "engr")
    assert score == pytest.approx(2.8969, abs=0.001)
    assert score >= SegmenterParams().abbrev


def test_no_periods_yields_empty_sets():
    model = train_boundary_model("walang tuldok dito\n" * 50)
    assert model.abbreviations == frozenset()
    assert model.collocations == frozenset()
    assert model.sentence_starters == frozenset()


def test_training_is_deterministic():
    assert train_boundary_model(DR_CORPUS) == train_boundary_model(DR_CORPUS)


def test_two_sentences_with_empty_model():
    spans = segment_sentences("Hello world. Goodbye.", BoundaryModel())
    assert len(spans) == 2
    assert spans[0] == SentenceSpan(0, 12)
    assert spans[1] == SentenceSpan(13, 21)


def test_quotation_failure_mode():
    # exclamation marks inside quotations still break: the closing quote and
    # the carrier sentence end up in the next span
    text = '"Maraming salamat po!" sabi ko.'
    spans = segment_sentences(text, BoundaryModel())
    assert len(spans) == 2
    assert text[spans[0].start:spans[0].end] == '"Maraming salamat po!'
    assert text[spans[1].start:spans[1].end] == '" sabi ko.'


def test_learned_abbreviation_suppresses_boundary():
    model = train_boundary_model(ENGR_CORPUS)
    text = "Si Engr. Reyes ay dumating."
    spans = segment_sentences(text, model)
    assert len(spans) == 1
    assert text[spans[0].start:spans[0].end] == text


def test_ellipsis_boundary_depends_on_case():
    model = BoundaryModel()
    one = segment_sentences("Naghintay kami... tapos umalis siya.", model)
    assert len(one) == 1
    two = segment_sentences("Naghintay kami... Tapos umalis siya.", model)
    assert len(two) == 2
    unicode_two = segment_sentences("Naghintay kami… Tapos umalis siya.", model)
    assert len(unicode_two) == 2


def test_span_ends_are_terminators_or_eot():
    model = train_boundary_model(DR_CORPUS)
    for text in [
        "Hello world. Goodbye.",
        "Walang bantas dito",
        "Isa. Dalawa! Tatlo? Apat",
    ]:
        spans = segment_sentences(text, model)
        for span in spans[:-1]:
            assert text[span.end - 1] in ".!?…"
        assert spans[-1].end <= len(text)


def test_spans_cover_non_whitespace_and_are_ordered():
    rng = random.Random(5)
    words = ["aso", "pusa.", "Ito", "ay!", "malaki", "Si", "G.", "santos?"]
    for _ in range(50):
        text = " ".join(rng.choice(words) for _ in range(rng.randint(1, 30)))
        spans = segment_sentences(text, BoundaryModel())
        for a, b in zip(spans, spans[1:]):
            assert a.end <= b.start
        covered = "".join(text[s.start:s.end] for s in spans)
        assert covered.replace(" ", "") == text.replace(" ", "")


def test_tokenize_fig1_sentence():
    words = tokenize_words("All proceeds were donated to local frontliners.")
    assert [w for w, _ in words] == [
        "All", "proceeds", "were", "donated", "to", "local", "frontliners", ".",
    ]


def test_tokenize_keeps_internal_punctuation():
    words = tokenize_words("Halos 4,000 na Antipolenyo")
    assert [w for w, _ in words] == ["Halos", "4,000", "na", "Antipolenyo"]


def test_tokenize_empty():
    assert tokenize_words("") == []


def test_tokenize_spans_map_back():
    text = '"Kumain si Juan," sabi niya.'
    for form, (start, end) in tokenize_words(text):
        assert text[start:end] == form


def test_tokenize_abbreviation_period_stays_attached():
    model = train_boundary_model(ENGR_CORPUS)
    words = tokenize_words("Si Engr. Reyes ay dumating.", model)
    assert [w for w, _ in words] == ["Si", "Engr.", "Reyes", "ay", "dumating", "."]


def test_tokenize_hyphens_kept():
    words = tokenize_words("araw-araw na pag-asa")
    assert [w for w, _ in words] == ["araw-araw", "na", "pag-asa"]


def test_segment_to_treebank():
    text = "Kumain si Juan. Umalis siya."
    tb = segment_to_treebank(text, BoundaryModel())
    assert len(tb) == 2
    first = tb.sentences[0]
    assert [t.form for t in first.tokens] == ["Kumain", "si", "Juan", "."]
    assert all(t.upos is None and t.head is None for t in first.tokens)
    assert first.char_offsets is not None
    for tok, (start, end) in zip(first.tokens, first.char_offsets):
        assert text[start:end] == tok.form
    assert first.comments[1] == "# text = Kumain si Juan."


def test_segment_to_treebank_concatenation_invariant():
    text = "Si Dr. Cruz ay narito. Umupo siya, at ngumiti!  Tapos na."
    model = train_boundary_model(DR_CORPUS)
    tb = segment_to_treebank(text, model)
    forms = "".join(t.form for s in tb.sentences for t in s.tokens)
    assert forms == "".join(text.split())


def test_empty_text_segments_to_empty_treebank():
    assert len(segment_to_treebank("", BoundaryModel())) == 0
    assert len(segment_to_treebank("   \n  ", BoundaryModel())) == 0


def test_train_requires_text():
    with pytest.raises(UdkitError):
        train_boundary_model("")


def test_model_save_load_roundtrip(tmp_path):
    model = train_boundary_model(DR_CORPUS)
    path = tmp_path / "model.punkt"
    save_model(model, path)
    loaded = load_model(path)
    assert loaded == model


def test_model_load_rejects_garbage(tmp_path):
    path = tmp_path / "bad.punkt"
    path.write_text("not a model\n")
    with pytest.raises(UdkitError, match="not a udkit boundary model"):
        load_model(path)
