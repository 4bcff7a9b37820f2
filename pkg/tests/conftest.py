import random
from pathlib import Path

import pytest

from udkit.treebank import (
    AnnotatedSentence,
    Token,
    Treebank,
    parse_conllu,
)

FIXTURES = Path(__file__).parent / "fixtures"


def fixture_text(name: str) -> str:
    return (FIXTURES / name).read_text(encoding="utf-8")


def fixture_treebank(name: str) -> Treebank:
    return parse_conllu(fixture_text(name), source_name=name)


@pytest.fixture
def fig1():
    return fixture_treebank("fig1.conllu")


@pytest.fixture
def fig3_gold():
    return fixture_treebank("fig3_gold.conllu")


@pytest.fixture
def fig3_sys():
    return fixture_treebank("fig3_sys.conllu")


@pytest.fixture
def vso_toy():
    return fixture_treebank("vso_toy.conllu")


@pytest.fixture
def vso_rotations():
    return fixture_treebank("vso_rotations.conllu")


def make_sentence(rows, comments=()):
    """rows: (form, upos, head, deprel) or (form, upos, head, deprel, lemma)."""
    tokens = []
    for i, row in enumerate(rows, 1):
        form, upos, head, deprel = row[:4]
        lemma = row[4] if len(row) > 4 else None
        tokens.append(
            Token(id=i, form=form, upos=upos, head=head, deprel=deprel, lemma=lemma)
        )
    return AnnotatedSentence(tokens=tuple(tokens), comments=tuple(comments))


def random_tree_sentence(n, rng: random.Random, forms=None):
    """Random single-rooted tree: each node attaches to an already-placed one."""
    heads = [0] * (n + 1)
    order = list(range(1, n + 1))
    rng.shuffle(order)
    placed = [order[0]]
    heads[order[0]] = 0
    for node in order[1:]:
        heads[node] = rng.choice(placed)
        placed.append(node)
    rows = []
    for i in range(1, n + 1):
        form = forms[i - 1] if forms else f"w{i}"
        deprel = "root" if heads[i] == 0 else "dep"
        rows.append((form, "NOUN", heads[i], deprel))
    return make_sentence(rows)


# Deterministic synthetic treebank used by cross-validation and learner tests.
# Template grammar over a small vocabulary: every sentence is a valid tree and
# the tag of each word is recoverable from its suffix.

_NOUNS = ["bahay", "aklat", "mesa", "lungsod", "hardin", "paaralan", "kalye", "bulaklak"]
_PROPNS = ["Juan", "Maria", "Pedro", "Liza", "Antipolo", "Manila"]
_VERBS = ["kumain", "bumasa", "sumulat", "tumakbo", "uminom", "bumili", "lumangoy"]


def synthetic_treebank(n_sentences: int, seed: int = 7) -> Treebank:
    rng = random.Random(seed)
    sentences = []
    for idx in range(n_sentences):
        verb = rng.choice(_VERBS)
        subj = rng.choice(_PROPNS)
        obj = rng.choice(_NOUNS)
        shape = rng.randrange(3)
        if shape == 0:
            # V si S ng O .
            rows = [
                (verb, "VERB", 0, "root"),
                ("si", "ADP", 3, "case"),
                (subj, "PROPN", 1, "nsubj"),
                ("ng", "ADP", 5, "case"),
                (obj, "NOUN", 1, "obj"),
                (".", "PUNCT", 1, "punct"),
            ]
        elif shape == 1:
            # si S V ng O .
            rows = [
                ("si", "ADP", 2, "case"),
                (subj, "PROPN", 3, "nsubj"),
                (verb, "VERB", 0, "root"),
                ("ng", "ADP", 5, "case"),
                (obj, "NOUN", 3, "obj"),
                (".", "PUNCT", 3, "punct"),
            ]
        else:
            # V ng O .
            rows = [
                (verb, "VERB", 0, "root"),
                ("ng", "ADP", 3, "case"),
                (obj, "NOUN", 1, "obj"),
                (".", "PUNCT", 1, "punct"),
            ]
        text = " ".join(r[0] for r in rows)
        sentences.append(
            make_sentence(
                rows, comments=(f"# sent_id = syn-{idx + 1}", f"# text = {text}")
            )
        )
    return Treebank(sentences=tuple(sentences), source_name="synthetic")
