import itertools
import random

import pytest

from conftest import FIXTURES, fixture_text, make_sentence, random_tree_sentence
from udkit.errors import ConlluError
from udkit.treebank import (
    AnnotatedSentence,
    Token,
    Treebank,
    dependency_triples,
    parse_conllu,
    renumber,
    subtree_ids,
    validate_tree,
    write_conllu,
)

ALL_FIXTURES = sorted(p.name for p in FIXTURES.glob("*.conllu"))


@pytest.mark.parametrize("name", ALL_FIXTURES)
def test_roundtrip_byte_exact(name):
    text = fixture_text(name)
    assert write_conllu(parse_conllu(text)) == text


@pytest.mark.parametrize("name", ALL_FIXTURES)
def test_reparse_equality(name):
    tb = parse_conllu(fixture_text(name))
    assert parse_conllu(write_conllu(tb)) == tb


def test_fig1_structure(fig1):
    assert len(fig1) == 1
    sentence = fig1.sentences[0]
    assert len(sentence) == 8
    assert sentence.root().id == 4
    assert sentence.root().form == "donated"
    assert [t.deprel for t in sentence.tokens] == [
        "det", "nsubj", "aux", "root", "case", "amod", "obl", "punct",
    ]


def test_empty_input():
    tb = parse_conllu("")
    assert len(tb) == 0
    assert write_conllu(tb) == ""


def test_head_out_of_range_reports_line():
    lines = fixture_text("fig1.conllu").split("\n")
    lines[3] = lines[3].replace("\t4\tnsubj", "\t99\tnsubj")
    with pytest.raises(ConlluError, match="head out of range") as exc:
        parse_conllu("\n".join(lines))
    assert exc.value.line == 4


def test_malformed_column_count():
    with pytest.raises(ConlluError, match="10 tab-separated columns"):
        parse_conllu("1\tfoo\t_\n")


def test_non_consecutive_ids():
    text = "1\ta\t_\t_\t_\t_\t0\troot\t_\t_\n3\tb\t_\t_\t_\t_\t1\tdep\t_\t_\n\n"
    with pytest.raises(ConlluError, match="non-consecutive"):
        parse_conllu(text)


def test_cycle_detected_at_parse():
    text = (
        "1\ta\t_\t_\t_\t_\t2\tdep\t_\t_\n"
        "2\tb\t_\t_\t_\t_\t1\tdep\t_\t_\n\n"
    )
    with pytest.raises(ConlluError, match="cycle") as exc:
        parse_conllu(text)
    assert exc.value.line == 1


def test_empty_nodes_rejected():
    with pytest.raises(ConlluError, match="empty nodes"):
        parse_conllu("1.1\tfoo\t_\t_\t_\t_\t_\t_\t_\t_\n\n")


def test_feats_canonical_sort():
    text = "1\tmga\t_\tNOUN\t_\tNumber=Plur|Case=Nom\t0\troot\t_\t_\n\n"
    tb = parse_conllu(text)
    tok = tb.sentences[0].tokens[0]
    assert tok.feats == (("Case", "Nom"), ("Number", "Plur"))
    assert "Case=Nom|Number=Plur" in write_conllu(tb)


def test_feats_duplicate_key_rejected():
    with pytest.raises(ConlluError, match="duplicate"):
        parse_conllu("1\tx\t_\t_\t_\tCase=Nom|Case=Gen\t0\troot\t_\t_\n\n")


def test_multiword_span_parsed():
    tb = parse_conllu(fixture_text("mixed.conllu"))
    sentence = tb.sentences[1]
    assert len(sentence.spans) == 1
    span = sentence.spans[0]
    assert (span.start, span.end, span.surface) == (1, 2, "nagluto")
    assert [f for f, _ in sentence.surface_forms()] == ["nagluto", "sila"]


def test_validate_tree_ok(fig1):
    assert validate_tree(fig1.sentences[0]) == []


def test_validate_tree_cycle():
    s = make_sentence([("a", "NOUN", 2, "dep"), ("b", "NOUN", 1, "dep")])
    violations = validate_tree(s)
    assert any("cycle at tokens 1, 2" in v for v in violations)


def test_validate_tree_multiple_roots():
    s = make_sentence([("a", "NOUN", 0, "root"), ("b", "NOUN", 0, "root")])
    assert any("multiple roots" in v for v in validate_tree(s))


def test_validate_tree_random_valid_trees():
    rng = random.Random(1)
    for _ in range(300):
        n = rng.randint(1, 8)
        assert validate_tree(random_tree_sentence(n, rng)) == []


def test_validate_tree_exhaustive_small():
    # every head vector over n <= 4: validate_tree agrees with first principles
    for n in range(1, 5):
        for heads in itertools.product(range(0, n + 1), repeat=n):
            s = make_sentence(
                [(f"w{i}", "NOUN", heads[i - 1], "dep") for i in range(1, n + 1)]
            )
            ok = _is_tree(heads)
            assert (validate_tree(s) == []) == ok, heads


def _is_tree(heads):
    n = len(heads)
    if sum(1 for h in heads if h == 0) != 1:
        return False
    for start in range(1, n + 1):
        seen = set()
        node = start
        while node != 0:
            if node in seen:
                return False
            seen.add(node)
            node = heads[node - 1]
    return True


def test_renumber_identity(fig1):
    sentence = fig1.sentences[0]
    assert renumber(sentence, list(range(1, 9))) == sentence


def test_renumber_reversed_preserves_triples(fig1):
    sentence = fig1.sentences[0]
    reversed_s = renumber(sentence, list(range(8, 0, -1)))
    assert dependency_triples(reversed_s) == dependency_triples(sentence)
    assert [t.form for t in reversed_s.tokens] == [
        ".", "frontliners", "local", "to", "donated", "were", "proceeds", "All",
    ]


def test_renumber_chain_oracle():
    # chain 1<-2<-3 (head of 1 is 2, of 2 is 3, of 3 is 0) reversed
    s = make_sentence([("a", "X", 2, "dep"), ("b", "X", 3, "dep"), ("c", "X", 0, "root")])
    out = renumber(s, [3, 2, 1])
    assert [t.head for t in out.tokens] == [0, 1, 2]
    assert dependency_triples(out) == dependency_triples(s)


def test_renumber_all_permutations_preserve_triples(vso_toy):
    sentence = vso_toy.sentences[0]
    expected = dependency_triples(sentence)
    for perm in itertools.permutations(range(1, 7)):
        assert dependency_triples(renumber(sentence, list(perm))) == expected


def test_renumber_rejects_non_bijection(fig1):
    with pytest.raises(ValueError, match="bijection"):
        renumber(fig1.sentences[0], [1, 1, 2, 3, 4, 5, 6, 7])


def test_subtree_ids(vso_toy):
    sentence = vso_toy.sentences[0]
    assert subtree_ids(sentence, 3) == {2, 3}
    assert subtree_ids(sentence, 5) == {4, 5}
    assert subtree_ids(sentence, 1) == {1, 2, 3, 4, 5, 6}


def test_token_feats_string():
    tok = Token(id=1, form="x", feats=(("Case", "Nom"), ("Number", "Plur")))
    assert tok.feats_string() == "Case=Nom|Number=Plur"
    assert Token(id=1, form="x").feats_string() == "_"


def test_treebank_iteration(fig1):
    assert [len(s) for s in fig1] == [8]
    assert isinstance(fig1, Treebank)
    assert isinstance(fig1.sentences[0], AnnotatedSentence)
