"""Convert a corpus tagged with a language-specific tagset to UD POS tags.

The mapping table is declarative: lines of ``SOURCE<TAB>TARGET`` with ``#``
comments and an optional ``DEFAULT<TAB>TAG`` line for unmapped sources.
Without a default, an unmapped tag is an error. Input corpora are either
``form/TAG`` tokens one sentence per line, or two-column TSV with blank-line
sentence separators (auto-detected).
"""

from __future__ import annotations

from dataclasses import dataclass

from udkit.errors import UdkitError
from udkit.treebank import UPOS_TAGS, AnnotatedSentence, Token, Treebank


@dataclass(frozen=True)
class TagMap:
    entries: dict
    default: str | None = None  # None means unmapped tags are an error


@dataclass(frozen=True)
class TaggedCorpus:
    sentences: tuple  # tuple of tuples of (form, tag)


def load_tag_map(text: str) -> TagMap:
    entries = {}
    default = None
    for line_no, line in enumerate(text.split("\n"), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise UdkitError(f"line {line_no}: expected SOURCE<TAB>TARGET, got {line!r}")
        source, target = parts
        if source == "DEFAULT":
            if target not in UPOS_TAGS:
                raise UdkitError(f"line {line_no}: {target!r} is not a UD tag")
            default = target
            continue
        if target not in UPOS_TAGS:
            raise UdkitError(f"line {line_no}: {target!r} is not a UD tag")
        if source in entries:
            raise UdkitError(f"line {line_no}: duplicate source tag {source!r}")
        entries[source] = target
    return TagMap(entries=entries, default=default)


def load_tag_map_file(path) -> TagMap:
    with open(path, encoding="utf-8") as handle:
        return load_tag_map(handle.read())


def parse_tagged_corpus(text: str) -> TaggedCorpus:
    """Auto-detect the corpus format: TSV if the first content line contains
    a tab, otherwise slash-joined tokens."""
    content = [line for line in text.split("\n") if line.strip()]
    if not content:
        return TaggedCorpus(sentences=())
    if "\t" in content[0]:
        return _parse_tsv(text)
    return _parse_slash(text)


def _parse_slash(text: str) -> TaggedCorpus:
    sentences = []
    for line_no, line in enumerate(text.split("\n"), 1):
        line = line.strip()
        if not line:
            continue
        pairs = []
        for chunk in line.split():
            if "/" not in chunk:
                raise UdkitError(f"line {line_no}: token {chunk!r} has no /TAG")
            form, tag = chunk.rsplit("/", 1)
            if not form or not tag:
                raise UdkitError(f"line {line_no}: malformed token {chunk!r}")
            pairs.append((form, tag))
        sentences.append(tuple(pairs))
    return TaggedCorpus(sentences=tuple(sentences))


def _parse_tsv(text: str) -> TaggedCorpus:
    sentences = []
    pairs = []
    for line_no, line in enumerate(text.split("\n"), 1):
        if not line.strip():
            if pairs:
                sentences.append(tuple(pairs))
                pairs = []
            continue
        parts = line.split("\t")
        if len(parts) != 2 or not parts[0] or not parts[1]:
            raise UdkitError(f"line {line_no}: expected FORM<TAB>TAG, got {line!r}")
        pairs.append((parts[0], parts[1]))
    if pairs:
        sentences.append(tuple(pairs))
    return TaggedCorpus(sentences=tuple(sentences))


def convert_corpus(corpus: TaggedCorpus, tag_map: TagMap):
    """Map every tag through the table. Returns the converted treebank (form
    and UPOS only) and a report of unmapped source tags as (tag, count,
    mapped_to) rows sorted by tag."""
    unmapped: dict[str, int] = {}
    sentences = []
    for index, pairs in enumerate(corpus.sentences, 1):
        tokens = []
        for position, (form, tag) in enumerate(pairs, 1):
            upos = tag_map.entries.get(tag)
            if upos is None:
                if tag_map.default is None:
                    raise UdkitError(
                        f"sentence {index}: unmapped source tag {tag!r}"
                    )
                unmapped[tag] = unmapped.get(tag, 0) + 1
                upos = tag_map.default
            tokens.append(Token(id=position, form=form, upos=upos))
        sentences.append(
            AnnotatedSentence(
                tokens=tuple(tokens), comments=(f"# sent_id = {index}",)
            )
        )
    report = [(tag, count, tag_map.default) for tag, count in sorted(unmapped.items())]
    return Treebank(sentences=tuple(sentences), source_name="converted"), report


def report_to_tsv(report) -> str:
    lines = ["source_tag\tcount\tmapped_to"]
    lines.extend(f"{tag}\t{count}\t{target}" for tag, count, target in report)
    return "\n".join(lines) + "\n"
