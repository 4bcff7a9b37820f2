"""In-memory model of UD-annotated text plus CoNLL-U reading/writing.

The CoNLL-U dialect handled here: 10 tab-separated columns, ``_`` for unset
values, ``# ...`` comment lines, ``i-j`` multiword-token range lines, blank
lines between sentences, UTF-8 with LF endings. Enhanced dependencies (DEPS)
are carried as an opaque string; empty nodes (decimal ids) are rejected.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from udkit.errors import ConlluError

UPOS_TAGS = frozenset(
    [
        "ADJ", "ADP", "ADV", "AUX", "CCONJ", "DET", "INTJ", "NOUN", "NUM",
        "PART", "PRON", "PROPN", "PUNCT", "SCONJ", "SYM", "VERB", "X",
    ]
)

#: Head-POS marker for the virtual root, used by the delexicalized labeler
#: and the parser features. Not a UPOS tag.
ROOT_MARKER = "ROOT"

FeatPairs = tuple[tuple[str, str], ...]


def canonical_feats(pairs) -> FeatPairs:
    """Sort feature pairs case-insensitively by key and reject duplicates."""
    pairs = tuple(pairs)
    keys = [k for k, _ in pairs]
    if len(set(k.lower() for k in keys)) != len(keys):
        raise ValueError(f"duplicate feature keys in {keys}")
    return tuple(sorted(pairs, key=lambda kv: kv[0].lower()))


@dataclass(frozen=True)
class Token:
    """One word line of a treebank sentence."""

    id: int
    form: str
    lemma: str | None = None
    upos: str | None = None
    xpos: str | None = None
    feats: FeatPairs = ()
    head: int | None = None
    deprel: str | None = None
    deps: str | None = None
    misc: str | None = None

    def feats_string(self) -> str:
        if not self.feats:
            return "_"
        return "|".join(f"{k}={v}" for k, v in self.feats)


@dataclass(frozen=True)
class MultiwordSpan:
    """Surface token covering the syntactic words ``start..end`` inclusive."""

    start: int
    end: int
    surface: str


@dataclass(frozen=True)
class AnnotatedSentence:
    tokens: tuple[Token, ...]
    spans: tuple[MultiwordSpan, ...] = ()
    comments: tuple[str, ...] = ()
    #: (start, end) character offsets into the source document, populated only
    #: by the segmenter; never serialized, ignored for equality.
    char_offsets: tuple[tuple[int, int], ...] | None = field(
        default=None, compare=False
    )

    def __len__(self) -> int:
        return len(self.tokens)

    def root(self) -> Token | None:
        for tok in self.tokens:
            if tok.head == 0:
                return tok
        return None

    def text(self) -> str:
        """Reconstruct running text: the ``# text =`` comment if present,
        else the forms joined by single spaces (multiword surfaces replacing
        their words)."""
        for comment in self.comments:
            if comment.startswith("# text ="):
                return comment.split("=", 1)[1].strip()
        return " ".join(form for form, _ in self.surface_forms())

    def surface_forms(self):
        """Yield (form, covered word ids) for the surface token sequence."""
        covered = {}
        for span in self.spans:
            for i in range(span.start, span.end + 1):
                covered[i] = span
        emitted = set()
        for tok in self.tokens:
            span = covered.get(tok.id)
            if span is None:
                yield tok.form, (tok.id,)
            elif span.start not in emitted:
                emitted.add(span.start)
                yield span.surface, tuple(range(span.start, span.end + 1))


@dataclass(frozen=True)
class Treebank:
    sentences: tuple[AnnotatedSentence, ...]
    source_name: str = ""

    def __len__(self) -> int:
        return len(self.sentences)

    def __iter__(self):
        return iter(self.sentences)


def _parse_field(value: str) -> str | None:
    return None if value == "_" else value


def _parse_feats(value: str, line: int) -> FeatPairs:
    if value == "_":
        return ()
    pairs = []
    for item in value.split("|"):
        if "=" not in item:
            raise ConlluError(f"malformed feature {item!r}", line)
        key, val = item.split("=", 1)
        pairs.append((key, val))
    try:
        return canonical_feats(pairs)
    except ValueError as exc:
        raise ConlluError(str(exc), line) from None


def _finish_sentence(tokens, spans, comments, token_lines, source_line):
    n = len(tokens)
    for tok, line_no in zip(tokens, token_lines):
        if tok.head is not None and not 0 <= tok.head <= n:
            raise ConlluError(
                f"head out of range: {tok.head} in a {n}-token sentence", line_no
            )
        if tok.head == tok.id:
            raise ConlluError(f"cycle detected: token {tok.id} heads itself", line_no)
    cycle = _find_cycle(tokens)
    if cycle:
        first = min(cycle)
        line_no = token_lines[first - 1]
        ids = ", ".join(str(i) for i in sorted(cycle))
        raise ConlluError(f"cycle detected at tokens {ids}", line_no)
    for span in spans:
        if not (1 <= span.start <= span.end <= n):
            raise ConlluError(
                f"multiword range {span.start}-{span.end} out of bounds", source_line
            )
    for a, b in zip(spans, spans[1:]):
        if b.start <= a.end:
            raise ConlluError(
                f"overlapping multiword ranges {a.start}-{a.end} and {b.start}-{b.end}",
                source_line,
            )
    return AnnotatedSentence(
        tokens=tuple(tokens), spans=tuple(spans), comments=tuple(comments)
    )


def _find_cycle(tokens) -> set[int]:
    """Return the ids on some head cycle, or an empty set. Unset heads and
    the root terminate a walk."""
    heads = {tok.id: tok.head for tok in tokens}
    color = {}  # 0 in-progress, 1 done
    for start in heads:
        if start in color:
            continue
        path = []
        node = start
        while node is not None and node != 0 and color.get(node) != 1:
            if color.get(node) == 0:
                return set(path[path.index(node):])
            color[node] = 0
            path.append(node)
            node = heads.get(node)
        for visited in path:
            color[visited] = 1
    return set()


def parse_conllu(text: str, source_name: str = "") -> Treebank:
    """Parse CoNLL-U text. Raises ConlluError with a line number on malformed
    input: wrong column count, non-consecutive ids, head out of range, cycles.
    """
    sentences = []
    comments: list[str] = []
    tokens: list[Token] = []
    spans: list[MultiwordSpan] = []
    token_lines: list[int] = []
    sentence_line = 1

    def flush(line_no):
        nonlocal comments, tokens, spans, token_lines
        if tokens or comments or spans:
            if not tokens:
                raise ConlluError("sentence without token lines", sentence_line)
            sentences.append(
                _finish_sentence(tokens, spans, comments, token_lines, sentence_line)
            )
        comments, tokens, spans, token_lines = [], [], [], []

    for line_no, line in enumerate(text.split("\n"), 1):
        line = line.rstrip("\r")
        if not line.strip():
            flush(line_no)
            sentence_line = line_no + 1
            continue
        if line.startswith("#"):
            comments.append(line)
            continue
        columns = line.split("\t")
        if len(columns) != 10:
            raise ConlluError(
                f"expected 10 tab-separated columns, got {len(columns)}", line_no
            )
        ident = columns[0]
        if "." in ident:
            raise ConlluError(f"empty nodes are not supported: id {ident!r}", line_no)
        if "-" in ident:
            try:
                start, end = (int(part) for part in ident.split("-"))
            except ValueError:
                raise ConlluError(f"malformed token id {ident!r}", line_no) from None
            if end < start:
                raise ConlluError(f"multiword range {ident!r} is reversed", line_no)
            spans.append(MultiwordSpan(start=start, end=end, surface=columns[1]))
            continue
        try:
            tok_id = int(ident)
        except ValueError:
            raise ConlluError(f"malformed token id {ident!r}", line_no) from None
        if tok_id != len(tokens) + 1:
            raise ConlluError(
                f"non-consecutive ids: got {tok_id}, expected {len(tokens) + 1}",
                line_no,
            )
        head_text = columns[6]
        if head_text == "_":
            head = None
        else:
            try:
                head = int(head_text)
            except ValueError:
                raise ConlluError(f"malformed head {head_text!r}", line_no) from None
            if head < 0:
                raise ConlluError(f"head out of range: {head}", line_no)
        tokens.append(
            Token(
                id=tok_id,
                form=columns[1],
                lemma=_parse_field(columns[2]),
                upos=_parse_field(columns[3]),
                xpos=_parse_field(columns[4]),
                feats=_parse_feats(columns[5], line_no),
                head=head,
                deprel=_parse_field(columns[7]),
                deps=_parse_field(columns[8]),
                misc=_parse_field(columns[9]),
            )
        )
        token_lines.append(line_no)
    flush(len(text.split("\n")) + 1)
    return Treebank(sentences=tuple(sentences), source_name=source_name)


def write_conllu(tb: Treebank) -> str:
    """Serialize a treebank. Re-parsing the output yields an equal treebank;
    for canonical-form inputs the bytes round-trip exactly."""
    out = []
    for sentence in tb.sentences:
        for comment in sentence.comments:
            out.append(comment)
        span_at = {span.start: span for span in sentence.spans}
        for tok in sentence.tokens:
            span = span_at.get(tok.id)
            if span is not None:
                out.append(
                    f"{span.start}-{span.end}\t{span.surface}\t_\t_\t_\t_\t_\t_\t_\t_"
                )
            out.append(
                "\t".join(
                    [
                        str(tok.id),
                        tok.form,
                        tok.lemma if tok.lemma is not None else "_",
                        tok.upos if tok.upos is not None else "_",
                        tok.xpos if tok.xpos is not None else "_",
                        tok.feats_string(),
                        str(tok.head) if tok.head is not None else "_",
                        tok.deprel if tok.deprel is not None else "_",
                        tok.deps if tok.deps is not None else "_",
                        tok.misc if tok.misc is not None else "_",
                    ]
                )
            )
        out.append("")
    return "\n".join(out) + ("\n" if out else "")


def read_conllu_file(path) -> Treebank:
    with open(path, encoding="utf-8") as handle:
        return parse_conllu(handle.read(), source_name=str(path))


def write_conllu_file(tb: Treebank, path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(write_conllu(tb))


def validate_tree(sentence: AnnotatedSentence) -> list[str]:
    """Check single-rootedness, head ranges, and acyclicity. Violations are
    returned as data, not raised."""
    violations = []
    n = len(sentence.tokens)
    for tok in sentence.tokens:
        if tok.head is None:
            violations.append(f"unset head at token {tok.id}")
        elif not 0 <= tok.head <= n:
            violations.append(f"head out of range at token {tok.id}")
    roots = [tok.id for tok in sentence.tokens if tok.head == 0]
    if not roots:
        violations.append("no root")
    elif len(roots) > 1:
        violations.append("multiple roots: tokens " + ", ".join(map(str, roots)))
    in_range = [
        tok for tok in sentence.tokens
        if tok.head is not None and 0 <= tok.head <= n and tok.head != tok.id
    ]
    for tok in sentence.tokens:
        if tok.head == tok.id:
            violations.append(f"cycle at tokens {tok.id}")
    cycle = _find_cycle(in_range)
    if cycle:
        violations.append("cycle at tokens " + ", ".join(map(str, sorted(cycle))))
    return violations


def renumber(sentence: AnnotatedSentence, permutation) -> AnnotatedSentence:
    """Reorder tokens so that old id ``permutation[k]`` becomes new id k+1,
    rewriting heads consistently. The (head form, dependent form, deprel)
    triple multiset is unchanged."""
    n = len(sentence.tokens)
    permutation = list(permutation)
    if sorted(permutation) != list(range(1, n + 1)):
        raise ValueError(f"permutation {permutation} is not a bijection over 1..{n}")
    new_id = {old: pos + 1 for pos, old in enumerate(permutation)}

    def map_head(head):
        if head is None or head == 0:
            return head
        return new_id[head]

    tokens = tuple(
        replace(sentence.tokens[old - 1], id=pos + 1,
                head=map_head(sentence.tokens[old - 1].head))
        for pos, old in enumerate(permutation)
    )
    spans = []
    for span in sentence.spans:
        images = sorted(new_id[i] for i in range(span.start, span.end + 1))
        if images != list(range(images[0], images[-1] + 1)):
            raise ValueError(
                f"permutation breaks multiword span {span.start}-{span.end}"
            )
        spans.append(replace(span, start=images[0], end=images[-1]))
    offsets = None
    if sentence.char_offsets is not None:
        offsets = tuple(sentence.char_offsets[old - 1] for old in permutation)
    return AnnotatedSentence(
        tokens=tokens,
        spans=tuple(spans),
        comments=sentence.comments,
        char_offsets=offsets,
    )


def dependency_triples(sentence: AnnotatedSentence):
    """The (head form, dependent form, deprel) multiset, with "<root>" for
    head 0. Invariant under renumbering."""
    by_id = {tok.id: tok for tok in sentence.tokens}
    triples = []
    for tok in sentence.tokens:
        if tok.head is None:
            continue
        head_form = "<root>" if tok.head == 0 else by_id[tok.head].form
        triples.append((head_form, tok.form, tok.deprel))
    return sorted(triples)


def subtree_ids(sentence: AnnotatedSentence, root_id: int) -> set[int]:
    """Token ids of the subtree rooted at ``root_id`` (inclusive)."""
    children = {}
    for tok in sentence.tokens:
        if tok.head is not None and tok.head != 0:
            children.setdefault(tok.head, []).append(tok.id)
    result = set()
    stack = [root_id]
    while stack:
        node = stack.pop()
        if node in result:
            continue
        result.add(node)
        stack.extend(children.get(node, []))
    return result
