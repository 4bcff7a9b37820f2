"""Unsupervised sentence boundary detection and word tokenization.

Implements Punkt-style boundary detection (Kiss & Strunk 2006): a model of
abbreviation types, collocations, frequent sentence starters, and orthographic
contexts is learned from raw text with no annotations, then used to decide
which ``. ! ? …`` characters end sentences. Abbreviation candidates are scored
with a modified Dunning log-likelihood ratio scaled by a length penalty
``exp(-len)``, an internal-period factor, and a penalty for occurrences
without a trailing period; collocations and sentence starters use the plain
Dunning ratio with a one-sided direction check.

The word tokenizer splits on whitespace and detaches leading/trailing
punctuation, keeping internal punctuation (``4,000``) and hyphens intact.
"""

from __future__ import annotations

import math
import re
from collections import Counter, defaultdict
from dataclasses import dataclass, field

from udkit.errors import UdkitError
from udkit.treebank import AnnotatedSentence, Token, Treebank

SENT_END_CHARS = (".", "!", "?", "…")

# Punctuation detached by the word tokenizer. Hyphens, underscores and
# apostrophes stay attached (word-internal in Tagalog and elsewhere).
_DETACHABLE = set(".,!?;:()[]{}<>\"«»“”‘’…¡¿/\\|*&%#@+=~^`—–")

_RE_NUMERIC = re.compile(r"^-?[\.,]?\d[\d,\.-]*\.?$")
_RE_INITIAL = re.compile(r"^[^\W\d]\.$", re.UNICODE)
_RE_ALPHA = re.compile(r"^[^\W\d]+$", re.UNICODE)
_RE_NON_PUNCT = re.compile(r"[^\W\d]", re.UNICODE)
_RE_ELLIPSIS = re.compile(r"(\.\.+|…)$")

# Orthographic context flags: sentence-initial/internal x upper/lower case.
ORTHO_BEG_UC = 1 << 1
ORTHO_MID_UC = 1 << 2
ORTHO_UNK_UC = 1 << 3
ORTHO_BEG_LC = 1 << 4
ORTHO_MID_LC = 1 << 5
ORTHO_UNK_LC = 1 << 6
ORTHO_UC = ORTHO_BEG_UC | ORTHO_MID_UC | ORTHO_UNK_UC
ORTHO_LC = ORTHO_BEG_LC | ORTHO_MID_LC | ORTHO_UNK_LC

_ORTHO_MAP = {
    ("initial", "upper"): ORTHO_BEG_UC,
    ("internal", "upper"): ORTHO_MID_UC,
    ("unknown", "upper"): ORTHO_UNK_UC,
    ("initial", "lower"): ORTHO_BEG_LC,
    ("internal", "lower"): ORTHO_MID_LC,
    ("unknown", "lower"): ORTHO_UNK_LC,
}


@dataclass(frozen=True)
class SegmenterParams:
    """Decision thresholds, defaults per the original publication."""

    abbrev: float = 0.3
    colloc: float = 7.88
    starter: float = 30.0


@dataclass(frozen=True)
class SentenceSpan:
    start: int
    end: int


@dataclass
class BoundaryModel:
    """Statistics learned from a raw corpus, sufficient to segment new text.

    ``type_counts`` maps (case-folded type without its final period, whether
    the final period was present) to a frequency. ``ortho_context`` maps a
    type to a bitmask of the case patterns it was seen in.
    """

    abbreviations: frozenset = frozenset()
    collocations: frozenset = frozenset()
    sentence_starters: frozenset = frozenset()
    type_counts: dict = field(default_factory=dict)
    total_tokens: int = 0
    ortho_context: dict = field(default_factory=dict)

    def type_count(self, typ: str) -> int:
        return self.type_counts.get((typ, False), 0) + self.type_counts.get(
            (typ, True), 0
        )


class _Tok:
    """A training/segmentation token with boundary annotations."""

    __slots__ = (
        "tok", "start", "end", "linestart", "parastart",
        "sentbreak", "abbr", "ellipsis",
    )

    def __init__(self, tok, start=0, end=0, linestart=False, parastart=False):
        self.tok = tok
        self.start = start
        self.end = end
        self.linestart = linestart
        self.parastart = parastart
        self.sentbreak = False
        self.abbr = False
        self.ellipsis = False

    @property
    def type(self) -> str:
        low = self.tok.lower()
        if _RE_NUMERIC.match(low):
            return "##number##." if low.endswith(".") else "##number##"
        return low

    @property
    def period_final(self) -> bool:
        return self.tok.endswith(".")

    @property
    def type_no_period(self) -> str:
        typ = self.type
        return typ[:-1] if len(typ) > 1 and typ.endswith(".") else typ

    @property
    def type_no_sentperiod(self) -> str:
        return self.type_no_period if self.sentbreak else self.type

    @property
    def first_upper(self) -> bool:
        return bool(self.tok) and self.tok[0].isupper()

    @property
    def first_lower(self) -> bool:
        return bool(self.tok) and self.tok[0].islower()

    @property
    def first_case(self) -> str:
        if self.first_lower:
            return "lower"
        if self.first_upper:
            return "upper"
        return "none"

    @property
    def is_ellipsis_tok(self) -> bool:
        return bool(_RE_ELLIPSIS.search(self.tok))

    @property
    def is_number(self) -> bool:
        return self.type.startswith("##number##")

    @property
    def is_initial(self) -> bool:
        return bool(_RE_INITIAL.match(self.tok))

    @property
    def is_alpha(self) -> bool:
        return bool(_RE_ALPHA.match(self.tok))

    @property
    def is_non_punct(self) -> bool:
        return bool(_RE_NON_PUNCT.search(self.type))


def _iter_chunks(text: str):
    """Yield (chunk, start, linestart, parastart) over whitespace-free runs."""
    linestart = True
    parastart = False
    pos = 0
    for match in re.finditer(r"\S+", text):
        gap = text[pos:match.start()]
        if pos:
            newlines = gap.count("\n")
            linestart = newlines >= 1
            parastart = newlines >= 2
        yield match.group(), match.start(), linestart, parastart
        pos = match.end()
        linestart = parastart = False


def _peel(chunk: str, start: int, keep_final_period: bool, abbreviations=frozenset()):
    """Split one whitespace-delimited chunk into punctuation and core pieces.

    ``keep_final_period`` leaves a single trailing period attached to the core
    (training convention); otherwise the period detaches unless the core is a
    known abbreviation. Ellipses detach as single units in both modes.
    """
    pieces = []
    lead = 0
    while lead < len(chunk) and chunk[lead] in _DETACHABLE:
        run = re.match(r"\.\.+|…", chunk[lead:])
        size = len(run.group()) if run else 1
        pieces.append((chunk[lead:lead + size], start + lead, start + lead + size))
        lead += size
    core = chunk[lead:]
    core_start = start + lead
    trail = []
    while core:
        ellipsis = _RE_ELLIPSIS.search(core)
        if ellipsis:
            cut = ellipsis.start()
            trail.append((core[cut:], core_start + cut, core_start + len(core)))
            core = core[:cut]
            continue
        last = core[-1]
        if last not in _DETACHABLE:
            break
        if last == ".":
            if keep_final_period and len(core) > 1:
                break
            if len(core) > 1 and core[:-1].lower() in abbreviations:
                break
        trail.append((last, core_start + len(core) - 1, core_start + len(core)))
        core = core[:-1]
    if core:
        pieces.append((core, core_start, core_start + len(core)))
    pieces.extend(reversed(trail))
    return pieces


def _training_tokens(text: str) -> list:
    tokens = []
    for chunk, start, linestart, parastart in _iter_chunks(text):
        first = True
        for piece, s, e in _peel(chunk, start, keep_final_period=True):
            tokens.append(
                _Tok(piece, s, e, linestart=linestart and first,
                     parastart=parastart and first)
            )
            first = False
    return tokens


def _dunning_abbrev_llr(count_a, count_b, count_ab, total):
    """Modified Dunning ratio: how strongly the type co-occurs with a period
    versus the period-independence null hypothesis (alternative p = 0.99)."""
    p_null = count_b / total
    p_alt = 0.99
    null = count_ab * math.log(p_null) + (count_a - count_ab) * math.log(1 - p_null)
    alt = count_ab * math.log(p_alt) + (count_a - count_ab) * math.log(1 - p_alt)
    return -2.0 * (null - alt)


def _dunning_llr(count_a, count_b, count_ab, total):
    """Plain Dunning log-likelihood ratio for bigram dependence."""
    p = count_b / total
    p1 = count_ab / count_a
    p2 = (count_b - count_ab) / (total - count_a) if total != count_a else 1.0

    def term(k, n, prob):
        if prob <= 0 or prob >= 1:
            return 0.0
        return k * math.log(prob) + (n - k) * math.log(1.0 - prob)

    summand1 = term(count_ab, count_a, p)
    summand2 = term(count_b - count_ab, total - count_a, p)
    summand3 = 0.0 if count_a == count_ab else term(count_ab, count_a, p1)
    summand4 = 0.0 if count_b == count_ab else term(
        count_b - count_ab, total - count_a, p2
    )
    return -2.0 * (summand1 + summand2 - summand3 - summand4)


def abbreviation_score(typ, count_with, count_without, num_period_tokens, total):
    """The decision score for one period-final type (period stripped)."""
    num_periods = typ.count(".") + 1
    num_nonperiods = len(typ) - num_periods + 1
    llr = _dunning_abbrev_llr(
        count_with + count_without, num_period_tokens, count_with, total
    )
    f_length = math.exp(-num_nonperiods)
    f_penalty = num_nonperiods ** -count_without
    return llr * f_length * num_periods * f_penalty


def train_boundary_model(
    raw_text: str, params: SegmenterParams = SegmenterParams()
) -> BoundaryModel:
    """Learn abbreviation, collocation, and sentence-starter statistics from
    raw text. Deterministic: the same corpus and thresholds always produce an
    identical model. Degenerate corpora simply yield empty sets."""
    if not raw_text:
        raise UdkitError("cannot train a boundary model on empty text")
    tokens = _training_tokens(raw_text)

    type_counts: Counter = Counter()
    num_period_tokens = 0
    for tok in tokens:
        typ = tok.type
        if len(typ) > 1 and typ.endswith("."):
            type_counts[(typ[:-1], True)] += 1
        else:
            type_counts[(typ, False)] += 1
        if tok.period_final:
            num_period_tokens += 1
    total = len(tokens)

    abbreviations = set()
    for (typ, with_period), count_with in type_counts.items():
        if not with_period:
            continue
        if not _RE_NON_PUNCT.search(typ) or typ == "##number##":
            continue
        count_without = type_counts.get((typ, False), 0)
        score = abbreviation_score(
            typ, count_with, count_without, num_period_tokens, total
        )
        if score >= params.abbrev:
            abbreviations.add(typ)

    for tok in tokens:
        _first_pass(tok, abbreviations)

    ortho_context = defaultdict(int)
    context = "internal"
    for tok in tokens:
        if tok.parastart and context != "unknown":
            context = "initial"
        if tok.linestart and context == "internal":
            context = "unknown"
        flag = _ORTHO_MAP.get((context, tok.first_case), 0)
        if flag:
            ortho_context[tok.type_no_sentperiod] |= flag
        if tok.sentbreak:
            context = "unknown" if (tok.is_number or tok.is_initial) else "initial"
        elif tok.ellipsis or tok.abbr:
            context = "unknown"
        else:
            context = "internal"

    sentbreak_count = sum(1 for tok in tokens if tok.sentbreak)
    starter_counts: Counter = Counter()
    colloc_counts: Counter = Counter()
    for tok1, tok2 in zip(tokens, tokens[1:]):
        if tok1.sentbreak and not (tok1.is_number or tok1.is_initial) and tok2.is_alpha:
            starter_counts[tok2.type_no_sentperiod] += 1
        if tok1.period_final and tok1.is_non_punct and tok2.is_non_punct:
            colloc_counts[(tok1.type_no_period, tok2.type_no_sentperiod)] += 1

    def pair_count(typ):
        return type_counts.get((typ, False), 0) + type_counts.get((typ, True), 0)

    sentence_starters = set()
    if sentbreak_count:
        for typ, at_break in starter_counts.items():
            typ_count = pair_count(typ)
            if typ_count < at_break:
                continue
            llr = _dunning_llr(sentbreak_count, typ_count, at_break, total)
            if llr >= params.starter and total / sentbreak_count > typ_count / at_break:
                sentence_starters.add(typ)

    collocations = set()
    for (typ1, typ2), count in colloc_counts.items():
        if typ2 in sentence_starters:
            continue
        count1, count2 = pair_count(typ1), pair_count(typ2)
        if count1 > 1 and count2 > 1 and 1 < count <= min(count1, count2):
            llr = _dunning_llr(count1, count2, count, total)
            if llr >= params.colloc and total / count1 > count2 / count:
                collocations.add((typ1, typ2))

    return BoundaryModel(
        abbreviations=frozenset(abbreviations),
        collocations=frozenset(collocations),
        sentence_starters=frozenset(sentence_starters),
        type_counts=dict(type_counts),
        total_tokens=total,
        ortho_context=dict(ortho_context),
    )


def _first_pass(tok: _Tok, abbreviations) -> None:
    """Type-based annotation: bare terminators break; period-final tokens
    break unless the type is a known abbreviation; multi-dot runs and the
    ellipsis character are provisional non-breaks pending the second pass."""
    if tok.is_ellipsis_tok:
        tok.ellipsis = True
    elif tok.tok in SENT_END_CHARS:
        tok.sentbreak = True
    elif tok.period_final:
        base = tok.type_no_period
        if base in abbreviations or base.split("-")[-1] in abbreviations:
            tok.abbr = True
        else:
            tok.sentbreak = True


def _ortho_heuristic(model: BoundaryModel, tok: _Tok):
    """Decide from learned case patterns whether ``tok`` starts a sentence.
    Returns True, False, or "unknown"."""
    if tok.tok in (";", ":", ",", ".", "!", "?"):
        return False
    ortho = model.ortho_context.get(tok.type_no_sentperiod, 0)
    if tok.first_upper and (ortho & ORTHO_LC) and not (ortho & ORTHO_MID_UC):
        return True
    if tok.first_lower and ((ortho & ORTHO_UC) or not (ortho & ORTHO_BEG_LC)):
        return False
    return "unknown"


def _second_pass(model: BoundaryModel, tok1: _Tok, tok2) -> None:
    """Token-pair reclassification using collocations, the orthographic
    heuristic, and frequent sentence starters."""
    if tok2 is None or not tok1.period_final:
        if tok1.ellipsis and tok2 is not None:
            tok1.sentbreak = not tok2.first_lower
        return
    typ = tok1.type_no_period
    next_typ = tok2.type_no_sentperiod

    if (typ, next_typ) in model.collocations:
        tok1.sentbreak = False
        tok1.abbr = True
        return
    if tok1.ellipsis:
        # an ellipsis ends the sentence unless the continuation is lowercase
        tok1.sentbreak = not tok2.first_lower
        return
    if tok1.abbr and not tok1.is_initial:
        if _ortho_heuristic(model, tok2) is True:
            tok1.sentbreak = True
            return
        if tok2.first_upper and next_typ in model.sentence_starters:
            tok1.sentbreak = True
            return
    if tok1.is_initial or typ == "##number##":
        heuristic = _ortho_heuristic(model, tok2)
        if heuristic is False:
            tok1.sentbreak = False
            tok1.abbr = True
            return
        if (
            heuristic == "unknown"
            and tok1.is_initial
            and tok2.first_upper
            and not (model.ortho_context.get(next_typ, 0) & ORTHO_LC)
        ):
            tok1.sentbreak = False
            tok1.abbr = True


def _annotated_tokens(text: str, model: BoundaryModel) -> list:
    tokens = _training_tokens(text)
    for tok in tokens:
        _first_pass(tok, model.abbreviations)
    for i, tok in enumerate(tokens):
        _second_pass(model, tok, tokens[i + 1] if i + 1 < len(tokens) else None)
    return tokens


def segment_sentences(text: str, model: BoundaryModel) -> list[SentenceSpan]:
    """Split text into sentence spans. Every span ends at a terminator
    character or at end of text; spans jointly cover all non-whitespace."""
    tokens = _annotated_tokens(text, model)
    spans = []
    current = None
    for tok in tokens:
        if current is None:
            current = tok.start
        if tok.sentbreak:
            spans.append(SentenceSpan(current, tok.end))
            current = None
    if current is not None and tokens:
        spans.append(SentenceSpan(current, tokens[-1].end))
    return spans


def tokenize_words(sentence_text: str, model: BoundaryModel | None = None):
    """Split a sentence into (form, (start, end)) word tokens. Leading and
    trailing punctuation detach as their own tokens; a final period stays
    attached to a known abbreviation; internal punctuation is preserved."""
    abbreviations = model.abbreviations if model is not None else frozenset()
    words = []
    for chunk, start, _, _ in _iter_chunks(sentence_text):
        for piece, s, e in _peel(
            chunk, start, keep_final_period=False, abbreviations=abbreviations
        ):
            words.append((piece, (s, e)))
    return words


def segment_to_treebank(
    text: str, model: BoundaryModel, source_name: str = ""
) -> Treebank:
    """Segment raw text into an unannotated treebank with character offsets.
    Only sentence/word boundaries are decided; every annotation field is
    left unset."""
    sentences = []
    for index, span in enumerate(segment_sentences(text, model), 1):
        sentence_text = text[span.start:span.end]
        words = tokenize_words(sentence_text, model)
        if not words:
            continue
        tokens = tuple(
            Token(id=i, form=form) for i, (form, _) in enumerate(words, 1)
        )
        offsets = tuple(
            (span.start + s, span.start + e) for _, (s, e) in words
        )
        clean = re.sub(r"\s+", " ", sentence_text).strip()
        sentences.append(
            AnnotatedSentence(
                tokens=tokens,
                comments=(f"# sent_id = {index}", f"# text = {clean}"),
                char_offsets=offsets,
            )
        )
    return Treebank(sentences=tuple(sentences), source_name=source_name)


_MODEL_HEADER = "# udkit boundary model v1"


def save_model(model: BoundaryModel, path) -> None:
    """Write the model in a versioned key-value text format: one entry per
    line under section headers."""
    lines = [_MODEL_HEADER, "[meta]", f"total_tokens\t{model.total_tokens}"]
    lines.append("[type_counts]")
    for (typ, with_period), count in sorted(model.type_counts.items()):
        lines.append(f"{typ}\t{int(with_period)}\t{count}")
    lines.append("[abbreviations]")
    lines.extend(sorted(model.abbreviations))
    lines.append("[collocations]")
    lines.extend(f"{a}\t{b}" for a, b in sorted(model.collocations))
    lines.append("[sentence_starters]")
    lines.extend(sorted(model.sentence_starters))
    lines.append("[ortho_context]")
    lines.extend(f"{typ}\t{flags}" for typ, flags in sorted(model.ortho_context.items()))
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("\n".join(lines) + "\n")


def load_model(path) -> BoundaryModel:
    with open(path, encoding="utf-8") as handle:
        lines = handle.read().split("\n")
    if not lines or lines[0] != _MODEL_HEADER:
        raise UdkitError(f"{path}: not a udkit boundary model")
    section = None
    total = 0
    type_counts = {}
    abbreviations, collocations, starters = set(), set(), set()
    ortho = {}
    for line in lines[1:]:
        if not line:
            continue
        if line.startswith("["):
            section = line.strip("[]")
            continue
        if section == "meta":
            key, value = line.split("\t")
            if key == "total_tokens":
                total = int(value)
        elif section == "type_counts":
            typ, with_period, count = line.split("\t")
            type_counts[(typ, bool(int(with_period)))] = int(count)
        elif section == "abbreviations":
            abbreviations.add(line)
        elif section == "collocations":
            a, b = line.split("\t")
            collocations.add((a, b))
        elif section == "sentence_starters":
            starters.add(line)
        elif section == "ortho_context":
            typ, flags = line.rsplit("\t", 1)
            ortho[typ] = int(flags)
    return BoundaryModel(
        abbreviations=frozenset(abbreviations),
        collocations=frozenset(collocations),
        sentence_starters=frozenset(starters),
        type_counts=type_counts,
        total_tokens=total,
        ortho_context=ortho,
    )
