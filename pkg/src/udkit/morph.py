"""Rule-based morphological analysis via finite-state transducers.

A rule file declares affixation and reduplication rules in a small
line-oriented language:

    VERSION v1
    STEM basa luto
    infix_um: INFIX um AFTER_ONSET EMIT Voice=Act POS VERB
    PREFIX nag EMIT Aspect=Perf
    SUFFIX hin
    REDUP CV
    COMPOSE redup_cv infix_um

Each rule compiles to a character-level transducer whose generation direction
maps lemma to surface; analysis is its inversion. ``COMPOSE a b`` licenses
applying ``a`` then ``b``; licensed application sequences are the directed
paths of the composition graph (plus each rule alone, and the empty sequence
when a lexicon restricts the stems). A cyclic composition graph would license
unbounded application and is rejected at compile time.

Without a lexicon, any residual string of length >= 2 counts as a stem; with
``STEM`` lines, residuals must be listed lemmas.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from udkit.errors import RuleError, UdkitError
from udkit.treebank import (
    UPOS_TAGS,
    AnnotatedSentence,
    FeatPairs,
    Treebank,
    canonical_feats,
)

ALPHABET = tuple("abcdefghijklmnopqrstuvwxyzñ'-")
VOWELS = tuple("aeiou")
CONSONANTS = tuple(c for c in ALPHABET if c not in VOWELS and c not in "'-")

EPS = ""

_MAX_SEQUENCES = 5000


class Fst:
    """A small epsilon-transducer: integer states, arcs labeled with a single
    input character (or epsilon) and a single output character (or epsilon).
    """

    __slots__ = ("n_states", "start", "finals", "arcs")

    def __init__(self):
        self.n_states = 1
        self.start = 0
        self.finals: set[int] = set()
        self.arcs: dict[int, list[tuple[str, str, int]]] = {}

    def add_state(self) -> int:
        self.n_states += 1
        return self.n_states - 1

    def add_arc(self, src: int, insym: str, outsym: str, dst: int) -> None:
        self.arcs.setdefault(src, []).append((insym, outsym, dst))

    def apply(self, text: str) -> set[str]:
        """All outputs over accepting paths for ``text``."""
        results: set[str] = set()
        # (state, pos) pairs on the current path with no input consumed in
        # between, to cut epsilon loops
        def walk(state, pos, out, eps_seen):
            if pos == len(text) and state in self.finals:
                results.add("".join(out))
            for insym, outsym, dst in self.arcs.get(state, ()):
                if insym == EPS:
                    if (dst, pos) in eps_seen:
                        continue
                    out.append(outsym)
                    walk(dst, pos, out, eps_seen | {(dst, pos)})
                    out.pop()
                elif pos < len(text) and text[pos] == insym:
                    out.append(outsym)
                    walk(dst, pos + 1, out, frozenset())
                    out.pop()

        walk(self.start, 0, [], frozenset([(self.start, 0)]))
        return results

    def invert(self) -> "Fst":
        inverted = Fst()
        inverted.n_states = self.n_states
        inverted.start = self.start
        inverted.finals = set(self.finals)
        for src, arcs in self.arcs.items():
            for insym, outsym, dst in arcs:
                inverted.add_arc(src, outsym, insym, dst)
        return inverted

    def compose(self, other: "Fst") -> "Fst":
        """Relation composition: self's outputs feed other's inputs."""
        result = Fst()
        state_map = {(self.start, other.start): 0}
        stack = [(self.start, other.start)]
        while stack:
            pair = stack.pop()
            src = state_map[pair]
            q1, q2 = pair
            if q1 in self.finals and q2 in other.finals:
                result.finals.add(src)

            def target(p):
                if p not in state_map:
                    state_map[p] = result.add_state()
                    stack.append(p)
                return state_map[p]

            for insym, outsym, d1 in self.arcs.get(q1, ()):
                if outsym == EPS:
                    result.add_arc(src, insym, EPS, target((d1, q2)))
                else:
                    for insym2, outsym2, d2 in other.arcs.get(q2, ()):
                        if insym2 == outsym:
                            result.add_arc(src, insym, outsym2, target((d1, d2)))
            for insym2, outsym2, d2 in other.arcs.get(q2, ()):
                if insym2 == EPS:
                    result.add_arc(src, EPS, outsym2, target((q1, d2)))
        return result


def identity_fst(min_len: int = 0, alphabet=ALPHABET) -> Fst:
    fst = Fst()
    state = fst.start
    for _ in range(min_len):
        nxt = fst.add_state()
        for char in alphabet:
            fst.add_arc(state, char, char, nxt)
        state = nxt
    for char in alphabet:
        fst.add_arc(state, char, char, state)
    fst.finals.add(state)
    return fst


def lexicon_fst(words) -> Fst:
    """Identity acceptor over a finite set of words (a trie)."""
    fst = Fst()
    for word in sorted(words):
        state = fst.start
        for char in word:
            nxt = None
            for insym, _, dst in fst.arcs.get(state, ()):
                if insym == char:
                    nxt = dst
                    break
            if nxt is None:
                nxt = fst.add_state()
                fst.add_arc(state, char, char, nxt)
            state = nxt
        fst.finals.add(state)
    return fst


def _emit_chain(fst: Fst, src: int, material: str) -> int:
    """Append an epsilon-input chain writing ``material``; returns its end."""
    state = src
    for char in material:
        nxt = fst.add_state()
        fst.add_arc(state, EPS, char, nxt)
        state = nxt
    return state


def prefix_fst(material: str) -> Fst:
    fst = Fst()
    state = _emit_chain(fst, fst.start, material)
    for char in ALPHABET:
        fst.add_arc(state, char, char, state)
    fst.finals.add(state)
    return fst


def suffix_fst(material: str) -> Fst:
    fst = Fst()
    for char in ALPHABET:
        fst.add_arc(fst.start, char, char, fst.start)
    end = _emit_chain(fst, fst.start, material)
    fst.finals.add(end)
    return fst


def infix_fst(material: str) -> Fst:
    """Insert ``material`` after the maximal initial consonant cluster, i.e.
    immediately before the first vowel. Empty onsets prepend; vowel-free
    stems are rejected."""
    fst = Fst()
    for char in CONSONANTS:
        fst.add_arc(fst.start, char, char, fst.start)
    inserted = _emit_chain(fst, fst.start, material)
    body = fst.add_state()
    for vowel in VOWELS:
        fst.add_arc(inserted, vowel, vowel, body)
    for char in ALPHABET:
        fst.add_arc(body, char, char, body)
    fst.finals.add(body)
    return fst


def redup_cv_fst() -> Fst:
    """Copy the initial (C)V syllable: basa -> babasa, aral -> aaral."""
    fst = Fst()
    body = fst.add_state()
    for char in ALPHABET:
        fst.add_arc(body, char, char, body)
    fst.finals.add(body)
    for vowel in VOWELS:
        seen_v = fst.add_state()
        fst.add_arc(fst.start, vowel, vowel, seen_v)
        fst.add_arc(seen_v, EPS, vowel, body)
    for cons in CONSONANTS:
        seen_c = fst.add_state()
        fst.add_arc(fst.start, cons, cons, seen_c)
        for vowel in VOWELS:
            seen_cv = fst.add_state()
            fst.add_arc(seen_c, vowel, vowel, seen_cv)
            mid = fst.add_state()
            fst.add_arc(seen_cv, EPS, cons, mid)
            fst.add_arc(mid, EPS, vowel, body)
    return fst


@dataclass(frozen=True)
class MorphRule:
    name: str
    kind: str  # prefix | suffix | infix | redup
    material: str  # affix characters; "CV" for reduplication
    emit: FeatPairs = ()
    applies_to: str | None = None

    def build_fst(self) -> Fst:
        if self.kind == "prefix":
            return prefix_fst(self.material)
        if self.kind == "suffix":
            return suffix_fst(self.material)
        if self.kind == "infix":
            return infix_fst(self.material)
        return redup_cv_fst()


@dataclass(frozen=True)
class RuleSet:
    rules: tuple[MorphRule, ...]
    compositions: tuple[tuple[str, str], ...] = ()
    lexicon: frozenset = frozenset()
    version_tag: str = ""

    def rule_index(self, name: str) -> int:
        for i, rule in enumerate(self.rules):
            if rule.name == name:
                return i
        raise KeyError(name)


@dataclass(frozen=True)
class Analysis:
    lemma: str
    feats: FeatPairs = ()
    rule_trace: tuple[str, ...] = ()


@dataclass(frozen=True)
class _Component:
    trace: tuple[str, ...]
    feats: FeatPairs
    gates: tuple[str | None, ...]
    forward: Fst = field(compare=False)
    inverse: Fst = field(compare=False)


@dataclass(frozen=True)
class Transducer:
    ruleset: RuleSet
    components: tuple[_Component, ...] = field(compare=False)

    def traces(self):
        return [component.trace for component in self.components]


_RULE_KINDS = {"PREFIX": "prefix", "SUFFIX": "suffix", "INFIX": "infix", "REDUP": "redup"}


def parse_ruleset(text: str) -> RuleSet:
    rules: list[MorphRule] = []
    compositions: list[tuple[str, str]] = []
    lexicon: set[str] = set()
    version = ""
    names = set()
    for line_no, raw in enumerate(text.split("\n"), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        name = None
        if parts[0].endswith(":"):
            name = parts[0][:-1]
            parts = parts[1:]
            if not parts:
                raise RuleError("rule name without a rule", line_no)
        keyword = parts[0].upper()
        if keyword == "VERSION":
            if len(parts) != 2:
                raise RuleError("VERSION takes one value", line_no)
            version = parts[1]
            continue
        if keyword == "STEM":
            if len(parts) < 2:
                raise RuleError("STEM takes at least one lemma", line_no)
            lexicon.update(word.lower() for word in parts[1:])
            continue
        if keyword == "COMPOSE":
            if len(parts) != 3:
                raise RuleError("COMPOSE takes exactly two rule names", line_no)
            compositions.append((parts[1], parts[2]))
            continue
        if keyword not in _RULE_KINDS:
            raise RuleError(f"unknown directive {parts[0]!r}", line_no)
        kind = _RULE_KINDS[keyword]
        rest = parts[1:]
        if not rest:
            raise RuleError(f"{keyword} needs a pattern argument", line_no)
        material = rest.pop(0)
        if kind == "redup":
            if material.upper() != "CV":
                raise RuleError(f"unsupported reduplication pattern {material!r}", line_no)
            material = "CV"
        else:
            material = material.lower()
            if not material or any(c not in ALPHABET for c in material):
                raise RuleError(f"affix {material!r} has non-alphabet characters", line_no)
        if kind == "infix":
            if not rest or rest[0].upper() != "AFTER_ONSET":
                raise RuleError("INFIX requires the AFTER_ONSET placement", line_no)
            rest.pop(0)
        emit: list[tuple[str, str]] = []
        applies_to = None
        while rest:
            clause = rest.pop(0).upper()
            if clause == "EMIT":
                while rest and "=" in rest[0] and rest[0].upper() not in ("POS",):
                    key, _, value = rest.pop(0).partition("=")
                    if not key or not value:
                        raise RuleError("EMIT expects Key=Value pairs", line_no)
                    emit.append((key, value))
                if not emit:
                    raise RuleError("EMIT expects Key=Value pairs", line_no)
            elif clause == "POS":
                if not rest:
                    raise RuleError("POS expects a UD tag", line_no)
                applies_to = rest.pop(0)
                if applies_to not in UPOS_TAGS:
                    raise RuleError(f"{applies_to!r} is not a UD tag", line_no)
            else:
                raise RuleError(f"unexpected token {clause!r}", line_no)
        if name is None:
            name = f"{kind}_{material.lower()}"
        if name in names:
            raise RuleError(f"duplicate rule name {name!r}", line_no)
        names.add(name)
        rules.append(
            MorphRule(
                name=name,
                kind=kind,
                material=material,
                emit=canonical_feats(_dedupe(emit)),
                applies_to=applies_to,
            )
        )
    for a, b in compositions:
        for ref in (a, b):
            if ref not in names:
                raise RuleError(f"COMPOSE references unknown rule {ref!r}")
    return RuleSet(
        rules=tuple(rules),
        compositions=tuple(compositions),
        lexicon=frozenset(lexicon),
        version_tag=version,
    )


def _dedupe(pairs):
    merged: dict[str, str] = {}
    for key, value in pairs:
        merged[key] = value
    return tuple(merged.items())


def _licensed_sequences(ruleset: RuleSet) -> list[tuple[str, ...]]:
    """Every directed path in the composition graph, plus singletons, plus
    the empty sequence when a lexicon makes bare stems meaningful."""
    edges: dict[str, list[str]] = {}
    for a, b in ruleset.compositions:
        edges.setdefault(a, []).append(b)

    # cycle check (self-loops included): unbounded application is an error
    state: dict[str, int] = {}

    def visit(node):
        state[node] = 1
        for nxt in edges.get(node, ()):
            if state.get(nxt) == 1:
                raise RuleError(
                    f"composition cycle through {node!r} and {nxt!r}: "
                    "rules would apply unboundedly"
                )
            if state.get(nxt, 0) == 0:
                visit(nxt)
        state[node] = 2

    for name in [rule.name for rule in ruleset.rules]:
        if state.get(name, 0) == 0:
            visit(name)

    sequences: list[tuple[str, ...]] = []
    if ruleset.lexicon:
        sequences.append(())

    def extend(path):
        if len(sequences) > _MAX_SEQUENCES:
            raise RuleError("too many licensed rule sequences")
        sequences.append(tuple(path))
        for nxt in edges.get(path[-1], ()):
            extend(path + [nxt])

    for rule in ruleset.rules:
        extend([rule.name])
    return sequences


def compile_ruleset(ruleset: RuleSet) -> Transducer:
    by_name = {rule.name: rule for rule in ruleset.rules}
    rule_fsts = {rule.name: rule.build_fst() for rule in ruleset.rules}
    if ruleset.lexicon:
        stem = lexicon_fst(ruleset.lexicon)
    else:
        stem = identity_fst(min_len=2)
    components = []
    for trace in _licensed_sequences(ruleset):
        fst = stem
        feats: list[tuple[str, str]] = []
        gates = []
        for name in trace:
            fst = fst.compose(rule_fsts[name])
            feats.extend(by_name[name].emit)
            gates.append(by_name[name].applies_to)
        components.append(
            _Component(
                trace=trace,
                feats=canonical_feats(_dedupe(feats)),
                gates=tuple(gates),
                forward=fst,
                inverse=fst.invert(),
            )
        )
    return Transducer(ruleset=ruleset, components=tuple(components))


def compile_rules(ruleset_text: str) -> Transducer:
    """Parse and compile a rule file into an analysis/generation transducer."""
    return compile_ruleset(parse_ruleset(ruleset_text))


def generate(transducer: Transducer, lemma: str, trace) -> set[str]:
    """Surface forms of ``lemma`` under the given rule sequence."""
    trace = tuple(trace)
    for component in transducer.components:
        if component.trace == trace:
            return component.forward.apply(lemma.lower())
    raise UdkitError(f"rule sequence {trace} is not licensed")


def analyze(word: str, transducer: Transducer) -> list[Analysis]:
    """All analyses whose generation reproduces ``word``; empty when none."""
    lowered = word.lower()
    ruleset = transducer.ruleset
    seen = set()
    scored = []
    for component in transducer.components:
        order = tuple(ruleset.rule_index(name) for name in component.trace)
        for lemma in component.inverse.apply(lowered):
            key = (lemma, component.trace)
            if key in seen:
                continue
            seen.add(key)
            scored.append(
                (order, lemma, Analysis(lemma=lemma, feats=component.feats,
                                        rule_trace=component.trace))
            )
    scored.sort(key=lambda item: (item[0], item[1]))
    return [analysis for _, _, analysis in scored]


def disambiguate(candidates, word: str) -> Analysis:
    """Pick the candidate with the longest rule trace; break ties by rule
    declaration order. With no candidates, fall back to the lowercased word
    with no features."""
    candidates = list(candidates)
    if not candidates:
        return Analysis(lemma=word.lower(), feats=(), rule_trace=())
    return max(
        enumerate(candidates),
        key=lambda pair: (len(pair[1].rule_trace), -pair[0]),
    )[1]


def annotate_sentence(
    sentence: AnnotatedSentence, transducer: Transducer, gate_by_upos: bool = False
) -> AnnotatedSentence:
    """Fill lemma and feats for every token via analyze + disambiguate."""
    by_name = {rule.name: rule for rule in transducer.ruleset.rules}
    tokens = []
    for tok in sentence.tokens:
        candidates = analyze(tok.form, transducer)
        if gate_by_upos:
            candidates = [
                c for c in candidates
                if all(
                    by_name[name].applies_to in (None, tok.upos)
                    for name in c.rule_trace
                )
            ]
        analysis = disambiguate(candidates, tok.form)
        tokens.append(replace(tok, lemma=analysis.lemma, feats=analysis.feats))
    return replace(sentence, tokens=tuple(tokens))


def annotate_treebank(
    tb: Treebank, transducer: Transducer, gate_by_upos: bool = False
) -> Treebank:
    return replace(
        tb,
        sentences=tuple(
            annotate_sentence(s, transducer, gate_by_upos) for s in tb.sentences
        ),
    )


_FST_HEADER = "# udkit transducer v1"


def save_transducer(transducer: Transducer, path) -> None:
    """Versioned text state-transition listing, one section per licensed rule
    sequence. Epsilon labels are written as ``@0@``."""
    ruleset = transducer.ruleset
    lines = [_FST_HEADER, f"VERSION\t{ruleset.version_tag}"]
    if ruleset.lexicon:
        lines.append("LEXICON\t" + " ".join(sorted(ruleset.lexicon)))
    for rule in ruleset.rules:
        emit = ",".join(f"{k}={v}" for k, v in rule.emit) or "-"
        lines.append(
            f"RULE\t{rule.name}\t{rule.kind}\t{rule.material}\t{emit}"
            f"\t{rule.applies_to or '-'}"
        )
    for a, b in ruleset.compositions:
        lines.append(f"COMPOSE\t{a}\t{b}")
    for component in transducer.components:
        trace = "+".join(component.trace) if component.trace else "-"
        fst = component.forward
        finals = " ".join(str(s) for s in sorted(fst.finals))
        lines.append(f"COMPONENT\t{trace}\t{fst.n_states}\t{fst.start}\t{finals}")
        for src in sorted(fst.arcs):
            for insym, outsym, dst in fst.arcs[src]:
                lines.append(
                    f"ARC\t{src}\t{insym or '@0@'}\t{outsym or '@0@'}\t{dst}"
                )
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("\n".join(lines) + "\n")


def load_transducer(path) -> Transducer:
    with open(path, encoding="utf-8") as handle:
        lines = handle.read().split("\n")
    if not lines or lines[0] != _FST_HEADER:
        raise UdkitError(f"{path}: not a udkit transducer file")
    version = ""
    lexicon: set[str] = set()
    rules: list[MorphRule] = []
    compositions: list[tuple[str, str]] = []
    components = []
    current = None  # (trace, fst)

    def close_component():
        if current is not None:
            trace, fst = current
            by_name = {rule.name: rule for rule in rules}
            feats = []
            gates = []
            for name in trace:
                feats.extend(by_name[name].emit)
                gates.append(by_name[name].applies_to)
            components.append(
                _Component(
                    trace=trace,
                    feats=canonical_feats(_dedupe(feats)),
                    gates=tuple(gates),
                    forward=fst,
                    inverse=fst.invert(),
                )
            )

    for line in lines[1:]:
        if not line:
            continue
        parts = line.split("\t")
        kind = parts[0]
        if kind == "VERSION":
            version = parts[1]
        elif kind == "LEXICON":
            lexicon.update(parts[1].split())
        elif kind == "RULE":
            _, name, rule_kind, material, emit, gate = parts
            feats = ()
            if emit != "-":
                feats = canonical_feats(
                    tuple(tuple(pair.split("=", 1)) for pair in emit.split(","))
                )
            rules.append(
                MorphRule(
                    name=name,
                    kind=rule_kind,
                    material=material,
                    emit=feats,
                    applies_to=None if gate == "-" else gate,
                )
            )
        elif kind == "COMPOSE":
            compositions.append((parts[1], parts[2]))
        elif kind == "COMPONENT":
            close_component()
            trace = tuple(parts[1].split("+")) if parts[1] != "-" else ()
            fst = Fst()
            fst.n_states = int(parts[2])
            fst.start = int(parts[3])
            fst.finals = set(int(s) for s in parts[4].split())
            current = (trace, fst)
        elif kind == "ARC":
            _, src, insym, outsym, dst = parts
            current[1].add_arc(
                int(src),
                "" if insym == "@0@" else insym,
                "" if outsym == "@0@" else outsym,
                int(dst),
            )
        else:
            raise UdkitError(f"{path}: unknown record {kind!r}")
    close_component()
    ruleset = RuleSet(
        rules=tuple(rules),
        compositions=tuple(compositions),
        lexicon=frozenset(lexicon),
        version_tag=version,
    )
    return Transducer(ruleset=ruleset, components=tuple(components))
