"""Word alignment and cross-lingual annotation projection.

An IBM-Model-1 lexical translation table (with a NULL source word) is trained
by expectation maximization on parallel text; per-word alignment posteriors
then drive three projections onto target sentences:

- POS tags: per target token, the tag with the highest sum of source tagger
  confidences across all aligned source words wins.
- Dependency edges: each source arc votes for the target arc between the
  aligned images of its endpoints with weight ``p_head * p_dep``; the
  resulting weighted digraph is decoded with the Chu-Liu/Edmonds maximum
  spanning arborescence algorithm.
- Sentence selection: sentences are ranked by alignment coverage averaged
  over source languages.

All tie-breaking is leftmost/alphabetical so runs are reproducible.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field

from udkit.errors import UdkitError

NULL_WORD = "<NULL>"

#: Weight of the fallback root arcs added when projection leaves target
#: tokens with no incoming candidate, guaranteeing decodability.
EPSILON_WEIGHT = 1e-6

#: Alignment posteriors below this floor are discarded as noise.
LINK_FLOOR = 0.1


@dataclass(frozen=True)
class ParallelPair:
    source_tokens: tuple
    target_tokens: tuple
    source_lang: str = ""

    def __post_init__(self):
        if not self.source_tokens or not self.target_tokens:
            raise UdkitError("parallel pairs must be non-empty on both sides")


@dataclass(frozen=True)
class AlignmentLink:
    src_index: int
    tgt_index: int
    prob: float


@dataclass(frozen=True)
class SourceAnnotation:
    """Source-side annotations: ``tags[i] = (upos, confidence)`` and/or
    ``tree[i] = (head, deprel)`` with head 0 for the root."""

    tags: tuple | None = None
    tree: tuple | None = None


@dataclass
class LexTable:
    """Translation probabilities t(target | source), NULL included."""

    probs: dict

    def prob(self, source: str, target: str) -> float:
        return self.probs.get(source, {}).get(target, 0.0)


def train_aligner(corpus, iters: int) -> LexTable:
    """EM training: uniform initialization over co-occurring pairs, then
    ``iters`` rounds of posterior counting and renormalization."""
    if iters < 1:
        raise UdkitError("aligner training needs at least one iteration")
    corpus = list(corpus)
    if not corpus:
        raise UdkitError("aligner training needs a non-empty corpus")

    cooc: dict[str, dict[str, None]] = defaultdict(dict)
    for pair in corpus:
        for src in (NULL_WORD, *pair.source_tokens):
            for tgt in pair.target_tokens:
                cooc[src][tgt] = None
    probs = {
        src: {tgt: 1.0 / len(targets) for tgt in targets}
        for src, targets in cooc.items()
    }

    for _ in range(iters):
        counts: dict[str, dict[str, float]] = defaultdict(lambda: defaultdict(float))
        for pair in corpus:
            sources = (NULL_WORD, *pair.source_tokens)
            for tgt in pair.target_tokens:
                denominator = sum(probs[src].get(tgt, 0.0) for src in sources)
                if denominator == 0.0:
                    continue
                for src in sources:
                    responsibility = probs[src].get(tgt, 0.0) / denominator
                    if responsibility:
                        counts[src][tgt] += responsibility
        probs = {
            src: {tgt: count / sum(tgt_counts.values())
                  for tgt, count in tgt_counts.items()}
            for src, tgt_counts in counts.items()
        }
    return LexTable(probs=probs)


def corpus_log_likelihood(corpus, table: LexTable) -> float:
    """Model-1 log-likelihood of the corpus, including the uniform alignment
    prior 1/(l+1) per target token."""
    total = 0.0
    for pair in corpus:
        sources = (NULL_WORD, *pair.source_tokens)
        for tgt in pair.target_tokens:
            mass = sum(table.prob(src, tgt) for src in sources)
            if mass <= 0.0:
                return float("-inf")
            total += math.log(mass / len(sources))
    return total


def align(pair: ParallelPair, table: LexTable, floor: float = LINK_FLOOR):
    """Posterior-argmax links. For each target token the posterior over
    {NULL} + source positions is computed; a link is emitted when a source
    position wins (NULL wins only on a strictly higher score) and its
    posterior clears the floor. Ties between positions go leftmost."""
    links = []
    for j, tgt in enumerate(pair.target_tokens):
        scores = [table.prob(src, tgt) for src in pair.source_tokens]
        null_score = table.prob(NULL_WORD, tgt)
        total = sum(scores) + null_score
        if total <= 0.0:
            continue
        best_i = 0
        for i, score in enumerate(scores):
            if score > scores[best_i]:
                best_i = i
        if scores[best_i] <= 0.0 or null_score > scores[best_i]:
            continue
        posterior = scores[best_i] / total
        if posterior >= floor:
            links.append(AlignmentLink(src_index=best_i, tgt_index=j, prob=posterior))
    return links


def _check_same_target(groups):
    targets = {tuple(pair.target_tokens) for pair, *_ in groups}
    if len(targets) > 1:
        raise UdkitError("projection groups must share the same target sentence")


def project_pos(groups):
    """Sum tagger confidences per candidate tag over all links from all
    source languages; the max-sum tag wins, alphabetical on ties. Tokens
    with no links stay unset."""
    if not groups:
        return []
    _check_same_target(groups)
    n = len(groups[0][0].target_tokens)
    sums: list[dict[str, float]] = [defaultdict(float) for _ in range(n)]
    for pair, links, tags in groups:
        for link in links:
            entry = tags[link.src_index] if tags else None
            if entry is None:
                continue
            tag, confidence = entry
            sums[link.tgt_index][tag] += confidence
    result = []
    for candidates in sums:
        if not candidates:
            result.append(None)
            continue
        result.append(sorted(candidates.items(), key=lambda kv: (-kv[1], kv[0]))[0][0])
    return result


@dataclass
class WeightedDigraph:
    """Candidate-arc graph over a target sentence; node 0 is the virtual
    root, dependents are 1..n. Repeated ``add`` calls accumulate weight."""

    n: int
    arcs: dict = field(default_factory=dict)

    def add(self, head: int, dep: int, weight: float) -> None:
        if not 0 <= head <= self.n:
            raise UdkitError(f"head {head} out of range 0..{self.n}")
        if not 1 <= dep <= self.n:
            raise UdkitError(f"dependent {dep} out of range 1..{self.n}")
        if head == dep:
            raise UdkitError(f"self-arc at node {head}")
        if weight < 0:
            raise UdkitError("arc weights must be non-negative")
        self.arcs[(head, dep)] = self.arcs.get((head, dep), 0.0) + weight


def build_edge_graph(groups) -> WeightedDigraph:
    """Project source arcs through alignment links: an arc (h, d) with links
    h->h' (p1) and d->d' (p2) adds p1*p2 to target arc (h', d'); the source
    root's aligned token collects weight on the root arc. Weights sum across
    source languages."""
    if not groups:
        raise UdkitError("no projection groups")
    _check_same_target(groups)
    n = len(groups[0][0].target_tokens)
    graph = WeightedDigraph(n=n)
    for pair, links, tree in groups:
        if tree is None:
            continue
        by_src: dict[int, list[AlignmentLink]] = defaultdict(list)
        for link in links:
            by_src[link.src_index].append(link)
        for dep_index, (head, _deprel) in enumerate(tree):
            if head == 0:
                for link in by_src.get(dep_index, ()):
                    graph.add(0, link.tgt_index + 1, link.prob)
                continue
            for head_link in by_src.get(head - 1, ()):
                for dep_link in by_src.get(dep_index, ()):
                    if head_link.tgt_index == dep_link.tgt_index:
                        continue
                    graph.add(
                        head_link.tgt_index + 1,
                        dep_link.tgt_index + 1,
                        head_link.prob * dep_link.prob,
                    )
    return graph


def decode_mst(graph: WeightedDigraph):
    """Maximum spanning arborescence rooted at 0 via Chu-Liu/Edmonds
    (greedy best-incoming, cycle contraction, score adjustment, expansion).
    Missing root arcs are augmented with a tiny epsilon weight so decoding
    always succeeds; ties go to the smallest head index."""
    n = graph.n
    if n == 0:
        raise UdkitError("cannot decode an empty graph")
    arcs = dict(graph.arcs)
    for dep in range(1, n + 1):
        arcs.setdefault((0, dep), EPSILON_WEIGHT)
    chosen = _chu_liu_edmonds(set(range(n + 1)), 0, arcs)
    return sorted(chosen)


def _chu_liu_edmonds(nodes, root, arcs):
    incoming: dict[int, list] = defaultdict(list)
    for (head, dep), weight in arcs.items():
        if head in nodes and dep in nodes and head != dep:
            incoming[dep].append((head, weight))

    best: dict[int, int] = {}
    best_weight: dict[int, float] = {}
    for dep in sorted(nodes):
        if dep == root:
            continue
        options = incoming.get(dep)
        if not options:
            raise UdkitError(f"node {dep} has no incoming arcs")
        head, weight = min(options, key=lambda hw: (-hw[1], hw[0]))
        best[dep] = head
        best_weight[dep] = weight

    cycle = _greedy_cycle(best, root)
    if cycle is None:
        return {(head, dep) for dep, head in best.items()}

    contracted = max(nodes) + 1
    cycle_set = set(cycle)
    reduced: dict[tuple, float] = {}
    original: dict[tuple, tuple] = {}
    for (head, dep), weight in arcs.items():
        if head not in nodes or dep not in nodes or head == dep:
            continue
        new_head = contracted if head in cycle_set else head
        new_dep = contracted if dep in cycle_set else dep
        if new_head == new_dep:
            continue
        adjusted = weight - best_weight[dep] if new_dep == contracted else weight
        key = (new_head, new_dep)
        if key not in reduced or adjusted > reduced[key] or (
            adjusted == reduced[key] and (head, dep) < original[key]
        ):
            reduced[key] = adjusted
            original[key] = (head, dep)

    sub_nodes = (nodes - cycle_set) | {contracted}
    sub_result = _chu_liu_edmonds(sub_nodes, root, reduced)

    result = set()
    broken_dep = None
    for key in sub_result:
        head, dep = original[key]
        result.add((head, dep))
        if key[1] == contracted:
            broken_dep = dep
    for dep in cycle_set:
        if dep != broken_dep:
            result.add((best[dep], dep))
    return result


def _greedy_cycle(best, root):
    """A cycle in the best-incoming graph, or None."""
    state: dict[int, int] = {root: 2}
    for start in sorted(best):
        if state.get(start):
            continue
        path = []
        node = start
        while state.get(node, 0) == 0:
            state[node] = 1
            path.append(node)
            node = best[node]
        if state.get(node) == 1:
            return path[path.index(node):]
        for visited in path:
            state[visited] = 2
    return None


def arborescence_weight(graph: WeightedDigraph, arcs) -> float:
    total = 0.0
    for head, dep in arcs:
        total += graph.arcs.get((head, dep), EPSILON_WEIGHT)
    return total


def predict_labels_delex(arcs, target_upos, labeler):
    """Label decoded arcs with the delexicalized classifier; root arcs are
    labeled ``root`` directly."""
    from udkit.delex import predict_label

    labels = {}
    for head, dep in arcs:
        if head == 0:
            labels[(head, dep)] = "root"
            continue
        dep_upos = target_upos[dep - 1] or "X"
        head_upos = target_upos[head - 1] or "X"
        labels[(head, dep)] = predict_label(labeler, dep_upos, head_upos)
    return labels


def score_coverage(pairs_per_source: dict) -> float:
    """Mean over source languages of (target tokens with at least one link)
    divided by target length."""
    if not pairs_per_source:
        raise UdkitError("coverage needs at least one source language")
    coverages = []
    length = None
    for lang in sorted(pairs_per_source):
        pair, links = pairs_per_source[lang]
        if length is None:
            length = len(pair.target_tokens)
        elif length != len(pair.target_tokens):
            raise UdkitError("coverage groups must share the target sentence")
        covered = len({link.tgt_index for link in links})
        coverages.append(covered / length)
    return sum(coverages) / len(coverages)


def select_top_k(scored, k: int):
    """The k highest-scoring items, ties broken by original order; the
    selection is returned in original order."""
    if k < 0:
        raise UdkitError("k must be non-negative")
    ranked = sorted(range(len(scored)), key=lambda i: (-scored[i][1], i))
    keep = sorted(ranked[:k])
    return [scored[i][0] for i in keep]


def source_annotation_from_sentence(sentence) -> SourceAnnotation:
    """Read tags (+ confidences from a ``Conf=`` MISC entry, default 1.0)
    and the tree from a parsed CoNLL-U sentence."""
    tags = []
    tree = []
    for tok in sentence.tokens:
        if tok.upos is None:
            tags.append(None)
        else:
            confidence = 1.0
            if tok.misc:
                for item in tok.misc.split("|"):
                    if item.startswith("Conf="):
                        confidence = float(item[len("Conf="):])
            tags.append((tok.upos, confidence))
        tree.append((tok.head, tok.deprel))
    has_tree = all(head is not None for head, _ in tree) and tree
    return SourceAnnotation(
        tags=tuple(tags),
        tree=tuple(tree) if has_tree else None,
    )


def save_lex_table(table: LexTable, path) -> None:
    lines = ["# udkit lexical table v1"]
    for src in sorted(table.probs):
        for tgt in sorted(table.probs[src]):
            lines.append(f"{src}\t{tgt}\t{table.probs[src][tgt]!r}")
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("\n".join(lines) + "\n")


def load_lex_table(path) -> LexTable:
    with open(path, encoding="utf-8") as handle:
        lines = handle.read().split("\n")
    if not lines or lines[0] != "# udkit lexical table v1":
        raise UdkitError(f"{path}: not a udkit lexical table")
    probs: dict[str, dict[str, float]] = {}
    for line in lines[1:]:
        if not line:
            continue
        src, tgt, prob = line.split("\t")
        probs.setdefault(src, {})[tgt] = float(prob)
    return LexTable(probs=probs)
