"""Dependency label prediction from exactly two categorical features: the
dependent's UPOS and its head's UPOS (the virtual root is a distinct marker).

The model is a bagged forest of tiny decision trees: each tree is grown on a
bootstrap sample with greedy Gini splits, sampling one of the two features
per split. Ties everywhere (leaf majorities, votes) break by global label
frequency, then alphabetically, so training and prediction are deterministic
for a fixed seed.
"""

from __future__ import annotations

import random
from collections import Counter
from dataclasses import dataclass

from udkit.errors import UdkitError
from udkit.treebank import ROOT_MARKER, Treebank

_FEATURES = ("dep", "head")


@dataclass(frozen=True)
class LabelExample:
    dep_upos: str
    head_upos: str
    label: str

    def feature(self, index: int) -> str:
        return self.dep_upos if index == 0 else self.head_upos


@dataclass
class _Node:
    majority: str
    feature: int | None = None  # None marks a leaf
    branches: dict | None = None

    def predict(self, example_features) -> str:
        if self.feature is None:
            return self.majority
        child = self.branches.get(example_features[self.feature])
        if child is None:
            return self.majority
        return child.predict(example_features)


@dataclass
class Labeler:
    trees: list
    fallback_label: str
    global_counts: Counter


def extract_examples(tb: Treebank) -> list[LabelExample]:
    """One example per token; root-headed tokens pair with the ROOT marker."""
    examples = []
    for index, sentence in enumerate(tb.sentences, 1):
        by_id = {tok.id: tok for tok in sentence.tokens}
        for tok in sentence.tokens:
            if tok.head is None:
                raise UdkitError(f"sentence {index}: token {tok.id} has no head")
            dep_upos = tok.upos or "X"
            if tok.head == 0:
                examples.append(
                    LabelExample(dep_upos=dep_upos, head_upos=ROOT_MARKER,
                                 label=tok.deprel or "root")
                )
            else:
                head_upos = by_id[tok.head].upos or "X"
                examples.append(
                    LabelExample(dep_upos=dep_upos, head_upos=head_upos,
                                 label=tok.deprel or "dep")
                )
    return examples


def _majority(labels, global_counts) -> str:
    counts = Counter(labels)
    return min(
        counts,
        key=lambda label: (-counts[label], -global_counts[label], label),
    )


def _gini(labels) -> float:
    counts = Counter(labels)
    total = len(labels)
    return 1.0 - sum((c / total) ** 2 for c in counts.values())


def _gini_gain(examples, feature: int) -> float:
    labels = [e.label for e in examples]
    parent = _gini(labels)
    groups: dict[str, list] = {}
    for example in examples:
        groups.setdefault(example.feature(feature), []).append(example.label)
    weighted = sum(
        len(group) / len(examples) * _gini(group) for group in groups.values()
    )
    return parent - weighted


def _grow(examples, available, rng, feature_subsample, global_counts) -> _Node:
    labels = [e.label for e in examples]
    majority = _majority(labels, global_counts)
    if len(set(labels)) == 1 or not available:
        return _Node(majority=majority)
    if feature_subsample and len(available) > 1:
        feature = available[rng.randrange(len(available))]
    else:
        feature = max(available, key=lambda f: (_gini_gain(examples, f), -f))
    if _gini_gain(examples, feature) <= 0.0:
        return _Node(majority=majority)
    remaining = tuple(f for f in available if f != feature)
    branches = {}
    groups: dict[str, list] = {}
    for example in examples:
        groups.setdefault(example.feature(feature), []).append(example)
    for value in sorted(groups):
        branches[value] = _grow(
            groups[value], remaining, rng, feature_subsample, global_counts
        )
    return _Node(majority=majority, feature=feature, branches=branches)


def train_labeler(
    examples,
    n_trees: int = 50,
    seed: int = 0,
    bootstrap: bool = True,
    feature_subsample: bool = True,
) -> Labeler:
    """Grow ``n_trees`` trees on seeded bootstrap samples. The ``bootstrap``
    and ``feature_subsample`` switches exist so tests can reduce the forest
    to a plain conditional-majority table."""
    examples = list(examples)
    if not examples:
        raise UdkitError("labeler training needs at least one example")
    if n_trees < 1:
        raise UdkitError("labeler needs at least one tree")
    rng = random.Random(seed)
    global_counts = Counter(e.label for e in examples)
    fallback = min(
        global_counts, key=lambda label: (-global_counts[label], label)
    )
    trees = []
    for _ in range(n_trees):
        if bootstrap:
            sample = [examples[rng.randrange(len(examples))] for _ in examples]
        else:
            sample = examples
        trees.append(
            _grow(sample, (0, 1), rng, feature_subsample, global_counts)
        )
    return Labeler(trees=trees, fallback_label=fallback, global_counts=global_counts)


def predict_label(labeler: Labeler, dep_upos: str, head_upos: str) -> str:
    """Majority vote across trees; ties break by global label frequency then
    alphabetically."""
    features = (dep_upos, head_upos)
    votes = Counter(tree.predict(features) for tree in labeler.trees)
    return min(
        votes,
        key=lambda label: (-votes[label], -labeler.global_counts[label], label),
    )


_MODEL_HEADER = "# udkit labeler v1"


def save_labeler(labeler: Labeler, path) -> None:
    """Versioned text listing: per-node lines of (tree, path, split feature /
    leaf label)."""
    lines = [_MODEL_HEADER, f"FALLBACK\t{labeler.fallback_label}"]
    for label in sorted(labeler.global_counts):
        lines.append(f"GLOBAL\t{label}\t{labeler.global_counts[label]}")

    def emit(index, node, path):
        if node.feature is None:
            lines.append(f"NODE\t{index}\t{path}\tLEAF\t{node.majority}")
            return
        lines.append(
            f"NODE\t{index}\t{path}\tSPLIT\t{_FEATURES[node.feature]}\t{node.majority}"
        )
        for value, child in sorted(node.branches.items()):
            emit(index, child, f"{path}/{value}")

    for index, tree in enumerate(labeler.trees):
        emit(index, tree, "")
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("\n".join(lines) + "\n")


def load_labeler(path) -> Labeler:
    with open(path, encoding="utf-8") as handle:
        lines = handle.read().split("\n")
    if not lines or lines[0] != _MODEL_HEADER:
        raise UdkitError(f"{path}: not a udkit labeler file")
    fallback = None
    global_counts: Counter = Counter()
    nodes: dict[int, dict[str, _Node]] = {}
    for line in lines[1:]:
        if not line:
            continue
        parts = line.split("\t")
        if parts[0] == "FALLBACK":
            fallback = parts[1]
        elif parts[0] == "GLOBAL":
            global_counts[parts[1]] = int(parts[2])
        elif parts[0] == "NODE":
            index, node_path = int(parts[1]), parts[2]
            if parts[3] == "LEAF":
                node = _Node(majority=parts[4])
            else:
                node = _Node(
                    majority=parts[5],
                    feature=_FEATURES.index(parts[4]),
                    branches={},
                )
            nodes.setdefault(index, {})[node_path] = node
            if node_path:
                parent_path, _, value = node_path.rpartition("/")
                nodes[index][parent_path].branches[value] = node
        else:
            raise UdkitError(f"{path}: unknown record {parts[0]!r}")
    trees = [nodes[i][""] for i in sorted(nodes)]
    return Labeler(trees=trees, fallback_label=fallback, global_counts=global_counts)
