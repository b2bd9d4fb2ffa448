"""Nested one-example-per-skeleton few-shot splits and seen/unseen eval sets."""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Sequence

from compgen.corpus import Example
from compgen.mr_tree import StructureSignature, extract_signature

__all__ = [
    "FewShotSplits",
    "EvalSplits",
    "SplitError",
    "SizeExceedsSignatures",
    "CoverageInfeasible",
    "group_by_signature",
    "construct_splits",
    "derive_eval_splits",
    "DEFAULT_SIZES",
]

DEFAULT_SIZES = (250, 500, 750, 1000)


class SplitError(ValueError):
    pass


class SizeExceedsSignatures(SplitError):
    def __init__(self, size: int, available: int):
        self.size, self.available = size, available
        super().__init__(f"split size {size} exceeds {available} distinct signatures")


class CoverageInfeasible(SplitError):
    def __init__(self, labels: Sequence[str], size: int):
        self.labels = sorted(labels)
        super().__init__(f"cannot cover labels {self.labels} within {size} signatures")


@dataclass
class FewShotSplits:
    splits: list[tuple[int, list[str]]]
    seed: int
    signature_index: dict[StructureSignature, list[str]]
    signatures: dict[int, list[StructureSignature]] = field(default_factory=dict)

    def ids(self, size: int) -> list[str]:
        for s, ids in self.splits:
            if s == size:
                return ids
        raise KeyError(size)

    @property
    def smallest(self) -> list[str]:
        return self.splits[0][1]

    @property
    def largest(self) -> list[str]:
        return self.splits[-1][1]

    def unlabeled_ids(self, pool: Sequence[Example]) -> list[str]:
        """Pool examples that are not in any split, in pool order."""
        used = set(self.largest)
        return [ex.id for ex in pool if ex.id not in used]


@dataclass
class EvalSplits:
    seen: list[str]
    unseen: list[str]
    dropped: list[str] = field(default_factory=list)


def group_by_signature(pool: Sequence[Example]) -> dict[StructureSignature, list[str]]:
    """Signature -> example ids, both in first-occurrence order."""
    index: dict[StructureSignature, list[str]] = {}
    for ex in pool:
        index.setdefault(extract_signature(ex.mr), []).append(ex.id)
    return index


def _greedy_cover(
    candidates: list[StructureSignature], labels_of: dict, budget: int
) -> list[StructureSignature]:
    uncovered = set().union(*(labels_of[s] for s in candidates)) if candidates else set()
    chosen: list[StructureSignature] = []
    while uncovered:
        # candidates are pre-shuffled, so max() breaks gain ties by seeded order
        best = max(candidates, key=lambda s: len(labels_of[s] & uncovered))
        if not labels_of[best] & uncovered:  # pragma: no cover - cannot happen
            break
        if len(chosen) == budget:
            raise CoverageInfeasible(uncovered, budget)
        chosen.append(best)
        uncovered -= labels_of[best]
        candidates = [s for s in candidates if s != best]
    return chosen


def construct_splits(pool: Sequence[Example], sizes: Sequence[int] = DEFAULT_SIZES, seed: int = 0) -> FewShotSplits:
    """Nested splits, one example per distinct signature.

    The smallest split first receives a greedy set cover of every label in the
    pool; its remaining slots and every larger split are filled by seeded
    uniform sampling over unused signatures.  Each chosen signature is
    represented by a seeded-random member of its group.
    """
    sizes = list(sizes)
    if not sizes:
        raise SplitError("no split sizes given")
    if any(b <= a for a, b in zip(sizes, sizes[1:])) or sizes[0] <= 0:
        raise SplitError(f"sizes must be positive and strictly ascending: {sizes}")
    index = group_by_signature(pool)
    if sizes[-1] > len(index):
        raise SizeExceedsSignatures(sizes[-1], len(index))

    rng = random.Random(seed)
    order = list(index)
    rng.shuffle(order)
    labels_of = {s: set(s.labels()) for s in order}

    chosen = _greedy_cover(order, labels_of, sizes[0])
    taken = set(chosen)
    remaining = [s for s in order if s not in taken]
    rng.shuffle(remaining)
    chosen += remaining[: sizes[-1] - len(chosen)]

    reps = [rng.choice(index[s]) for s in chosen]
    splits = [(size, reps[:size]) for size in sizes]
    signatures = {size: chosen[:size] for size in sizes}
    return FewShotSplits(splits=splits, seed=seed, signature_index=index, signatures=signatures)


def derive_eval_splits(
    pool: Sequence[Example], splits: FewShotSplits, eval_candidates: Sequence[Example]
) -> EvalSplits:
    """Route candidates to ``seen`` (skeleton in the smallest split) or ``unseen``
    (skeleton absent from the largest split); the rest are dropped."""
    by_id = {ex.id: ex for ex in pool}
    small = {extract_signature(by_id[i].mr) for i in splits.smallest}
    large = {extract_signature(by_id[i].mr) for i in splits.largest}
    out = EvalSplits([], [])
    for ex in eval_candidates:
        sig = extract_signature(ex.mr)
        if sig in small:
            out.seen.append(ex.id)
        elif sig not in large:
            out.unseen.append(ex.id)
        else:
            out.dropped.append(ex.id)
    return out
