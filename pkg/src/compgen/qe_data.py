"""Synthetic fine-tuning data for the pseudo-response quality estimator.

Each labeled example gives one positive ``(template text, reference)`` pair
and up to four negatives from each of six transformations: retrieving a
similar example's reference, pairing the input with itself, and swapping,
repeating or dropping phrases, and flipping digits in the reference.
"""
from __future__ import annotations

import itertools
import random
import re
from collections import Counter
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

from compgen.corpus import Example
from compgen.metrics import _bleu_from_stats, tokenize
from compgen.mr_tree import MrNode, MrParseError, NodeKind, parse_mr

__all__ = [
    "RatedPair",
    "QeDataset",
    "QeDataError",
    "TooFewPhrases",
    "NoDigits",
    "ORIGINS",
    "make_positive",
    "similar_negatives",
    "self_pair_negative",
    "phrases",
    "phrase_perturbation",
    "flip_digits",
    "assemble_dataset",
    "BleuIndex",
    "cap_violations",
]

ORIGINS = ("positive", "similar", "self_pair", "swap", "repeat", "drop", "flip_digits")
NEGATIVE_ORIGINS = ORIGINS[1:]
PER_TRANSFORM_CAP = 4
VALIDATION_FRACTION = 0.10

_PUNCT = ",.;:!?"
_SUBTOKEN_RE = re.compile(r"[^\s,.;:!?]+(?:[.,:][^\s,.;:!?]+)*|[,.;:!?]")
_SPACE_BEFORE_PUNCT_RE = re.compile(r"\s+([,.;:!?])")


class QeDataError(ValueError):
    pass


class TooFewPhrases(QeDataError):
    pass


class NoDigits(QeDataError):
    pass


@dataclass(frozen=True)
class RatedPair:
    source: str
    candidate: str
    rating: float
    origin: str
    example_id: str = ""

    def __post_init__(self):
        if self.origin not in ORIGINS:
            raise ValueError(f"unknown origin {self.origin!r}")
        if (self.rating == 1.0) != (self.origin == "positive"):
            raise ValueError("rating must be 1.0 exactly for positive pairs")
        if not self.candidate:
            raise ValueError("empty candidate")

    @property
    def key(self) -> tuple[str, str]:
        return self.source, self.candidate

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class QeDataset:
    train: list[RatedPair]
    validation: list[RatedPair]
    seed: int
    stats: dict = field(default_factory=dict)


def _rng(seed, *parts) -> random.Random:
    return random.Random(":".join(str(p) for p in (seed, *parts)))


# --------------------------------------------------------------------------
# positives and retrieval negatives


def make_positive(ex: Example) -> RatedPair:
    reference = ex.plain_reference
    if not ex.template_text or not reference:
        raise QeDataError(f"example {ex.id}: template text and reference must be nonempty")
    return RatedPair(ex.template_text, reference, 1.0, "positive", ex.id)


class BleuIndex:
    """Tokenized template texts and n-gram counts, computed once per pool."""

    def __init__(self, pool: Sequence[Example]):
        self.pool = list(pool)
        self.position = {ex.id: i for i, ex in enumerate(self.pool)}
        self.tokens = [tokenize(ex.template_text) for ex in self.pool]
        self.ngrams = [
            [Counter(tuple(toks[i : i + n]) for i in range(len(toks) - n + 1)) for n in range(1, 5)]
            for toks in self.tokens
        ]

    def score(self, hyp: int, ref: int) -> float:
        """Smoothed sentence BLEU of pool[hyp]'s input against pool[ref]'s."""
        h, r = self.ngrams[hyp], self.ngrams[ref]
        hl, rl = len(self.tokens[hyp]), len(self.tokens[ref])
        stats = [hl, rl]
        for n in range(4):
            stats.append(sum((h[n] & r[n]).values()))
            stats.append(max(hl - n, 0))
        return _bleu_from_stats(stats, smooth=True)


def similar_negatives(
    ex: Example,
    pool: Sequence[Example],
    k: int = PER_TRANSFORM_CAP,
    bleu_threshold: float = 90.0,
    index: BleuIndex | None = None,
) -> list[RatedPair]:
    """Pair ``ex``'s input with the references of its ``k`` most similar inputs.

    Similarity is smoothed sentence BLEU between template texts; inputs scoring
    at or above ``bleu_threshold`` are skipped as near-duplicates.  Ties break
    by example id.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if index is None or ex.id not in index.position:
        index = BleuIndex([ex, *(p for p in pool if p.id != ex.id)])
    me = index.position[ex.id]
    own = ex.plain_reference
    scored = []
    for j, other in enumerate(index.pool):
        if other.id == ex.id:
            continue
        s = index.score(j, me)
        if s < bleu_threshold:
            scored.append((-s, other.id, other))
    scored.sort(key=lambda t: (t[0], t[1]))
    out, seen = [], set()
    for _, _, other in scored:
        cand = other.plain_reference
        if not cand or cand == own or cand in seen:
            continue
        seen.add(cand)
        out.append(RatedPair(ex.template_text, cand, 0.0, "similar", ex.id))
        if len(out) == k:
            break
    return out


def self_pair_negative(ex: Example) -> RatedPair:
    if not ex.template_text:
        raise QeDataError(f"example {ex.id}: empty template text")
    return RatedPair(ex.template_text, ex.template_text, 0.0, "self_pair", ex.id)


# --------------------------------------------------------------------------
# phrase perturbations


def _tagged_tokens(reference: str) -> list[tuple[str, int | None]]:
    """Plain-text tokens of ``reference``, each tagged with the id of the
    top-level argument span it belongs to (``None`` outside arguments)."""
    try:
        tree = parse_mr(reference)
    except MrParseError:
        return [(t, None) for t in reference.split() if t]
    out: list[tuple[str, int | None]] = []
    counter = itertools.count()

    def walk(items, span):
        for it in items:
            if isinstance(it, MrNode):
                if span is None and it.kind is NodeKind.ARGUMENT:
                    walk(it.items, next(counter))
                else:
                    walk(it.items, span)
            else:
                out.append((it, span))

    walk(tree.items, None)
    return out


def phrases(reference: str) -> tuple[list[str], list[tuple[int, int]]]:
    """Split a reference into subtokens and phrase spans ``(start, end)``.

    A phrase is the text of one bracketed argument or, outside arguments, a
    maximal run of words between punctuation marks.
    """
    toks: list[str] = []
    tags: list[object] = []
    gap = itertools.count()
    gap_id = ("gap", next(gap))
    for tok, span in _tagged_tokens(reference):
        for sub in _SUBTOKEN_RE.findall(tok):
            toks.append(sub)
            if sub in _PUNCT:
                tags.append(None)
                gap_id = ("gap", next(gap))
            elif span is not None:
                tags.append(("arg", span))
                gap_id = ("gap", next(gap))
            else:
                tags.append(gap_id)
    spans = []
    i = 0
    while i < len(toks):
        if tags[i] is None:
            i += 1
            continue
        j = i
        while j < len(toks) and tags[j] == tags[i]:
            j += 1
        spans.append((i, j))
        i = j
    return toks, spans


def _detok(tokens: Iterable[str]) -> str:
    return _SPACE_BEFORE_PUNCT_RE.sub(r"\1", " ".join(tokens))


def _perturbations(toks, spans, kind) -> list[list[str]]:
    out = []
    if kind == "swap":
        for a, b in itertools.combinations(range(len(spans)), 2):
            (s1, e1), (s2, e2) = spans[a], spans[b]
            out.append(toks[:s1] + toks[s2:e2] + toks[e1:s2] + toks[s1:e1] + toks[e2:])
    elif kind == "repeat":
        for s, e in spans:
            out.append(toks[:e] + toks[s:e] + toks[e:])
    elif kind == "drop":
        for s, e in spans:
            out.append(toks[:s] + toks[e:])
    else:
        raise ValueError(f"unknown perturbation {kind!r}")
    return out


def phrase_perturbation(
    ex: Example, kind: str, seed: int = 0, n: int = PER_TRANSFORM_CAP
) -> list[RatedPair]:
    """Up to ``n`` distinct swap/repeat/drop corruptions of the reference."""
    reference = ex.plain_reference
    toks, spans = phrases(ex.reference)
    need = 1 if kind == "repeat" else 2
    if kind not in ("swap", "repeat", "drop"):
        raise ValueError(f"unknown perturbation {kind!r}")
    if len(spans) < need:
        raise TooFewPhrases(f"example {ex.id}: {len(spans)} phrase(s), {kind} needs {need}")
    seen, candidates = set(), []
    for variant in _perturbations(toks, spans, kind):
        text = _detok(variant)
        if text and text != reference and text not in seen:
            seen.add(text)
            candidates.append(text)
    rng = _rng(seed, ex.id, kind)
    picked = rng.sample(candidates, min(n, len(candidates)))
    return [RatedPair(ex.template_text, c, 0.0, kind, ex.id) for c in picked]


def flip_digits(ex: Example, seed: int = 0, n: int = PER_TRANSFORM_CAP) -> list[RatedPair]:
    """Up to ``n`` copies of the reference with one or more digits changed."""
    reference = ex.plain_reference
    positions = [i for i, ch in enumerate(reference) if ch in "0123456789"]
    if not positions:
        raise NoDigits(f"example {ex.id}: reference has no digits")
    rng = _rng(seed, ex.id, "flip_digits")
    out: list[str] = []
    attempts = 0
    while len(out) < n and attempts < 50 * n:
        attempts += 1
        chars = list(reference)
        k = 1 if len(positions) == 1 or rng.random() < 0.7 else 2
        for pos in rng.sample(positions, k):
            chars[pos] = rng.choice([d for d in "0123456789" if d != reference[pos]])
        cand = "".join(chars)
        if cand not in out:
            out.append(cand)
    return [RatedPair(ex.template_text, c, 0.0, "flip_digits", ex.id) for c in out]


# --------------------------------------------------------------------------
# assembly


def _resample(items: list, count: int, rng: random.Random) -> list:
    """Exactly ``count`` items: every item at least once when upsampling."""
    if not items or count <= 0:
        return []
    if count <= len(items):
        return rng.sample(items, count)
    reps, extra = divmod(count, len(items))
    return items * reps + rng.sample(items, extra)


def _example_negatives(ex, index, seed, k, bleu_threshold) -> list[RatedPair]:
    own = ex.plain_reference
    negs = similar_negatives(ex, index.pool, k=min(k, PER_TRANSFORM_CAP), bleu_threshold=bleu_threshold, index=index)
    if ex.template_text != own:
        negs.append(self_pair_negative(ex))
    for kind in ("swap", "repeat", "drop"):
        try:
            negs.extend(phrase_perturbation(ex, kind, seed, PER_TRANSFORM_CAP))
        except TooFewPhrases:
            pass
    try:
        negs.extend(flip_digits(ex, seed, PER_TRANSFORM_CAP))
    except NoDigits:
        pass
    return [p for p in negs if p.candidate != own]


def assemble_dataset(
    pool: Sequence[Example],
    seed: int = 0,
    k: int = PER_TRANSFORM_CAP,
    bleu_threshold: float = 90.0,
    validation_fraction: float = VALIDATION_FRACTION,
) -> QeDataset:
    """Build train/validation pairs from a labeled pool.

    Positives are resampled to half the number of negatives.  The holdout is
    drawn over distinct ``(source, candidate)`` pairs, stratified by label, so
    that upsampled copies never straddle train and validation.
    """
    if not pool:
        raise QeDataError("empty pool")
    index = BleuIndex(pool)
    positives: dict[tuple, RatedPair] = {}
    negatives: dict[tuple, RatedPair] = {}
    for ex in pool:
        pos = make_positive(ex)
        positives.setdefault(pos.key, pos)
        for neg in _example_negatives(ex, index, seed, k, bleu_threshold):
            if neg.key not in positives:
                negatives.setdefault(neg.key, neg)
    # a later example's positive may coincide with an earlier negative
    negs = [p for key, p in negatives.items() if key not in positives]
    poss = list(positives.values())

    rng = _rng(seed, "assemble")
    n_neg = len(negs)
    n_pos_total = n_neg // 2 if n_neg else len(poss)
    total = n_pos_total + n_neg
    n_val = round(validation_fraction * total)
    val_neg_n = round(validation_fraction * n_neg)
    val_pos_n = min(max(n_val - val_neg_n, 0), n_pos_total)

    neg_order = rng.sample(negs, n_neg)
    val_negs, train_negs = neg_order[:val_neg_n], neg_order[val_neg_n:]

    pos_order = rng.sample(poss, len(poss))
    m = min(len(pos_order), max(round(validation_fraction * len(pos_order)), 1 if val_pos_n else 0))
    if len(pos_order) > 1:
        m = min(m, len(pos_order) - 1)
    val_pos = _resample(pos_order[:m], val_pos_n, rng)
    train_pos = _resample(pos_order[m:], n_pos_total - len(val_pos), rng)

    train = train_pos + train_negs
    validation = val_pos + val_negs
    rng.shuffle(train)
    rng.shuffle(validation)

    stats = {
        "examples": len(pool),
        "train": dict(Counter(p.origin for p in train)),
        "validation": dict(Counter(p.origin for p in validation)),
        "distinct_positives": len(poss),
        "negatives": n_neg,
    }
    for split in ("train", "validation"):
        stats[split] = {o: stats[split].get(o, 0) for o in ORIGINS}
    return QeDataset(train=train, validation=validation, seed=seed, stats=stats)


def cap_violations(pairs: Iterable[RatedPair], cap: int = PER_TRANSFORM_CAP) -> dict:
    """``{(example_id, origin): count}`` for distinct negatives above ``cap``."""
    counts = Counter((p.example_id, p.origin) for p in set(pairs) if p.origin != "positive")
    return {k: v for k, v in counts.items() if v > cap}

