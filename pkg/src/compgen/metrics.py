"""Tree accuracy, slot error rate and BLEU-4."""
from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from compgen.mr_tree import (
    MrParseError,
    MrTree,
    NodeKind,
    debracket,
    extract_signature,
    iter_nodes,
    parse_mr,
)

__all__ = [
    "EvalRecord",
    "MetricReport",
    "slot_values",
    "tokenize",
    "ngram_stats",
    "tree_match",
    "slot_errors",
    "tree_accuracy",
    "slot_error_rate",
    "bleu4",
    "corpus_bleu",
    "sentence_bleu",
    "evaluate",
]

MAX_ORDER = 4
_TOKEN_RE = re.compile(r"\w+|[^\w\s]")


def slot_values(mr: MrTree) -> list[tuple[str, str]]:
    """(label, value) for every argument node with its own terminal text, depth-first."""
    out = []
    for _, node, _ in iter_nodes(mr):
        if node.kind is NodeKind.ARGUMENT and node.terminals:
            out.append((node.label, node.text))
    return out


@dataclass
class EvalRecord:
    id: str
    input_mr: MrTree
    reference: str
    prediction: str
    slot_values: list[tuple[str, str]] = field(default_factory=list)

    def __post_init__(self):
        if not self.slot_values:
            self.slot_values = slot_values(self.input_mr)


@dataclass
class MetricReport:
    tree_accuracy: float
    ser: float
    bleu4: float
    n: int
    per_record: list[dict] = field(default_factory=list)

    def to_dict(self, per_record: bool = False) -> dict:
        d = {"tree_accuracy": self.tree_accuracy, "ser": self.ser, "bleu4": self.bleu4, "n": self.n}
        if per_record:
            d["per_record"] = self.per_record
        return d


# --------------------------------------------------------------------------
# tree accuracy


def tree_match(record: EvalRecord) -> bool:
    try:
        pred = parse_mr(record.prediction)
    except MrParseError:
        return False
    return extract_signature(pred) == extract_signature(record.input_mr)


def tree_accuracy(records: Sequence[EvalRecord]) -> float:
    if not records:
        return 0.0
    return sum(tree_match(r) for r in records) / len(records)


# --------------------------------------------------------------------------
# slot error rate


def _norm(text: str) -> str:
    return " ".join(text.lower().split())


def slot_errors(record: EvalRecord) -> list[str]:
    """Labels of slots whose value is not found in the de-bracketed prediction."""
    hay = _norm(debracket(record.prediction))
    # debracket also removes spaces before punctuation; normalise values the same way
    return [label for label, value in record.slot_values if _norm(debracket(value)) not in hay]


def slot_error_rate(records: Sequence[EvalRecord]) -> float:
    if not records:
        return 0.0
    return sum(bool(slot_errors(r)) for r in records) / len(records)


# --------------------------------------------------------------------------
# BLEU


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


def ngram_stats(hyp: Sequence[str], ref: Sequence[str], max_order: int = MAX_ORDER) -> list[int]:
    """``[hyp_len, ref_len, match_1, total_1, ..., match_n, total_n]``."""
    stats = [len(hyp), len(ref)]
    for n in range(1, max_order + 1):
        h = Counter(tuple(hyp[i : i + n]) for i in range(len(hyp) - n + 1))
        r = Counter(tuple(ref[i : i + n]) for i in range(len(ref) - n + 1))
        stats.append(sum((h & r).values()))
        stats.append(max(len(hyp) - n + 1, 0))
    return stats


def _bleu_from_stats(stats: Sequence[int], smooth: bool = False, max_order: int = MAX_ORDER) -> float:
    c, r = stats[0], stats[1]
    if c == 0:
        return 0.0
    log_p = 0.0
    for n in range(max_order):
        match, total = stats[2 + 2 * n], stats[3 + 2 * n]
        if smooth and n > 0:
            match, total = match + 1, total + 1
        if match == 0 or total == 0:
            return 0.0
        log_p += math.log(match / total) / max_order
    bp = 1.0 if c > r else math.exp(1 - r / c)
    return 100.0 * bp * math.exp(log_p)


def corpus_bleu(hypotheses: Iterable[str], references: Iterable[str]) -> float:
    """Unsmoothed corpus BLEU-4 on a 0-100 scale, one reference per hypothesis."""
    totals = [0] * (2 + 2 * MAX_ORDER)
    for hyp, ref in zip(hypotheses, references, strict=True):
        for i, v in enumerate(ngram_stats(tokenize(hyp), tokenize(ref))):
            totals[i] += v
    return _bleu_from_stats(totals)


def sentence_bleu(hypothesis: str | Sequence[str], reference: str | Sequence[str]) -> float:
    """Per-pair BLEU-4 with add-one smoothing on orders 2-4."""
    hyp = tokenize(hypothesis) if isinstance(hypothesis, str) else hypothesis
    ref = tokenize(reference) if isinstance(reference, str) else reference
    return _bleu_from_stats(ngram_stats(hyp, ref), smooth=True)


def bleu4(records: Sequence[EvalRecord]) -> float:
    return corpus_bleu(
        (debracket(r.prediction) for r in records),
        (debracket(r.reference) for r in records),
    )


def evaluate(records: Sequence[EvalRecord]) -> MetricReport:
    per_record = []
    for r in records:
        missing = slot_errors(r)
        per_record.append(
            {
                "id": r.id,
                "tree_match": int(tree_match(r)),
                "slot_error": int(bool(missing)),
                "missing_slots": missing,
            }
        )
    n = len(records)
    return MetricReport(
        tree_accuracy=sum(p["tree_match"] for p in per_record) / n if n else 0.0,
        ser=sum(p["slot_error"] for p in per_record) / n if n else 0.0,
        bleu4=bleu4(records),
        n=n,
        per_record=per_record,
    )
