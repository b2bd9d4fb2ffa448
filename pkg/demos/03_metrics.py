"""
Tree accuracy, slot error rate and BLEU
=======================================

Score a handful of predictions against annotated references.
"""

from compgen.metrics import EvalRecord, evaluate, sentence_bleu
from compgen.mr_tree import parse_mr

mr = parse_mr("[DG_INFORM [PRICE $552 ] [CITY Boston ] ]")
ref = "[DG_INFORM The ticket is [PRICE $552 ] to [CITY Boston ] ]"
preds = {
    "exact": ref,
    "wrong-digit": ref.replace("$552", "$1052"),
    "wrong-act": ref.replace("DG_INFORM", "DG_OFFER"),
    "truncated": "[DG_INFORM The ticket is [PRICE $552 ]",
}
records = [EvalRecord(k, mr, ref, p) for k, p in preds.items()]
report = evaluate(records)
print(report.to_dict())
for row in report.per_record:
    print(row)

# sentence-level BLEU is smoothed so short strings still get a score
print(sentence_bleu("light rain today", "light rain tomorrow"))
