"""
Self-training with a mock generator
===================================

The mock generator returns the gold response but corrupts about 30% of them;
the oracle scorer only trusts exact matches.  Each round moves accepted
inputs from the unlabeled pool into the labeled set.
"""

import tempfile

from compgen.fixtures import make_corpus
from compgen.selftrain import (
    LabeledPair,
    MockGenerator,
    OracleScorer,
    SelfTrainConfig,
    UnlabeledItem,
    audit_report,
    format_report,
    run_self_training,
)

rows = list({e.template_text: e for e in make_corpus(1500, seed=3)}.values())
gold = {e.template_text: e.reference for e in rows}
S = [LabeledPair(e.id, e.template_text, e.reference) for e in rows[:100]]
U = [UnlabeledItem(e.id, e.template_text) for e in rows[100:]]

with tempfile.TemporaryDirectory() as state:
    final, stats = run_self_training(
        S, U, SelfTrainConfig(iterations=3, seed=3),
        MockGenerator(gold, corruption_rate=0.3, seed=3), OracleScorer(gold), state,
    )
print(format_report(audit_report(stats)))
print("labeled:", len(S), "->", len(final))
