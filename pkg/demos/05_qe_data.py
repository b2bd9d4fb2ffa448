"""
Quality-estimator training pairs
================================

One positive and up to six kinds of negative candidates per example.
"""

from collections import Counter

from compgen.fixtures import load_fixture_corpus
from compgen.qe_data import assemble_dataset, flip_digits, phrase_perturbation, self_pair_negative, similar_negatives

pool = load_fixture_corpus()
ex = next(e for e in pool if any(ch.isdigit() for ch in e.plain_reference))
print("source:   ", ex.template_text)
print("reference:", ex.plain_reference)

for p in similar_negatives(ex, pool, k=2):
    print("similar  ", p.candidate)
print("self_pair", self_pair_negative(ex).candidate)
for kind in ("swap", "repeat", "drop"):
    print(f"{kind:9s}", phrase_perturbation(ex, kind, seed=0, n=1)[0].candidate)
print("flip     ", flip_digits(ex, seed=0, n=1)[0].candidate)

ds = assemble_dataset(pool, seed=0)
print(len(ds.train), "train /", len(ds.validation), "validation")
print(Counter(p.origin for p in ds.train))
