"""
Few-shot splits
===============

Build nested one-example-per-skeleton splits from a synthetic weather corpus
and route held-out examples into seen and unseen sets.
"""

from compgen.fixtures import make_corpus
from compgen.mr_tree import extract_signature
from compgen.splits import construct_splits, derive_eval_splits

pool = make_corpus(3000, seed=0, n_signatures=900)
splits = construct_splits(pool, [100, 200, 400], seed=1)
for size, ids in splits.splits:
    print(size, ids[:3])

by_id = {e.id: e for e in pool}
labels = {l for e in pool for l in extract_signature(e.mr).labels()}
covered = {l for i in splits.smallest for l in extract_signature(by_id[i].mr).labels()}
print(f"smallest split covers {len(covered)}/{len(labels)} labels")
print("nested:", set(splits.ids(100)) <= set(splits.ids(200)) <= set(splits.ids(400)))

held_out = make_corpus(500, seed=9, id_prefix="test")
ev = derive_eval_splits(pool, splits, held_out)
print(f"seen {len(ev.seen)}  unseen {len(ev.unseen)}  dropped {len(ev.dropped)}")
print("unlabeled pool:", len(splits.unlabeled_ids(pool)))
