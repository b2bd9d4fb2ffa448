
import pytest

from compgen.corpus import Example
from compgen.fixtures import load_fixture_corpus, make_corpus
from compgen.mr_tree import extract_signature, parse_mr
from compgen.splits import (
    CoverageInfeasible,
    SizeExceedsSignatures,
    SplitError,
    construct_splits,
    derive_eval_splits,
    group_by_signature,
)


def ex(id, mr):
    return Example(id=id, query="q", mr=parse_mr(mr), reference=mr)


@pytest.fixture(scope="module")
def pool():
    return make_corpus(600, seed=11, n_signatures=200)


def check_invariants(pool, splits, sizes):
    by_id = {e.id: e for e in pool}
    all_labels = set()
    for e in pool:
        all_labels.update(extract_signature(e.mr).labels())
    prev = set()
    for size in sizes:
        ids = splits.ids(size)
        assert len(ids) == size == len(set(ids))
        sigs = {extract_signature(by_id[i].mr) for i in ids}
        assert len(sigs) == size
        assert prev <= set(ids)
        prev = set(ids)
    small_labels = set()
    for i in splits.smallest:
        small_labels.update(extract_signature(by_id[i].mr).labels())
    assert small_labels == all_labels


def test_group_by_signature_small():
    pool = [ex("a", "[DG_YES x ]"), ex("b", "[DG_YES y ]"), ex("c", "[DG_NO z ]")]
    assert [len(v) for v in group_by_signature(pool).values()] == [2, 1]
    assert group_by_signature([]) == {}


def test_group_count_matches_bruteforce():
    corpus = load_fixture_corpus()
    brute = {str(extract_signature(e.mr)) for e in corpus}
    index = group_by_signature(corpus)
    assert len(index) == len(brute)
    assert sorted(i for ids in index.values() for i in ids) == sorted(e.id for e in corpus)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_invariants(pool, seed):
    sizes = [25, 50, 100, 150]
    check_invariants(pool, construct_splits(pool, sizes, seed), sizes)


def test_deterministic(pool):
    a = construct_splits(pool, [25, 50], seed=4)
    b = construct_splits(pool, [25, 50], seed=4)
    assert a.splits == b.splits


def test_seeds_differ(pool):
    assert construct_splits(pool, [25, 50], 0).splits != construct_splits(pool, [25, 50], 1).splits


def test_size_exceeds_signatures():
    with pytest.raises(SizeExceedsSignatures):
        construct_splits([ex("a", "[DG_YES x ]")], [2], 0)


def test_bad_sizes(pool):
    with pytest.raises(SplitError):
        construct_splits(pool, [50, 25], 0)
    with pytest.raises(SplitError):
        construct_splits(pool, [], 0)


def test_coverage_infeasible():
    pool = [ex("a", "[DG_YES x ]"), ex("b", "[DG_NO x ]"), ex("c", "[DG_INFORM [CITY x ] ]")]
    with pytest.raises(CoverageInfeasible) as e:
        construct_splits(pool, [1, 3], 0)
    assert e.value.labels


def test_cover_picks_rare_label():
    pool = [ex(f"c{i}", f"[DG_INFORM [CONDITION x ] {'[CITY y ] ' * i}]") for i in range(1, 10)]
    pool.append(ex("rare", "[DG_INFORM [CONDITION x ] [WIND_SPEED 5 ] ]"))
    for seed in range(5):
        s = construct_splits(pool, [2, 5], seed)
        assert "rare" in s.smallest


def test_eval_routing():
    pool = [ex(f"p{i}", f"[DG_INFORM {'[CITY y ] ' * i}]") for i in range(1, 6)]
    splits = construct_splits(pool, [1, 3], seed=0)
    by_id = {e.id: e for e in pool}
    small = {extract_signature(by_id[i].mr) for i in splits.smallest}
    large = {extract_signature(by_id[i].mr) for i in splits.largest}
    cands = [ex(f"e{i}", f"[DG_INFORM {'[CITY z ] ' * i}]") for i in range(1, 8)]
    ev = derive_eval_splits(pool, splits, cands)
    assert len(ev.seen) == 1 and len(ev.dropped) == 2 and len(ev.unseen) == 4
    for e in cands:
        sig = extract_signature(e.mr)
        if e.id in ev.unseen:
            assert sig not in large
        if e.id in ev.seen:
            assert sig in small


def test_unlabeled_is_complement(pool):
    s = construct_splits(pool, [25, 50], 0)
    u = s.unlabeled_ids(pool)
    assert set(u) | set(s.largest) == {e.id for e in pool}
    assert not set(u) & set(s.largest)
