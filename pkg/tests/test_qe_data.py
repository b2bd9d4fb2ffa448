import math
from collections import Counter

import pytest

from compgen.corpus import Example
from compgen.fixtures import load_fixture_corpus, make_corpus
from compgen.metrics import tokenize
from compgen.mr_tree import parse_mr
from compgen.qe_data import (
    NEGATIVE_ORIGINS,
    PER_TRANSFORM_CAP,
    NoDigits,
    QeDataError,
    RatedPair,
    TooFewPhrases,
    assemble_dataset,
    cap_violations,
    flip_digits,
    make_positive,
    phrase_perturbation,
    phrases,
    self_pair_negative,
    similar_negatives,
)


def example(id, reference, template_text="source text", mr="[DG_INFORM x ]"):
    return Example(id=id, query="q", mr=parse_mr(mr), reference=reference, template_text=template_text)


FIG3 = example(
    "fig3",
    "[DG_INFORM [CONDITION light rain ] expected [DATE_TIME today ] in [LOCATION [CITY Palo Alto ] ] ]",
    "there will be light rain at today in Palo Alto",
)


def test_positive_is_debracketed():
    p = make_positive(FIG3)
    assert (p.rating, p.origin) == (1.0, "positive")
    assert p.candidate == "light rain expected today in Palo Alto"
    assert "[" not in p.candidate and "]" not in p.candidate


def test_positive_requires_reference():
    with pytest.raises(QeDataError):
        make_positive(example("e", "", "src"))


def test_rated_pair_label_soundness():
    with pytest.raises(ValueError):
        RatedPair("a", "b", 1.0, "swap")
    with pytest.raises(ValueError):
        RatedPair("a", "b", 0.0, "positive")


def test_self_pair():
    p = self_pair_negative(FIG3)
    assert p.candidate == p.source == FIG3.template_text and p.rating == 0.0


def test_fig3_swap_present():
    toks, spans = phrases(FIG3.reference)
    assert [" ".join(toks[s:e]) for s, e in spans] == ["light rain", "expected", "today", "in", "Palo Alto"]
    out = phrase_perturbation(FIG3, "swap", seed=0, n=100)
    assert "Palo Alto expected today in light rain" in {p.candidate for p in out}


def test_perturbations_differ_from_reference():
    ref = FIG3.plain_reference
    for kind in ("swap", "repeat", "drop"):
        for seed in range(5):
            out = phrase_perturbation(FIG3, kind, seed=seed)
            assert 0 < len(out) <= PER_TRANSFORM_CAP
            assert len({p.candidate for p in out}) == len(out)
            assert all(p.candidate != ref for p in out)


def test_repeat_duplicates_span():
    ex = example("r", "there will be [CONDITION rain ] , at [DATE_TIME today ]")
    out = {p.candidate for p in phrase_perturbation(ex, "repeat", n=10)}
    assert "there will be there will be rain, at today" in out


def test_too_few_phrases():
    with pytest.raises(TooFewPhrases):
        phrase_perturbation(example("s", "sunny"), "swap")


def test_flip_digits_purity():
    ex = example("d", "[DG_INFORM between [TEMP_LOW 76 ] and [TEMP_HIGH 80 ] ]")
    ref = ex.plain_reference
    out = flip_digits(ex, seed=3)
    assert len(out) == 4 and len({p.candidate for p in out}) == 4
    for p in out:
        assert len(p.candidate) == len(ref)
        diffs = [(a, b) for a, b in zip(ref, p.candidate) if a != b]
        assert diffs and all(a.isdigit() and b.isdigit() for a, b in diffs)


def test_flip_digits_price():
    ex = example("t", "The ticket is $552")
    cands = {p.candidate for p in flip_digits(ex, seed=0, n=4)}
    assert all(c.startswith("The ticket is $") and c != "The ticket is $552" for c in cands)


def test_no_digits():
    with pytest.raises(NoDigits):
        flip_digits(example("n", "no numbers here"))


def _smoothed_bleu(hyp, ref):
    h, r = tokenize(hyp), tokenize(ref)
    if not h:
        return 0.0
    logp = 0.0
    for n in range(1, 5):
        hg = Counter(tuple(h[i : i + n]) for i in range(len(h) - n + 1))
        rg = Counter(tuple(r[i : i + n]) for i in range(len(r) - n + 1))
        m, t = sum((hg & rg).values()), max(len(h) - n + 1, 0)
        if n > 1:
            m, t = m + 1, t + 1
        if m == 0:
            return 0.0
        logp += math.log(m / t) / 4
    bp = 1.0 if len(h) > len(r) else math.exp(1 - len(r) / len(h))
    return 100 * bp * math.exp(logp)


def test_similar_negatives_match_bruteforce():
    pool = make_corpus(10, seed=99)
    target = pool[0]
    got = similar_negatives(target, pool[1:], k=4)
    ranked = sorted(
        ((-_smoothed_bleu(o.template_text, target.template_text), o.id, o) for o in pool[1:]),
        key=lambda t: (t[0], t[1]),
    )
    expected, seen = [], set()
    for negscore, _, o in ranked:
        if -negscore >= 90.0 or o.plain_reference in seen or o.plain_reference == target.plain_reference:
            continue
        seen.add(o.plain_reference)
        expected.append(o.plain_reference)
    assert [p.candidate for p in got] == expected[:4]
    assert all(p.source == target.template_text and p.origin == "similar" for p in got)


def test_similar_negatives_skip_identical_inputs():
    a = example("a", "ref a", "same input here")
    b = example("b", "ref b", "same input here")
    assert similar_negatives(a, [b]) == []


@pytest.fixture(scope="module")
def dataset():
    return assemble_dataset(load_fixture_corpus(), seed=7)


def test_caps(dataset):
    assert cap_violations(dataset.train + dataset.validation) == {}
    per_example = Counter(p.example_id for p in set(dataset.train + dataset.validation) if p.rating == 0.0)
    assert max(per_example.values()) <= 1 + 4 * 5


def test_positive_ratio(dataset):
    pairs = dataset.train + dataset.validation
    n_pos = sum(p.rating == 1.0 for p in pairs)
    n_neg = len(pairs) - n_pos
    assert abs(n_pos - n_neg // 2) <= 1
    tp = sum(p.rating == 1.0 for p in dataset.train)
    assert abs(tp - (len(dataset.train) - tp) // 2) <= 1


def test_validation_fraction(dataset):
    total = len(dataset.train) + len(dataset.validation)
    assert abs(len(dataset.validation) - round(0.1 * total)) <= 1


def test_no_leakage(dataset):
    assert not {p.key for p in dataset.train} & {p.key for p in dataset.validation}


def test_all_origins_present(dataset):
    origins = {p.origin for p in dataset.train}
    assert set(NEGATIVE_ORIGINS) <= origins and "positive" in origins


def test_negatives_differ_from_reference(dataset):
    refs = {ex.id: ex.plain_reference for ex in load_fixture_corpus()}
    for p in dataset.train + dataset.validation:
        if p.origin != "positive":
            assert p.candidate != refs[p.example_id]


def test_assemble_deterministic(dataset):
    again = assemble_dataset(load_fixture_corpus(), seed=7)
    assert again.train == dataset.train and again.validation == dataset.validation


def test_empty_pool():
    with pytest.raises(QeDataError):
        assemble_dataset([])
