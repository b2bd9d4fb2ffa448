import random

import pytest
from hypothesis import given, settings, strategies as st

from compgen.mr_tree import (
    BadLabel,
    EmptyInput,
    MrNode,
    MrTree,
    NodeKind,
    StrayBracket,
    UnbalancedBrackets,
    debracket,
    extract_signature,
    iter_nodes,
    node_kind,
    parse_mr,
    serialize,
    validate,
)
from conftest import random_tree

SIMPLE = "[DG_INFORM [CONDITION light rain ] [LOCATION [CITY Palo Alto ] ] ]"


def test_parse_simple_structure():
    t = parse_mr(SIMPLE)
    (inform,) = t.nodes
    assert inform.label == "DG_INFORM"
    assert inform.kind is NodeKind.DIALOG_ACT
    cond, loc = inform.children
    assert cond.terminals == ("light", "rain")
    assert loc.child("CITY").text == "Palo Alto"
    assert loc.flat_text() == "Palo Alto"


def test_node_kinds():
    assert node_kind("DS_JUSTIFY") is NodeKind.DISCOURSE_RELATION
    assert node_kind("DG_NO") is NodeKind.DIALOG_ACT
    assert node_kind("CITY") is NodeKind.ARGUMENT


def test_serialize_is_canonical():
    messy = "  [DG_INFORM   [CONDITION light   rain  ]\n ]"
    assert serialize(parse_mr(messy)) == "[DG_INFORM [CONDITION light rain ] ]"


def test_signature_drops_terminals():
    assert extract_signature(parse_mr(SIMPLE)) == "[DG_INFORM [CONDITION ] [LOCATION [CITY ] ] ]"
    assert extract_signature(parse_mr(SIMPLE)).labels() == ["DG_INFORM", "CONDITION", "LOCATION", "CITY"]


def test_signature_ignores_values():
    other = SIMPLE.replace("light rain", "snow").replace("Palo Alto", "Oxford")
    assert extract_signature(parse_mr(other)) == extract_signature(parse_mr(SIMPLE))


def test_signature_sensitive_to_order():
    a = parse_mr("[DG_INFORM [CONDITION x ] [DATE_TIME y ] ]")
    b = parse_mr("[DG_INFORM [DATE_TIME y ] [CONDITION x ] ]")
    assert extract_signature(a) != extract_signature(b)


@pytest.mark.parametrize(
    "text,err",
    [
        ("", EmptyInput),
        ("   ", EmptyInput),
        ("[DG_INFORM [CONDITION rain ]", UnbalancedBrackets),
        ("[DG_INFORM rain ] ]", UnbalancedBrackets),
        ("[DG_INFORM rain] ]", StrayBracket),
        ("[dg_inform rain ]", BadLabel),
        ("[ rain ]", BadLabel),
    ],
)
def test_parse_errors(text, err):
    with pytest.raises(err):
        parse_mr(text)


def test_unbalanced_reports_position():
    with pytest.raises(UnbalancedBrackets) as e:
        parse_mr("[DG_INFORM [CONDITION rain ]")
    assert e.value.position is not None


def test_iter_nodes_paths():
    paths = [p for p, _, _ in iter_nodes(parse_mr(SIMPLE))]
    assert paths == ["DG_INFORM[0]", "DG_INFORM[0]/CONDITION[0]", "DG_INFORM[0]/LOCATION[1]",
                     "DG_INFORM[0]/LOCATION[1]/CITY[0]"]


def test_validate_clean_tree():
    assert validate(parse_mr(SIMPLE)) == []


def test_validate_flags_dialog_act_under_argument():
    t = parse_mr("[DG_INFORM [CONDITION [DG_INFORM x ] ] ]")
    (v,) = validate(t)
    assert (v.rule, v.path) == ("nesting", "DG_INFORM[0]/CONDITION[0]/DG_INFORM[0]")


def test_debracket():
    assert debracket("[DG_INFORM it is [CONDITION sunny ] , in [CITY Oxford ] . ]") == "it is sunny, in Oxford."


def test_round_trip_seeded():
    rng = random.Random(5)
    for _ in range(200):
        t = random_tree(rng)
        assert parse_mr(serialize(t)) == t


_label = st.sampled_from(["DG_INFORM", "DS_JUSTIFY", "CONDITION", "CITY", "X1"])
_word = st.text(alphabet="abcXYZ019.,'$%", min_size=1, max_size=6)


def _nodes():
    return st.recursive(
        st.builds(lambda l, ws: MrNode(l, tuple(ws)), _label, st.lists(_word, max_size=3)),
        lambda kids: st.builds(
            lambda l, xs: MrNode(l, tuple(xs)), _label, st.lists(st.one_of(kids, _word), max_size=4)
        ),
        max_leaves=20,
    )


@settings(max_examples=150, deadline=None)
@given(st.lists(_nodes(), min_size=1, max_size=3))
def test_round_trip_property(nodes):
    t = MrTree(tuple(nodes))
    assert parse_mr(serialize(t)) == t
    assert extract_signature(parse_mr(serialize(t))) == extract_signature(t)
