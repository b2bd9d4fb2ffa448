import io

import pytest

from compgen.fixtures import fig2_mr, fig2_plain, load_fixture_corpus, table1_registry, weather_registry
from compgen.mr_tree import extract_signature, parse_mr
from compgen.template_engine import (
    Conditional,
    DslSyntaxError,
    DuplicateTemplate,
    Invoke,
    Literal,
    MissingTemplate,
    Optional,
    RenderMode,
    StructMarker,
    TemplateRegistry,
    UnboundVariable,
    UnknownFunction,
    VarRef,
    load_registry,
    parse_template,
    render,
)


def test_literal_body():
    t = parse_template("DG_NO", "No")
    assert t.body == (Literal("No"),)


def test_conditional_body():
    t = parse_template("DG_INFORM", "IsSet($condition) ? DG_INFORM_CONDITION : DG_INFORM_CONDITION_NOT")
    (c,) = t.body
    assert isinstance(c, Conditional)
    assert c.var == VarRef("condition")
    assert c.then == (Invoke("DG_INFORM_CONDITION"),)
    assert c.otherwise == (Invoke("DG_INFORM_CONDITION_NOT"),)


def test_optional_body():
    (opt,) = parse_template("X", "Optional(at $date_time)").body
    assert isinstance(opt, Optional)
    lit, var = opt.body
    assert isinstance(lit, Literal) and lit.text.strip() == "at"
    assert var == VarRef("date_time")


def test_markers_and_invokes():
    body = parse_template("DS_JUSTIFY", "[DS_JUSTIFY DG_RECOMMEND, because DG_INFORM ]").body
    assert body[0] == StructMarker("DS_JUSTIFY")
    assert Invoke("DG_RECOMMEND") in body and Invoke("DG_INFORM") in body
    assert body[-1] == StructMarker(None)


@pytest.mark.parametrize("body", ["Foo(", "Optional(at $x", "IsSet($x) ? A", "$"])
def test_syntax_errors(body):
    with pytest.raises(DslSyntaxError):
        parse_template("T", body)


def test_unknown_function():
    with pytest.raises(UnknownFunction):
        parse_template("T", "Maybe(at $x)")


def test_table1_registry_size():
    assert len(table1_registry()) == 7


def test_empty_file_gives_empty_registry():
    assert len(load_registry(io.StringIO(""))) == 0
    assert len(load_registry("# only a comment\n\n")) == 0


def test_duplicate_template():
    with pytest.raises(DuplicateTemplate):
        load_registry("DG_NO\tNo\nDG_NO\tNope\n")


def test_fig2_plain_golden():
    assert render(fig2_mr(), table1_registry(), RenderMode.PLAIN) == fig2_plain()


def test_fig2_annotated_signature():
    out = render(fig2_mr(), table1_registry(), "annotated")
    assert extract_signature(parse_mr(out)) == extract_signature(fig2_mr())


def test_humidity_optional_absent():
    reg = table1_registry()
    with_h = parse_mr("[DG_INFORM [CONDITION rain ] [HUMIDITY humid ] [DATE_TIME today ] ]")
    without = parse_mr("[DG_INFORM [CONDITION rain ] [DATE_TIME today ] ]")
    assert render(with_h, reg) == "there will be rain humid at today"
    assert render(without, reg) == "there will be rain at today"


def test_conditional_dispatch_else_branch():
    mr = parse_mr("[DG_INFORM [CONDITION_NOT snow ] [LOCATION [CITY Oxford ] ] ]")
    assert render(mr, table1_registry()) == "there won't be snow in Oxford"


def test_missing_template():
    with pytest.raises(MissingTemplate) as e:
        render(parse_mr("[DG_GREET hello ]"), table1_registry())
    assert e.value.label == "DG_GREET"


def test_unbound_variable():
    reg = load_registry("DG_INFORM\tit is $condition\n")
    with pytest.raises(UnboundVariable):
        render(parse_mr("[DG_INFORM [DATE_TIME today ] ]"), reg)


def test_render_is_deterministic():
    reg = weather_registry()
    for ex in load_fixture_corpus():
        assert render(ex.mr, reg) == render(ex.mr, reg) == ex.template_text


def test_linearity_on_fixture_corpus():
    labels = set()
    for ex in load_fixture_corpus():
        labels.update(extract_signature(ex.mr).labels())
    signatures = {extract_signature(ex.mr) for ex in load_fixture_corpus()}
    assert len(weather_registry()) <= len(labels) < len(signatures)


def test_annotated_fidelity_on_fixtures():
    reg = weather_registry()
    for ex in load_fixture_corpus():
        out = render(ex.mr, reg, "annotated")
        assert extract_signature(parse_mr(out)) == extract_signature(ex.mr)


def test_optional_erasure():
    reg = table1_registry()
    full = parse_mr("[DG_INFORM [CONDITION rain ] [HUMIDITY ] [DATE_TIME today ] ]")
    erased = parse_mr("[DG_INFORM [CONDITION rain ] [DATE_TIME today ] ]")
    assert render(full, reg) == render(erased, reg)


def test_registry_from_pairs():
    reg = TemplateRegistry.from_pairs([("DG_YES", "Yes")])
    assert render(parse_mr("[DG_YES ]"), reg) == "Yes"
