"""
Template-guided inputs
======================

Render an MR into plain text with a small template registry, and into the
annotated form used as the generation target.
"""

from compgen.fixtures import fig2_mr, table1_registry
from compgen.mr_tree import extract_signature, parse_mr
from compgen.template_engine import load_registry, render

registry = table1_registry()
for name, t in registry.items():
    print(f"{name:26s} {t.source}")

mr = fig2_mr()
print()
print(render(mr, registry, "plain"))

annotated = render(mr, registry, "annotated")
print(annotated)
print("structure kept:", extract_signature(parse_mr(annotated)) == extract_signature(mr))

# Optional(...) vanishes when its argument is missing
print(render(parse_mr("[DG_INFORM [CONDITION fog ] ]"), registry))
print(render(parse_mr("[DG_INFORM [CONDITION fog ] [HUMIDITY humid ] [DATE_TIME tonight ] ]"), registry))

# registries are plain NAME<TAB>BODY files
tiny = load_registry("DG_YES\tYes\nDG_INFORM\tit is $condition Optional(in $city)\n")
print(render(parse_mr("[DG_YES ] [DG_INFORM [CONDITION warm ] [CITY Austin ] ]"), tiny))
