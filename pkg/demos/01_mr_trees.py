"""
Meaning representation trees
============================

Parse a bracketed MR, look at its skeleton, and check it against the
nesting rules.
"""

from compgen.mr_tree import debracket, extract_signature, iter_nodes, parse_mr, serialize, validate

text = "[DG_NO No ] [DG_INFORM [CONDITION light rain ] [DATE_TIME today ] [LOCATION [CITY Palo Alto ] ] ]"
tree = parse_mr(text)

# every node with its path; DS_ labels are discourse relations, DG_ dialog acts
for path, node, _ in iter_nodes(tree):
    print(f"{path:40s} {node.kind.value:20s} {node.text!r}")

# the skeleton drops the values, so two forecasts for different cities share it
sig = extract_signature(tree)
print(sig)
other = parse_mr(text.replace("light rain", "snow").replace("Palo Alto", "Oxford"))
print("same skeleton:", extract_signature(other) == sig)

# serialization is canonical and round-trips
assert parse_mr(serialize(tree)) == tree

# an argument may not hold a dialog act
bad = parse_mr("[DG_INFORM [CONDITION [DG_YES yes ] ] ]")
for v in validate(bad):
    print(v.to_dict())

print(debracket("[DG_INFORM it will be [CONDITION sunny ] , in [CITY Oxford ] . ]"))
