"""Synthetic weather-domain corpora and the bundled template files.

The generator draws random MR skeletons over a fixed label inventory, fills
argument values, and renders both the template-guided input and an annotated
reference with a second, differently worded registry.  Everything is seeded.
"""
from __future__ import annotations

import random
from importlib import resources

from compgen.corpus import Example
from compgen.mr_tree import MrNode, MrTree, extract_signature, parse_mr
from compgen.template_engine import RenderMode, TemplateRegistry, load_registry, render

__all__ = [
    "data_text",
    "table1_registry",
    "weather_registry",
    "reference_registry",
    "fig2_mr",
    "fig2_plain",
    "random_skeleton",
    "fill_values",
    "make_example",
    "make_corpus",
    "load_fixture_corpus",
    "VALUES",
]

VALUES = {
    "CONDITION": ["light rain", "heavy rain", "partly cloudy", "sunny", "snow", "heavy freezing rain",
                  "mostly sunny", "fog", "thunderstorms", "drizzle", "cloudy"],
    "CONDITION_NOT": ["rain", "snow", "cold", "hail", "strong wind", "sun"],
    "HUMIDITY": ["extremely humid", "humid", "dry"],
    "TEMP_HIGH": [str(t) for t in range(55, 100)],
    "TEMP_LOW": [str(t) for t in range(20, 55)],
    "WIND_SPEED": [f"{w} mph" for w in range(5, 40, 3)],
    "PRECIP_CHANCE": [f"{p}%" for p in range(10, 100, 10)],
    "DATE_TIME": ["today", "tomorrow", "tomorrow morning", "next Wednesday", "this weekend", "tonight",
                  "from 03:00 PM to 07:00 PM", "on Friday"],
    "CITY": ["Palo Alto", "Menlo Park", "Oxford", "Birmingham", "Seattle", "Boston", "Denver", "Austin"],
    "REGION": ["England", "California", "Washington", "Texas", "Colorado"],
    "COUNTRY": ["United Kingdom", "United States"],
    "ATTIRE": ["umbrella", "raincoat", "sunscreen", "scarf", "sunglasses", "warm hat"],
    "ATTIRE_NOT": ["jacket", "umbrella", "coat", "boots", "gloves"],
}

_DIALOG_ACT_TEXT = {"DG_NO": "No", "DG_YES": "Yes"}


def data_text(name: str) -> str:
    return resources.files("compgen").joinpath("data").joinpath(name).read_text(encoding="utf-8")


def _registry(name: str) -> TemplateRegistry:
    return load_registry(data_text(name))


def table1_registry() -> TemplateRegistry:
    return _registry("table1.tsv")


def weather_registry() -> TemplateRegistry:
    return _registry("weather_templates.tsv")


def reference_registry() -> TemplateRegistry:
    return _registry("weather_references.tsv")


def fig2_mr() -> MrTree:
    return parse_mr(data_text("fig2_mr.txt").strip())


def fig2_plain() -> str:
    return data_text("fig2_plain.txt").strip()


# --------------------------------------------------------------------------
# skeletons


def _location(rng: random.Random) -> MrNode:
    parts = [MrNode("CITY")]
    if rng.random() < 0.35:
        parts.append(MrNode("REGION"))
    if rng.random() < 0.3:
        parts.append(MrNode("COUNTRY"))
    return MrNode("LOCATION", tuple(parts))


def _time_place(rng: random.Random, p_time=0.7, p_loc=0.6) -> list[MrNode]:
    out = []
    if rng.random() < p_time:
        out.append(MrNode("DATE_TIME"))
    if rng.random() < p_loc:
        out.append(_location(rng))
    return out


def _inform(rng: random.Random) -> MrNode:
    args = []
    if rng.random() < 0.7:
        args.append(MrNode("CONDITION"))
        if rng.random() < 0.3:
            args.append(MrNode("HUMIDITY"))
    else:
        args.append(MrNode("CONDITION_NOT"))
    for label, p in (("TEMP_HIGH", 0.3), ("TEMP_LOW", 0.3), ("WIND_SPEED", 0.2), ("PRECIP_CHANCE", 0.2)):
        if rng.random() < p:
            args.append(MrNode(label))
    args.extend(_time_place(rng))
    return MrNode("DG_INFORM", tuple(args))


def _recommend(rng: random.Random) -> MrNode:
    attire = "ATTIRE" if rng.random() < 0.5 else "ATTIRE_NOT"
    return MrNode("DG_RECOMMEND", (MrNode(attire), *_time_place(rng)))


def _unit(rng: random.Random) -> MrNode:
    r = rng.random()
    if r < 0.45:
        return _inform(rng)
    if r < 0.65:
        return _recommend(rng)
    if r < 0.85:
        return MrNode("DS_JUSTIFY", (_recommend(rng), _inform(rng)))
    return MrNode("DS_CONTRAST", (_inform(rng), _inform(rng)))


def random_skeleton(rng: random.Random) -> MrTree:
    """An MR with labels only; see :func:`fill_values`."""
    nodes = []
    r = rng.random()
    if r < 0.25:
        nodes.append(MrNode("DG_NO"))
    elif r < 0.4:
        nodes.append(MrNode("DG_YES"))
    nodes.append(_unit(rng))
    if rng.random() < 0.3:
        nodes.append(_unit(rng))
    return MrTree(tuple(nodes))


def _fill(node: MrNode, rng: random.Random) -> MrNode:
    children = tuple(_fill(c, rng) for c in node.children)
    if node.label in _DIALOG_ACT_TEXT:
        return MrNode(node.label, (_DIALOG_ACT_TEXT[node.label],))
    if node.label in VALUES and not children:
        value = rng.choice(VALUES[node.label])
        return MrNode(node.label, tuple(value.split()))
    return MrNode(node.label, children)


def fill_values(skeleton: MrTree, rng: random.Random) -> MrTree:
    return MrTree(tuple(_fill(n, rng) for n in skeleton.nodes))


def _query(mr: MrTree, rng: random.Random) -> str:
    labels = extract_signature(mr).labels()
    if "DG_RECOMMEND" in labels:
        return rng.choice(["Should I bring a jacket", "Do I need an umbrella", "What should I wear"])
    return rng.choice(["What's the weather like", "Will it rain", "Is it going to be cold", "What's the forecast"])


def make_example(
    id: str,
    mr: MrTree,
    rng: random.Random,
    registry: TemplateRegistry | None = None,
    ref_registry: TemplateRegistry | None = None,
) -> Example:
    registry = registry or weather_registry()
    ref_registry = ref_registry or reference_registry()
    return Example(
        id=id,
        query=_query(mr, rng),
        mr=mr,
        reference=render(mr, ref_registry, RenderMode.ANNOTATED),
        template_text=render(mr, registry),
        schema_tag="weather",
    )


def make_corpus(
    n_examples: int,
    seed: int = 0,
    n_signatures: int | None = None,
    id_prefix: str = "ex",
) -> list[Example]:
    """Draw a corpus; with ``n_signatures`` the corpus spans exactly that many skeletons.

    Every skeleton gets at least one example when ``n_signatures`` is given.
    """
    rng = random.Random(seed)
    registry, ref_registry = weather_registry(), reference_registry()
    if n_signatures is None:
        skeletons = [random_skeleton(rng) for _ in range(n_examples)]
    else:
        if n_signatures > n_examples:
            raise ValueError("n_signatures exceeds n_examples")
        by_sig: dict[str, MrTree] = {}
        attempts = 0
        while len(by_sig) < n_signatures:
            sk = random_skeleton(rng)
            by_sig.setdefault(extract_signature(sk), sk)
            attempts += 1
            if attempts > 200 * n_signatures:
                raise ValueError(f"could only find {len(by_sig)} distinct skeletons")
        distinct = list(by_sig.values())
        skeletons = distinct + [rng.choice(distinct) for _ in range(n_examples - n_signatures)]
        rng.shuffle(skeletons)
    width = max(5, len(str(n_examples)))
    return [
        make_example(f"{id_prefix}{i:0{width}d}", fill_values(sk, rng), rng, registry, ref_registry)
        for i, sk in enumerate(skeletons)
    ]


def load_fixture_corpus() -> list[Example]:
    """The bundled 50-record corpus (the first record, id "fig2", is the worked-example MR)."""
    import json

    return [Example.from_dict(json.loads(line)) for line in data_text("fixture_corpus.jsonl").splitlines() if line]
