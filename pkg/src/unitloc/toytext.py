"""A deterministic lexicon-substitution toy language for desk-scale runs.

Source sentences are built from templates over a small English vocabulary;
the target side is the token-by-token dictionary image, in the same order, so
a sequence model can learn the "translation" exactly. Unit-bearing sentences
embed a quantity in one of four scenarios mirroring what web corpora contain:

* ``consistent``   imperial source, correctly converted metric target,
* ``copy_imperial`` both sides carry the same imperial expression,
* ``copy_metric``  both sides carry the same metric expression,
* ``approximate``  metric target rounded the way a human would.

Only the first scenario is already a localization example; the copy
scenarios are what ``locsynth`` exists to rewrite.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal
from random import Random

from .convert import ConversionSpec, convert
from .locsynth import ParallelSentence
from .quantity import Precision, Quantity, UnitKind
from .seeding import derive_rng

WORD_PAIRS = {
    "the": "der",
    "a": "ein",
    "is": "ist",
    "was": "war",
    "are": "sind",
    "and": "und",
    "in": "in",
    "from": "von",
    "near": "nahe",
    "to": "nach",
    "about": "etwa",
    "every": "jeden",
    "we": "wir",
    "they": "sie",
    "it": "es",
    "this": "dies",
    "old": "alte",
    "new": "neue",
    "small": "kleine",
    "large": "grosse",
    "quiet": "ruhige",
    "famous": "bekannte",
    "beautiful": "schoene",
    "busy": "belebte",
    "hotel": "hotel",
    "venue": "unterkunft",
    "village": "dorf",
    "harbor": "hafen",
    "museum": "museum",
    "station": "bahnhof",
    "market": "markt",
    "castle": "schloss",
    "river": "fluss",
    "forest": "wald",
    "garden": "garten",
    "bridge": "bruecke",
    "tower": "turm",
    "island": "insel",
    "lighthouse": "leuchtturm",
    "airport": "flughafen",
    "city": "stadt",
    "center": "zentrum",
    "coast": "kueste",
    "valley": "tal",
    "road": "strasse",
    "trail": "pfad",
    "lies": "liegt",
    "sits": "steht",
    "opens": "oeffnet",
    "closes": "schliesst",
    "visit": "besuchen",
    "reach": "erreichen",
    "see": "sehen",
    "love": "lieben",
    "morning": "morgen",
    "evening": "abend",
    "summer": "sommer",
    "winter": "winter",
    "water": "wasser",
    "weather": "wetter",
    "oven": "ofen",
    "air": "luft",
    "reached": "erreichte",
    "measured": "gemessen",
    "yesterday": "gestern",
    "today": "heute",
    "stays": "bleibt",
    "drops": "faellt",
    "rises": "steigt",
    "temperature": "temperatur",
    "drove": "fuhren",
    "walked": "liefen",
    "long": "lang",
    "away": "entfernt",
    ".": ".",
    ",": ",",
}

NOUNS = ["hotel", "venue", "village", "harbor", "museum", "station", "market", "castle", "river", "forest",
         "garden", "bridge", "tower", "island", "lighthouse", "airport", "city", "center", "coast", "valley"]
ADJS = ["old", "new", "small", "large", "quiet", "famous", "beautiful", "busy"]
TIMES = ["morning", "evening", "summer", "winter", "yesterday", "today"]

PLAIN_TEMPLATES = [
    "the {adj} {noun} is near the {noun2} .",
    "we visit the {adj} {noun} every {time} .",
    "the {noun} and the {noun2} are {adj} .",
    "they love the {adj} {noun} in the {noun2} .",
    "this {noun} opens every {time} .",
    "a {adj} {noun} lies near the {noun2} .",
    "we see the {noun} from the {noun2} .",
    "the {noun} closes in the {time} .",
    "they reach the {noun2} from the {adj} {noun} .",
    "it was a {adj} {time} in the {noun} .",
]

DISTANCE_TEMPLATES = [
    "the {noun} is {num} {unit} from the {noun2} .",
    "we drove {num} {unit} to the {noun} .",
    "the trail is about {num} {unit} long .",
    "the {noun} lies {num} {unit} away .",
    "they walked {num} {unit} to the {adj} {noun} .",
]

TEMPERATURE_TEMPLATES = [
    "the water was {num} {unit} {time} .",
    "the temperature stays about {num} {unit} in {time} .",
    "the air reached {num} {unit} in the {noun} .",
    "the weather drops to {num} {unit} every {time} .",
    "the oven was measured about {num} {unit} .",
]

SCENARIOS = ("consistent", "copy_imperial", "copy_metric", "approximate")

_UNIT_SURFACES = {
    ("distance", "imperial"): ("miles", "Meilen"),
    ("distance", "metric"): ("km", "km"),
    ("temperature", "imperial"): ("°F", "°F"),
    ("temperature", "metric"): ("°C", "°C"),
}


@dataclass(frozen=True)
class ToyCorpusSpec:
    n_plain: int = 1000
    n_unit_per_task: int = 500
    seed: int = 0
    pool_size_distance: int = 300
    pool_size_temperature: int = 150
    approximate_fraction: float = 0.03
    provenance_prefix: str = "toy"


def translate_tokens(tokens: list[str] | tuple[str, ...]) -> list[str]:
    """Word-by-word dictionary image of a source sentence."""
    return [WORD_PAIRS.get(tok, tok) for tok in tokens]


def _natural_pool(rng: Random, size: int, lengths: list[int], weights: list[float]) -> list[Quantity]:
    """A pool of distinct magnitudes skewed toward short, web-like values."""
    pool: set[tuple[str, str]] = set()
    out: list[Quantity] = []
    while len(out) < size:
        r = rng.random()
        acc = 0.0
        length = lengths[-1]
        for ln, w in zip(lengths, weights):
            acc += w
            if r < acc:
                length = ln
                break
        precision = Precision.ONE_DECIMAL if rng.random() < 0.4 else Precision.INTEGER
        integer = rng.randrange(10 ** (length - 1), 10**length)
        if precision is Precision.ONE_DECIMAL:
            mag = Decimal(integer * 10 + rng.randrange(10)).scaleb(-1)
        else:
            mag = Decimal(integer)
        key = (str(mag), precision.name)
        if key in pool:
            continue
        pool.add(key)
        out.append(Quantity(mag, UnitKind.MILE, precision))
    return out


def _fill(template: str, rng: Random, num: str | None = None, unit: str | None = None) -> list[str]:
    noun, noun2 = rng.sample(NOUNS, 2)
    text = template.format(
        adj=rng.choice(ADJS),
        noun=noun,
        noun2=noun2,
        time=rng.choice(TIMES),
        num=num or "",
        unit=unit or "",
    )
    return text.split()


def _render_number(q: Quantity, comma: bool) -> str:
    text = str(q.magnitude)
    return text.replace(".", ",") if comma else text


def _unit_sentence(
    rng: Random,
    template: str,
    scenario: str,
    source_q: Quantity,
    spec: ConversionSpec,
    provenance: str,
) -> ParallelSentence:
    dimension = spec.dimension
    imp_surface_src, imp_surface_tgt = _UNIT_SURFACES[(dimension, "imperial")]
    met_surface_src, met_surface_tgt = _UNIT_SURFACES[(dimension, "metric")]
    converted = convert(source_q, spec)

    if scenario == "copy_metric":
        src_num, src_unit = _render_number(converted, comma=False), met_surface_src
        tgt_num, tgt_unit = _render_number(converted, comma=rng.random() < 0.3), met_surface_tgt
    elif scenario == "copy_imperial":
        src_num, src_unit = _render_number(source_q, comma=False), imp_surface_src
        tgt_num, tgt_unit = _render_number(source_q, comma=False), imp_surface_tgt
    elif scenario == "approximate":
        jitter = Decimal(rng.choice([-4, -2, 2, 4])) * converted.precision.ulp
        rounded = max(Decimal(0), converted.magnitude + jitter)
        human = Quantity(rounded, converted.unit, converted.precision)
        src_num, src_unit = _render_number(source_q, comma=False), imp_surface_src
        tgt_num, tgt_unit = _render_number(human, comma=rng.random() < 0.3), met_surface_tgt
    else:  # consistent
        src_num, src_unit = _render_number(source_q, comma=False), imp_surface_src
        tgt_num, tgt_unit = _render_number(converted, comma=rng.random() < 0.3), met_surface_tgt

    source = _fill(template, rng, num=src_num, unit=src_unit)
    target = translate_tokens(source)
    # swap in the target-side expression at the source number/unit offsets
    for i, tok in enumerate(source):
        if tok == src_num:
            target[i] = tgt_num
        elif tok == src_unit:
            target[i] = tgt_unit
    return ParallelSentence(tuple(source), tuple(target), provenance)


@dataclass
class ToyCorpus:
    plain: list[ParallelSentence]
    unit: list[ParallelSentence]

    @property
    def all_sentences(self) -> list[ParallelSentence]:
        return self.plain + self.unit


def generate_toy_corpus(spec: ToyCorpusSpec, registry: dict[str, ConversionSpec]) -> ToyCorpus:
    """Generate the toy parallel corpus: plain sentences plus unit-bearing ones."""
    rng = derive_rng(spec.seed, "toytext")
    plain: list[ParallelSentence] = []
    for i in range(spec.n_plain):
        source = _fill(rng.choice(PLAIN_TEMPLATES), rng)
        plain.append(ParallelSentence(tuple(source), tuple(translate_tokens(source)), f"{spec.provenance_prefix}-plain-{i}"))

    pools = {
        "mtokm": [
            Quantity(q.magnitude, UnitKind.MILE, q.precision)
            for q in _natural_pool(rng, spec.pool_size_distance, [1, 2, 3, 4], [0.30, 0.35, 0.25, 0.10])
        ],
        "ftoc": [
            Quantity(q.magnitude, UnitKind.FAHRENHEIT, q.precision)
            for q in _natural_pool(rng, spec.pool_size_temperature, [1, 2, 3], [0.25, 0.55, 0.20])
        ],
    }
    templates = {"mtokm": DISTANCE_TEMPLATES, "ftoc": TEMPERATURE_TEMPLATES}

    unit: list[ParallelSentence] = []
    for task, pool in pools.items():
        conv = registry[task]
        for i in range(spec.n_unit_per_task):
            r = rng.random()
            if r < spec.approximate_fraction:
                scenario = "approximate"
            elif r < spec.approximate_fraction + 0.30:
                scenario = "copy_imperial"
            elif r < spec.approximate_fraction + 0.55:
                scenario = "copy_metric"
            else:
                scenario = "consistent"
            source_q = pool[rng.randrange(len(pool))]
            unit.append(
                _unit_sentence(rng, rng.choice(templates[task]), scenario, source_q, conv, f"{spec.provenance_prefix}-{task}-{i}")
            )
    return ToyCorpus(plain=plain, unit=unit)
