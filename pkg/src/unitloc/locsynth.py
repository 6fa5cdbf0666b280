"""Localization corpus synthesis from user-supplied parallel text.

Sentences carrying a unit expression on both sides are normalized so that the
source carries the imperial quantity and the target its metric counterpart.
The matched quantity drives the rewrite: a metric value found on the target
keeps its place and the source span is rewritten with the inverse conversion
(an integer ``5 km`` becomes ``3 . 1 miles``); an imperial value found on the
source keeps its place and the target is rewritten with the forward
conversion. Sides that already carry a task-compatible quantity in the
correct unit system keep their original value; numeric spans are always
re-emitted digit-tokenized.

Natural pairs whose two sides disagree beyond the one-truncation-per-side
round-trip bound (human rounding such as "500 miles" / "800 km") are retained
and flagged approximate rather than discarded.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from decimal import Decimal
from enum import Enum
from fractions import Fraction
from pathlib import Path
from random import Random
from typing import Callable, Iterable, Sequence

from .convert import ConversionSpec, convert, convert_exact, invert, round_trip_bound, spec_for_unit
from .quantity import (
    Lexicon,
    MalformedNumber,
    Precision,
    Quantity,
    TokenSpan,
    UnitKind,
    format_quantity,
    scan_quantity,
)
from .seeding import derive_rng


class Side(Enum):
    SOURCE = "SOURCE"
    TARGET = "TARGET"


class AmbiguousMatch(Exception):
    """The two sides carry quantities that cannot be reconciled."""


class ConversionInconsistent(Exception):
    """The untouched side's quantity fails the round-trip bound (strict mode)."""


class InsufficientData(Exception):
    """Fewer usable matches than the demanded corpus sizes."""


@dataclass(frozen=True)
class ParallelSentence:
    source: tuple[str, ...]
    target: tuple[str, ...]
    provenance: str = ""

    def __post_init__(self) -> None:
        if not self.source or not self.target:
            raise ValueError("both sides of a parallel sentence must be non-empty")


@dataclass(frozen=True)
class UnitMatch:
    side: Side
    span: TokenSpan
    quantity: Quantity
    trailing: str = ""  # punctuation carried on the unit token


@dataclass(frozen=True)
class LocExample:
    """A normalized localization example: imperial source, metric target."""

    sentence: ParallelSentence
    source_quantity: Quantity
    target_quantity: Quantity
    task: str
    source_span: TokenSpan
    target_span: TokenSpan
    approximate: bool = False

    @property
    def conversion_key(self) -> tuple[str, str, str]:
        return (self.task, str(self.source_quantity.magnitude), str(self.target_quantity.magnitude))


def _scan_side(tokens: tuple[str, ...], lexicon: Lexicon, side: Side) -> list[UnitMatch]:
    matches: list[UnitMatch] = []
    i = 0
    while i < len(tokens):
        try:
            found = scan_quantity(tokens, i, lexicon)
        except MalformedNumber:
            found = None
        if found is None:
            i += 1
            continue
        quantity, span, trailing = found
        matches.append(UnitMatch(side, span, quantity, trailing))
        i = span.stop
    return matches


def find_unit_mentions(sentence: ParallelSentence, lexicon: Lexicon) -> list[UnitMatch]:
    """All non-overlapping number+unit occurrences on both sides, source first."""
    return _scan_side(sentence.source, lexicon, Side.SOURCE) + _scan_side(sentence.target, lexicon, Side.TARGET)


def _invert_for_rewrite(q: Quantity, spec: ConversionSpec) -> Quantity:
    """Inverse precision policy for rewrites: keep the metric side's precision
    when the inverse is exact at it (0 °C becomes 32 °F), otherwise render one
    decimal finer (5 km becomes 3.1 miles)."""
    at_source_precision = invert(q, spec, q.precision)
    if convert_exact(at_source_precision.magnitude, spec) == Fraction(q.magnitude):
        return at_source_precision
    return invert(q, spec, Precision.ONE_DECIMAL)


def _rewrite_span(tokens: tuple[str, ...], span: TokenSpan, new_tokens: list[str], trailing: str) -> tuple[tuple[str, ...], TokenSpan]:
    if trailing:
        new_tokens = new_tokens[:-1] + [new_tokens[-1] + trailing]
    out = tokens[: span.start] + tuple(new_tokens) + tokens[span.stop :]
    return out, TokenSpan(span.start, span.start + len(new_tokens))


def synthesize_loc_example(
    sentence: ParallelSentence,
    match: UnitMatch,
    registry: dict[str, ConversionSpec],
    lexicon: Lexicon,
    strict: bool = False,
) -> LocExample:
    """Build a normalized LocExample around one selected match.

    The opposite side must carry exactly one task-compatible mention;
    anything else raises AmbiguousMatch. In strict mode a kept natural side
    that fails the round-trip bound raises ConversionInconsistent instead of
    being flagged approximate.
    """
    spec = spec_for_unit(registry, match.quantity.unit)
    mentions = {Side.SOURCE: _scan_side(sentence.source, lexicon, Side.SOURCE),
                Side.TARGET: _scan_side(sentence.target, lexicon, Side.TARGET)}
    other_side = Side.TARGET if match.side is Side.SOURCE else Side.SOURCE
    others = mentions[other_side]
    if len(others) != 1:
        raise AmbiguousMatch(f"expected exactly one mention on {other_side.name}, found {len(others)}")
    counterpart = others[0]
    if counterpart.quantity.unit.dimension != match.quantity.unit.dimension:
        raise AmbiguousMatch(
            f"sides carry unrelated quantities: {match.quantity.unit.name} vs {counterpart.quantity.unit.name}"
        )

    # normal-form pair derived from the matched quantity
    if match.quantity.unit.is_imperial:
        pair_imp = match.quantity
        pair_met = convert(match.quantity, spec)
    else:
        pair_met = match.quantity
        pair_imp = _invert_for_rewrite(match.quantity, spec)

    src_mention = match if match.side is Side.SOURCE else counterpart
    tgt_mention = match if match.side is Side.TARGET else counterpart

    q_src = src_mention.quantity if src_mention.quantity.unit.is_imperial else pair_imp
    q_tgt = tgt_mention.quantity if tgt_mention.quantity.unit.is_metric else pair_met

    approximate = False
    gap = abs(convert_exact(q_src.magnitude, spec) - Fraction(q_tgt.magnitude))
    if gap > round_trip_bound(spec, q_src.precision, q_tgt.precision):
        if strict:
            raise ConversionInconsistent(
                f"{q_src.magnitude} {q_src.unit.name} vs {q_tgt.magnitude} {q_tgt.unit.name} beyond round-trip bound"
            )
        approximate = True

    new_source, src_span = _rewrite_span(
        sentence.source, src_mention.span, format_quantity(q_src, "digit-tokenized", lexicon), src_mention.trailing
    )
    new_target, tgt_span = _rewrite_span(
        sentence.target, tgt_mention.span, format_quantity(q_tgt, "digit-tokenized", lexicon), tgt_mention.trailing
    )
    return LocExample(
        sentence=ParallelSentence(new_source, new_target, sentence.provenance),
        source_quantity=q_src,
        target_quantity=q_tgt,
        task=spec.name,
        source_span=src_span,
        target_span=tgt_span,
        approximate=approximate,
    )


def _usable_match(sentence: ParallelSentence, lexicon: Lexicon) -> UnitMatch | None:
    """Select the authoritative match for a sentence, or None when unusable.

    Usable sentences carry exactly one mention per side, same dimension.
    Target-side metric mentions are preferred (the paper's reference-driven
    rewrite), then source-side imperial, then whatever the target has.
    """
    src = _scan_side(sentence.source, lexicon, Side.SOURCE)
    tgt = _scan_side(sentence.target, lexicon, Side.TARGET)
    if len(src) != 1 or len(tgt) != 1:
        return None
    if src[0].quantity.unit.dimension != tgt[0].quantity.unit.dimension:
        return None
    if tgt[0].quantity.unit.is_metric:
        return tgt[0]
    if src[0].quantity.unit.is_imperial:
        return src[0]
    return tgt[0]


@dataclass(frozen=True)
class LocSplitPolicy:
    """Per-task train/test sizes and the split seed."""

    train_size: int
    test_size: int
    seed: int = 0


@dataclass
class LocCorpus:
    task: str
    train: list[LocExample]
    test: list[LocExample]
    stats: dict


def build_loc_corpus(
    sentences: Iterable[ParallelSentence],
    lexicon: Lexicon,
    registry: dict[str, ConversionSpec],
    policy: LocSplitPolicy,
) -> dict[str, LocCorpus]:
    """Synthesize per-task Loc corpora with disjoint train/test splits.

    Distinct conversion pairs are split evenly (seeded) between train and
    test; sentences follow their conversion pair, so neither a conversion
    nor a sentence can appear on both sides. Raises InsufficientData when a
    task cannot fill the demanded sizes.
    """
    examples: dict[str, list[LocExample]] = {name: [] for name in registry}
    matched = {name: 0 for name in registry}
    seen_sentences: set[tuple[tuple[str, ...], tuple[str, ...]]] = set()
    for sentence in sentences:
        key = (sentence.source, sentence.target)
        if key in seen_sentences:
            continue
        seen_sentences.add(key)
        match = _usable_match(sentence, lexicon)
        if match is None:
            continue
        try:
            example = synthesize_loc_example(sentence, match, registry, lexicon)
        except AmbiguousMatch:
            continue
        matched[example.task] += 1
        examples[example.task].append(example)

    corpora: dict[str, LocCorpus] = {}
    for task, task_examples in examples.items():
        by_key: dict[tuple, list[LocExample]] = {}
        for ex in task_examples:
            by_key.setdefault(ex.conversion_key, []).append(ex)
        keys = sorted(by_key)  # deterministic before shuffling
        rng = derive_rng(policy.seed, "locsynth", task, "split")
        rng.shuffle(keys)
        half = len(keys) // 2
        train_keys, test_keys = keys[half:], keys[:half]
        train_pool = [ex for k in train_keys for ex in by_key[k]]
        test_pool = [ex for k in test_keys for ex in by_key[k]]
        if len(train_pool) < policy.train_size or len(test_pool) < policy.test_size:
            raise InsufficientData(
                f"task {task}: {len(train_pool)} train / {len(test_pool)} test candidates "
                f"for demanded {policy.train_size}/{policy.test_size}"
            )
        rng.shuffle(train_pool)
        rng.shuffle(test_pool)
        corpora[task] = LocCorpus(
            task=task,
            train=train_pool[: policy.train_size],
            test=test_pool[: policy.test_size],
            stats={
                "matched_sentences": matched[task],
                "distinct_conversions": len(keys),
                "train": policy.train_size,
                "test": policy.test_size,
                "approximate_train": sum(1 for ex in train_pool[: policy.train_size] if ex.approximate),
            },
        )
    return corpora


QuantitySampler = Callable[[Random], Quantity]


def uniform_quantity_sampler(
    unit: UnitKind,
    digit_lengths: tuple[int, int] = (1, 6),
    precision_mix: float = 0.5,
    exclude: frozenset[Decimal] | set[Decimal] = frozenset(),
) -> QuantitySampler:
    """Uniform-digit-length source sampler used for up-sampling and challenge sets."""

    lo, hi = digit_lengths

    def sample(rng: Random) -> Quantity:
        while True:
            length = rng.randrange(lo, hi + 1)
            precision = Precision.ONE_DECIMAL if rng.random() < precision_mix else Precision.INTEGER
            integer = rng.randrange(10 ** (length - 1), 10**length)
            if precision is Precision.ONE_DECIMAL:
                mag = Decimal(integer * 10 + rng.randrange(10)).scaleb(-1)
            else:
                mag = Decimal(integer)
            if mag not in exclude:
                return Quantity(mag, unit, precision)

    return sample


def substitute_quantities(
    example: LocExample,
    source_quantity: Quantity,
    registry: dict[str, ConversionSpec],
    lexicon: Lexicon,
) -> LocExample:
    """Replace an example's conversion with a new one, consistently on both sides."""
    spec = registry[example.task]
    target_quantity = convert(source_quantity, spec)
    new_source, src_span = _rewrite_span(
        example.sentence.source, example.source_span, format_quantity(source_quantity, "digit-tokenized", lexicon), ""
    )
    new_target, tgt_span = _rewrite_span(
        example.sentence.target, example.target_span, format_quantity(target_quantity, "digit-tokenized", lexicon), ""
    )
    return LocExample(
        sentence=ParallelSentence(new_source, new_target, example.sentence.provenance),
        source_quantity=source_quantity,
        target_quantity=target_quantity,
        task=example.task,
        source_span=src_span,
        target_span=tgt_span,
        approximate=False,
    )


def upsample_contexts(
    examples: Sequence[LocExample],
    target_size: int,
    sampler: QuantitySampler,
    seed: int,
    registry: dict[str, ConversionSpec],
    lexicon: Lexicon,
) -> list[LocExample]:
    """Reuse linguistic contexts with freshly sampled, consistent conversions.

    Contexts are cycled in seeded-shuffled order so each is reused evenly;
    the sampled source value is converted to produce the target, so every
    output pair satisfies the conversion relation exactly.
    """
    if not examples:
        raise ValueError("cannot up-sample an empty Loc corpus")
    rng = derive_rng(seed, "locsynth", "upsample")
    order = list(range(len(examples)))
    rng.shuffle(order)
    out: list[LocExample] = []
    for i in range(target_size):
        template = examples[order[i % len(order)]]
        out.append(substitute_quantities(template, sampler(rng), registry, lexicon))
    return out


@dataclass(frozen=True)
class ChallengeSpec:
    """Challenge-set construction: same contexts, uniform digit lengths."""

    base: tuple[LocExample, ...]
    digit_lengths: tuple[int, int] = (1, 6)
    seed: int = 0
    exclude: frozenset[Decimal] = frozenset()  # training conversions to avoid


def build_challenge_set(
    spec: ChallengeSpec,
    registry: dict[str, ConversionSpec],
    lexicon: Lexicon,
) -> list[LocExample]:
    """Replace each base example's conversion with a uniform-length one."""
    if not spec.base:
        raise ValueError("challenge set needs a non-empty base corpus")
    rng = derive_rng(spec.seed, "locsynth", "challenge")
    out: list[LocExample] = []
    samplers: dict[str, QuantitySampler] = {}
    for example in spec.base:
        task_spec = registry[example.task]
        sampler = samplers.setdefault(
            example.task,
            uniform_quantity_sampler(task_spec.source_unit, spec.digit_lengths, 0.5, spec.exclude),
        )
        out.append(substitute_quantities(example, sampler(rng), registry, lexicon))
    return out


def write_loc_corpus(examples: Sequence[LocExample], out_dir: str | Path, name: str) -> dict[str, Path]:
    """Write aligned text files plus a JSON-lines metadata sidecar."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    src_path, tgt_path, meta_path = out / f"{name}.src", out / f"{name}.tgt", out / f"{name}.meta.jsonl"
    with open(src_path, "w", encoding="utf-8") as src, open(tgt_path, "w", encoding="utf-8") as tgt, open(
        meta_path, "w", encoding="utf-8"
    ) as meta:
        for ex in examples:
            src.write(" ".join(ex.sentence.source) + "\n")
            tgt.write(" ".join(ex.sentence.target) + "\n")
            meta.write(
                json.dumps(
                    {
                        "provenance": ex.sentence.provenance,
                        "task": ex.task,
                        "source_magnitude": str(ex.source_quantity.magnitude),
                        "source_unit": ex.source_quantity.unit.name,
                        "source_precision": ex.source_quantity.precision.name,
                        "target_magnitude": str(ex.target_quantity.magnitude),
                        "target_unit": ex.target_quantity.unit.name,
                        "target_precision": ex.target_quantity.precision.name,
                        "source_span": [ex.source_span.start, ex.source_span.stop],
                        "target_span": [ex.target_span.start, ex.target_span.stop],
                        "approximate": ex.approximate,
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )
    return {"src": src_path, "tgt": tgt_path, "meta": meta_path}


def read_loc_corpus(out_dir: str | Path, name: str) -> list[LocExample]:
    out = Path(out_dir)
    examples: list[LocExample] = []
    with open(out / f"{name}.src", encoding="utf-8") as src, open(out / f"{name}.tgt", encoding="utf-8") as tgt, open(
        out / f"{name}.meta.jsonl", encoding="utf-8"
    ) as meta:
        for src_line, tgt_line, meta_line in zip(src, tgt, meta):
            doc = json.loads(meta_line)
            examples.append(
                LocExample(
                    sentence=ParallelSentence(
                        tuple(src_line.rstrip("\n").split(" ")),
                        tuple(tgt_line.rstrip("\n").split(" ")),
                        doc["provenance"],
                    ),
                    source_quantity=Quantity(
                        Decimal(doc["source_magnitude"]), UnitKind[doc["source_unit"]], Precision[doc["source_precision"]]
                    ),
                    target_quantity=Quantity(
                        Decimal(doc["target_magnitude"]), UnitKind[doc["target_unit"]], Precision[doc["target_precision"]]
                    ),
                    task=doc["task"],
                    source_span=TokenSpan(*doc["source_span"]),
                    target_span=TokenSpan(*doc["target_span"]),
                    approximate=doc["approximate"],
                )
            )
    return examples


def read_parallel_sentences(src_path: str | Path, tgt_path: str | Path, prefix: str = "") -> list[ParallelSentence]:
    """Read a raw parallel corpus, one whitespace-tokenized sentence per line."""
    sentences = []
    with open(src_path, encoding="utf-8") as src, open(tgt_path, encoding="utf-8") as tgt:
        for i, (s, t) in enumerate(zip(src, tgt)):
            s_toks, t_toks = tuple(s.split()), tuple(t.split())
            if s_toks and t_toks:
                sentences.append(ParallelSentence(s_toks, t_toks, f"{prefix}{i}"))
    return sentences


def fixture_corpus() -> list[ParallelSentence]:
    """The bundled 200-sentence parallel fixture corpus."""
    from importlib import resources

    root = resources.files("unitloc.data").joinpath("fixtures")
    src_lines = root.joinpath("fixture.src").read_text(encoding="utf-8").splitlines()
    tgt_lines = root.joinpath("fixture.tgt").read_text(encoding="utf-8").splitlines()
    return [
        ParallelSentence(tuple(s.split()), tuple(t.split()), f"fixture-{i}")
        for i, (s, t) in enumerate(zip(src_lines, tgt_lines))
    ]
