"""Synthetic conversion corpora with controlled digit-length distributions.

Each example pairs a digit-tokenized source quantity with its converted
target. Digit length is uniform over the configured range; within a length
the integer part is uniform; precision is a Bernoulli draw between integer
and one-decimal values. Splits are disjoint by source magnitude: the value
space of each digit length is partitioned across the splits up front, and
sampling draws (with replacement, so short lengths over-sample naturally)
only from the split's own partition.

Values are handled as integer counts of tenths so the partition covers
integer and one-decimal magnitudes in one space (3 and 3.0 are the same
value and can never land in different splits).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from decimal import Decimal
from pathlib import Path
from random import Random
from typing import Sequence

from .convert import ConversionSpec, convert
from .quantity import Lexicon, Precision, Quantity, format_quantity
from .seeding import derive_rng, derive_seed

SPLITS = ("train", "validation", "test")

# test sets cover the large-magnitude range only (values in [10^3, 10^6))
TEST_MIN_LENGTH = 4

# digit-length value spaces up to this many tenths values are enumerated and
# partitioned exactly; larger spaces use keyed-hash assignment
_ENUMERATE_LIMIT = 100_000


class InfeasibleSplit(Exception):
    """Disjoint splits cannot be satisfied for the demanded configuration."""


@dataclass(frozen=True)
class ConvDatasetSpec:
    """Configuration for one synthetic conversion dataset."""

    task: str
    size: int
    digit_lengths: tuple[int, int] = (1, 6)
    precision_mix: float = 0.5  # fraction of ONE_DECIMAL examples
    seed: int = 0
    style: str = "digit-tokenized"
    validation_size: int = 1000
    test_size: int = 2000

    def __post_init__(self) -> None:
        lo, hi = self.digit_lengths
        if self.size <= 0:
            raise ValueError("size must be positive")
        if not (1 <= lo <= hi <= 6):
            raise ValueError("digit_lengths must lie within [1, 6]")
        if not 0.0 <= self.precision_mix <= 1.0:
            raise ValueError("precision_mix must be in [0, 1]")


@dataclass
class SplitManifest:
    """Counts and the per-split sets of source magnitudes (in tenths)."""

    task: str
    seed: int
    counts: dict[str, int]
    magnitudes: dict[str, set[int]]
    digit_lengths: tuple[int, int]

    def value_ranges(self) -> dict[str, tuple[str, str]]:
        out = {}
        for split, values in self.magnitudes.items():
            if values:
                out[split] = (str(Decimal(min(values)).scaleb(-1)), str(Decimal(max(values)).scaleb(-1)))
            else:
                out[split] = ("", "")
        return out

    def to_json_dict(self) -> dict:
        return {
            "task": self.task,
            "seed": self.seed,
            "counts": self.counts,
            "digit_lengths": list(self.digit_lengths),
            "value_ranges": {k: list(v) for k, v in self.value_ranges().items()},
            "distinct_magnitudes": {k: len(v) for k, v in self.magnitudes.items()},
        }


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
    return x ^ (x >> 31)


def _length_space(length: int) -> tuple[int, int]:
    """Inclusive tenths range of magnitudes with this integer-part length."""
    return 10**length, 10 ** (length + 1) - 1


def _proportional_blocks(values: list[int], demands: list[int], reserve_min: bool) -> list[list[int]]:
    """Cut a shuffled value list into contiguous blocks proportional to demand.

    With ``reserve_min`` every block is guaranteed at least one value; raises
    InfeasibleSplit when that cannot be met.
    """
    n_blocks = len(demands)
    if reserve_min and len(values) < n_blocks:
        raise InfeasibleSplit(f"{n_blocks} disjoint splits demanded from {len(values)} distinct values")
    floor = 1 if reserve_min else 0
    spare = len(values) - floor * n_blocks
    total = sum(demands)
    shares = [floor + int(spare * d / total) for d in demands]
    leftover = len(values) - sum(shares)
    order = sorted(range(n_blocks), key=lambda i: -demands[i])
    for i in range(leftover):
        shares[order[i % n_blocks]] += 1
    blocks = []
    cut = 0
    for share in shares:
        blocks.append(values[cut : cut + share])
        cut += share
    return blocks


class _SplitAssigner:
    """Partitions each digit length's value space across the demanding splits.

    Values are tenths integers. Multiples of 10 (renderable at either
    precision) and non-multiples are allocated separately so that every
    demanding split keeps at least one integer-precision value. Small spaces
    are enumerated and cut exactly; large spaces use a keyed hash with the
    same proportions. ONE_DECIMAL draws come from the split's whole pool, so
    the fractional digit stays uniform over 0..9.
    """

    def __init__(self, spec: ConvDatasetSpec, demands: dict[str, dict[int, int]]):
        self.spec = spec
        self.demands = demands
        self.seed = derive_seed(spec.seed, "datagen", spec.task, "partition")
        self._int_pools: dict[tuple[int, str], list[int]] = {}
        self._all_pools: dict[tuple[int, str], list[int]] = {}
        self._hash_weights: dict[int, list[tuple[str, float]]] = {}
        lo, hi = spec.digit_lengths
        for length in range(lo, hi + 1):
            active = [s for s in SPLITS if demands[s].get(length, 0) > 0]
            if not active:
                continue
            start, stop = _length_space(length)
            if stop - start + 1 <= _ENUMERATE_LIMIT:
                self._partition_enumerated(length, active)
            else:
                total = sum(demands[s][length] for s in active)
                self._hash_weights[length] = [(s, demands[s][length] / total) for s in active]

    def _partition_enumerated(self, length: int, active: list[str]) -> None:
        start, stop = _length_space(length)
        rng = Random(derive_seed(self.seed, "enum", length))
        split_demands = [self.demands[s][length] for s in active]
        needs_integers = self.spec.precision_mix < 1.0

        multiples = [t for t in range(start, stop + 1) if t % 10 == 0]
        rng.shuffle(multiples)
        int_blocks = _proportional_blocks(multiples, split_demands, reserve_min=needs_integers)

        fractions = [t for t in range(start, stop + 1) if t % 10 != 0]
        rng.shuffle(fractions)
        frac_blocks = _proportional_blocks(fractions, split_demands, reserve_min=self.spec.precision_mix == 1.0)

        for split, ints, fracs in zip(active, int_blocks, frac_blocks):
            self._int_pools[(length, split)] = ints
            self._all_pools[(length, split)] = ints + fracs

    def split_of(self, tenths: int, length: int) -> str:
        weights = self._hash_weights[length]
        u = _splitmix64(self.seed ^ _splitmix64(tenths)) / 2**64
        acc = 0.0
        for split, w in weights:
            acc += w
            if u < acc:
                return split
        return weights[-1][0]

    def draw(self, rng: Random, split: str, length: int, precision: Precision) -> int:
        """One magnitude (in tenths) of the given length from the split's pool."""
        key = (length, split)
        if key in self._all_pools:
            pool = self._int_pools[key] if precision is Precision.INTEGER else self._all_pools[key]
            if not pool:
                raise InfeasibleSplit(f"split {split} has no available value at digit length {length}")
            return pool[rng.randrange(len(pool))]
        start, stop = _length_space(length)
        while True:
            if precision is Precision.INTEGER:
                t = rng.randrange(start // 10, stop // 10 + 1) * 10
            else:
                t = rng.randrange(start, stop + 1)
            if self.split_of(t, length) == split:
                return t


def sample_quantity(spec: ConvDatasetSpec, rng: Random, unit, assigner: _SplitAssigner | None = None, split: str = "train", lengths: Sequence[int] | None = None) -> Quantity:
    """Draw one source quantity per the dataset spec's distribution."""
    lo, hi = spec.digit_lengths
    choices = list(lengths) if lengths is not None else list(range(lo, hi + 1))
    length = choices[rng.randrange(len(choices))]
    precision = Precision.ONE_DECIMAL if rng.random() < spec.precision_mix else Precision.INTEGER
    if assigner is None:
        start, stop = _length_space(length)
        t = rng.randrange(start, stop + 1)
        if precision is Precision.INTEGER:
            t -= t % 10
    else:
        t = assigner.draw(rng, split, length, precision)
    mag = Decimal(t).scaleb(-1)
    if precision is Precision.INTEGER:
        mag = Decimal(t // 10)
    return Quantity(mag, unit, precision)


@dataclass
class ConvCorpus:
    """Aligned source/target lines per split, plus the split manifest."""

    task: str
    lines: dict[str, list[tuple[str, str]]]
    manifest: SplitManifest

    def pairs(self, split: str = "train") -> list[tuple[str, str]]:
        return self.lines[split]


def _split_lengths(spec: ConvDatasetSpec, split: str) -> list[int]:
    lo, hi = spec.digit_lengths
    if split == "test":
        return [length for length in range(lo, hi + 1) if length >= TEST_MIN_LENGTH]
    return list(range(lo, hi + 1))


def generate_conv_dataset(
    spec: ConvDatasetSpec,
    conversion: ConversionSpec,
    lexicon: Lexicon | None = None,
) -> ConvCorpus:
    """Generate train/validation/test parallel corpora for one conversion.

    Raises InfeasibleSplit when magnitude-disjoint splits cannot be formed,
    including when a demanded test split has no digit length in the test
    range [10^3, 10^6).
    """
    if conversion.name != spec.task:
        raise ValueError(f"spec task {spec.task!r} does not match conversion {conversion.name!r}")
    lex = lexicon if lexicon is not None else Lexicon.default()
    sizes = {"train": spec.size, "validation": spec.validation_size, "test": spec.test_size}
    demands: dict[str, dict[int, int]] = {}
    for split, size in sizes.items():
        lengths = _split_lengths(spec, split)
        if size > 0 and not lengths:
            raise InfeasibleSplit(f"{split} split demands {size} examples but no digit length in range")
        demands[split] = {length: max(1, size // max(len(lengths), 1)) for length in lengths} if size > 0 else {}
    assigner = _SplitAssigner(spec, demands)

    lines: dict[str, list[tuple[str, str]]] = {}
    magnitudes: dict[str, set[int]] = {}
    for split, size in sizes.items():
        rng = derive_rng(spec.seed, "datagen", spec.task, split)
        seen: set[int] = set()
        out: list[tuple[str, str]] = []
        lengths = _split_lengths(spec, split) if size > 0 else []
        for _ in range(size):
            src = sample_quantity(spec, rng, conversion.source_unit, assigner, split, lengths)
            tgt = convert(src, conversion)
            seen.add(int(src.magnitude.scaleb(1)))
            out.append(
                (
                    " ".join(format_quantity(src, spec.style, lex)),
                    " ".join(format_quantity(tgt, spec.style, lex)),
                )
            )
        lines[split] = out
        magnitudes[split] = seen
    manifest = SplitManifest(
        task=spec.task,
        seed=spec.seed,
        counts={k: len(v) for k, v in lines.items()},
        magnitudes=magnitudes,
        digit_lengths=spec.digit_lengths,
    )
    return ConvCorpus(task=spec.task, lines=lines, manifest=manifest)


def mix_tasks(
    corpora: Sequence[Sequence[tuple[str, str]]],
    proportions: Sequence[float],
    seed: int = 0,
) -> list[tuple[str, str]]:
    """Interleave corpora at the demanded proportions, seeded shuffle.

    The largest multiple of the proportion vector that fits in the given
    corpora is used: equal-size corpora at 1:1 are taken whole; a zero
    proportion drops its corpus entirely.
    """
    if len(corpora) != len(proportions):
        raise ValueError("one proportion per corpus required")
    if all(p == 0 for p in proportions):
        return []
    base = min(len(c) / p for c, p in zip(corpora, proportions) if p > 0)
    rng = derive_rng(seed, "datagen", "mix")
    mixed: list[tuple[str, str]] = []
    for corpus, p in zip(corpora, proportions):
        if p == 0:
            continue
        k = int(base * p)
        picked = list(corpus) if k >= len(corpus) else rng.sample(list(corpus), k)
        mixed.extend(picked)
    rng.shuffle(mixed)
    return mixed


def write_parallel(pairs: Sequence[tuple[str, str]], src_path: str | Path, tgt_path: str | Path) -> None:
    """Write aligned source/target text files, one example per line."""
    with open(src_path, "w", encoding="utf-8") as src, open(tgt_path, "w", encoding="utf-8") as tgt:
        for s, t in pairs:
            src.write(s + "\n")
            tgt.write(t + "\n")


def read_parallel(src_path: str | Path, tgt_path: str | Path) -> list[tuple[str, str]]:
    with open(src_path, encoding="utf-8") as src, open(tgt_path, encoding="utf-8") as tgt:
        src_lines = [line.rstrip("\n") for line in src]
        tgt_lines = [line.rstrip("\n") for line in tgt]
    if len(src_lines) != len(tgt_lines):
        raise ValueError(f"{src_path} and {tgt_path} have different line counts")
    return list(zip(src_lines, tgt_lines))


def write_corpus(corpus: ConvCorpus, out_dir: str | Path) -> dict[str, Path]:
    """Write all splits plus the JSON manifest; returns the file map."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: dict[str, Path] = {}
    for split, pairs in corpus.lines.items():
        src = out / f"{corpus.task}.{split}.src"
        tgt = out / f"{corpus.task}.{split}.tgt"
        write_parallel(pairs, src, tgt)
        written[f"{split}.src"] = src
        written[f"{split}.tgt"] = tgt
    manifest_path = out / f"{corpus.task}.manifest.json"
    manifest_path.write_text(json.dumps(corpus.manifest.to_json_dict(), indent=2) + "\n", encoding="utf-8")
    written["manifest"] = manifest_path
    return written
