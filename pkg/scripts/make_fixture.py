#!/usr/bin/env python3
"""Regenerate the bundled 200-sentence fixture corpus (committed as data)."""

from pathlib import Path

from unitloc.convert import default_registry
from unitloc.toytext import ToyCorpusSpec, generate_toy_corpus

OUT = Path(__file__).resolve().parent.parent / "src" / "unitloc" / "data" / "fixtures"


def main() -> None:
    spec = ToyCorpusSpec(
        n_plain=60,
        n_unit_per_task=70,
        seed=20260809,
        pool_size_distance=40,
        pool_size_temperature=25,
        approximate_fraction=0.05,
        provenance_prefix="fixture",
    )
    corpus = generate_toy_corpus(spec, default_registry())
    OUT.mkdir(parents=True, exist_ok=True)
    with open(OUT / "fixture.src", "w", encoding="utf-8") as src, open(OUT / "fixture.tgt", "w", encoding="utf-8") as tgt:
        for sentence in corpus.all_sentences:
            src.write(" ".join(sentence.source) + "\n")
            tgt.write(" ".join(sentence.target) + "\n")
    print(f"wrote {len(corpus.all_sentences)} sentence pairs to {OUT}")


if __name__ == "__main__":
    main()
