"""Acceptance suite: one test per criterion, one PASS line printed each.

Criteria 6-8 and 10 train desk-scale models on one CPU and are marked slow;
run the full gate with plain ``pytest`` (they are collected by default) or
skip them during development with ``-m "not slow"``. Set
UNITLOC_ACCEPTANCE_CACHE to a directory to reuse trained runs across
invocations while iterating.
"""

from __future__ import annotations

import json
import os
import time
from decimal import Decimal
from fractions import Fraction
from pathlib import Path
from random import Random

import pytest
import torch
from scipy import stats

from unitloc.checkpoint import load_checkpoint, save_checkpoint
from unitloc.convert import convert, convert_exact, default_registry, invert, parse_tolerance, round_trip_bound
from unitloc.datagen import ConvDatasetSpec, generate_conv_dataset
from unitloc.evaluation import bleu, conversion_accuracy
from unitloc.locsynth import (
    ChallengeSpec,
    LocSplitPolicy,
    build_challenge_set,
    build_loc_corpus,
    fixture_corpus,
    uniform_quantity_sampler,
    upsample_contexts,
)
from unitloc.model import ModelConfig, build_model, forward_loss, gradient_check, label_smoothed_loss
from unitloc.pipeline import decode_corpus, run_training
from unitloc.quantity import Lexicon, Precision, Quantity, UnitKind, digit_length, parse_quantity
from unitloc.seeding import derive_seed
from unitloc.toytext import ToyCorpusSpec, generate_toy_corpus
from unitloc.training import TrainConfig, Vocab, encode_examples, train

from _oracles import oracle_convert_tenths, tenths

torch.set_num_threads(1)

TOL = parse_tolerance("1e-4")


def report(criterion: int, ok: bool, detail: str) -> None:
    print(f"[acceptance] criterion {criterion}: {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, detail


@pytest.fixture(scope="session")
def lexicon():
    return Lexicon.default()


@pytest.fixture(scope="session")
def registry():
    return default_registry()


class TestCriterion1:
    def test_conversion_oracle_equivalence(self, registry):
        """10^5 seeded random quantities per task match the integer-arithmetic
        oracle exactly after truncation."""
        started = time.time()
        rng = Random(20260809)
        mismatches = 0
        n_per_task = 100_000
        for task in ("mtokm", "ftoc"):
            spec = registry[task]
            for _ in range(n_per_task):
                length = rng.randint(1, 6)
                precision = Precision.ONE_DECIMAL if rng.random() < 0.5 else Precision.INTEGER
                integer = rng.randint(10 ** (length - 1), 10**length - 1)
                if precision is Precision.ONE_DECIMAL:
                    magnitude = Decimal(integer * 10 + rng.randint(0, 9)).scaleb(-1)
                else:
                    magnitude = Decimal(integer)
                q = Quantity(magnitude, spec.source_unit, precision)
                got = convert(q, spec)
                expected_tenths = oracle_convert_tenths(tenths(q), task, precision)
                if tenths(got) != expected_tenths:
                    mismatches += 1
        elapsed = time.time() - started
        report(
            1,
            mismatches == 0 and elapsed < 10.0,
            f"{2 * n_per_task} conversions, {mismatches} mismatches, {elapsed:.1f}s (< 10s)",
        )


class TestCriterion2:
    def test_paper_example_fidelity(self, registry, lexicon):
        mtokm, ftoc = registry["mtokm"], registry["ftoc"]
        five_km = invert(Quantity(Decimal(5), UnitKind.KM, Precision.INTEGER), mtokm, Precision.ONE_DECIMAL)
        ok_invert = five_km == Quantity(Decimal("3.1"), UnitKind.MILE, Precision.ONE_DECIMAL)
        freezing = convert(Quantity(Decimal(32), UnitKind.FAHRENHEIT, Precision.INTEGER), ftoc)
        ok_freeze = freezing == Quantity(Decimal(0), UnitKind.CELSIUS, Precision.INTEGER)
        table_case = convert(Quantity(Decimal(521), UnitKind.MILE, Precision.INTEGER), mtokm)
        ok_truncate = table_case.magnitude == Decimal(838)
        # the 839 discrepancy is documented, not silently reconciled
        readme = Path(__file__).resolve().parent.parent / "README.md"
        ok_documented = "839" in readme.read_text(encoding="utf-8") and "839" in Path(
            Path(__file__).resolve().parent.parent / "src" / "unitloc" / "convert.py"
        ).read_text(encoding="utf-8")
        report(
            2,
            ok_invert and ok_freeze and ok_truncate and ok_documented,
            f"5 km -> {five_km.magnitude} miles, 32 F -> {freezing.magnitude} C, "
            f"521 mi -> {table_case.magnitude} km (truncation; 839 discrepancy documented: {ok_documented})",
        )


class TestCriterion3:
    def test_datagen_distribution_and_disjointness(self, registry, lexicon):
        spec = ConvDatasetSpec(task="mtokm", size=60_000, seed=17, validation_size=1000, test_size=2000)
        corpus = generate_conv_dataset(spec, registry["mtokm"], lexicon)
        counts = [0] * 6
        values: dict[str, set] = {}
        for split, pairs in corpus.lines.items():
            seen = set()
            for src_line, _ in pairs:
                q, _ = parse_quantity(src_line.split(), lexicon)
                seen.add(q.magnitude)
                if split == "train":
                    counts[digit_length(q) - 1] += 1
            values[split] = seen
        _, p_value = stats.chisquare(counts)
        violations = (
            len(values["train"] & values["validation"])
            + len(values["train"] & values["test"])
            + len(values["validation"] & values["test"])
        )
        report(
            3,
            p_value > 0.01 and violations == 0,
            f"60k-sample chi-square p={p_value:.3f} (> 0.01), split-disjointness violations={violations}",
        )


class TestCriterion4:
    def test_loc_synthesis_soundness(self, registry, lexicon):
        corpora = build_loc_corpus(fixture_corpus(), lexicon, registry, LocSplitPolicy(25, 12, seed=29))
        bad_relation = 0
        checked = 0

        def relation_ok(example, exact: bool) -> bool:
            spec = registry[example.task]
            gap = abs(convert_exact(example.source_quantity.magnitude, spec) - Fraction(example.target_quantity.magnitude))
            if exact and not example.approximate:
                forward = convert(
                    Quantity(example.source_quantity.magnitude, spec.source_unit, example.target_quantity.precision), spec
                )
                return forward.magnitude == example.target_quantity.magnitude
            bound = round_trip_bound(spec, example.source_quantity.precision, example.target_quantity.precision)
            return gap <= bound or example.approximate

        overlap = 0
        for task, loc in corpora.items():
            train_keys = {ex.conversion_key for ex in loc.train}
            test_keys = {ex.conversion_key for ex in loc.test}
            train_sentences = {(ex.sentence.source, ex.sentence.target) for ex in loc.train}
            test_sentences = {(ex.sentence.source, ex.sentence.target) for ex in loc.test}
            overlap += len(train_keys & test_keys) + len(train_sentences & test_sentences)
            for ex in loc.train + loc.test:
                checked += 1
                if not relation_ok(ex, exact=False):
                    bad_relation += 1
            sampler = uniform_quantity_sampler(registry[task].source_unit, (1, 6), 0.5)
            upsampled = upsample_contexts(loc.train, 50, sampler, seed=31, registry=registry, lexicon=lexicon)
            challenge = build_challenge_set(
                ChallengeSpec(
                    base=tuple(loc.test),
                    seed=37,
                    exclude=frozenset(ex.source_quantity.magnitude for ex in loc.train),
                ),
                registry,
                lexicon,
            )
            for ex in upsampled + challenge:
                checked += 1
                if not relation_ok(ex, exact=True):
                    bad_relation += 1
        report(
            4,
            bad_relation == 0 and overlap == 0 and checked > 100,
            f"{checked} fixture-derived pairs checked, {bad_relation} relation violations, train/test overlap={overlap}",
        )


class TestCriterion5:
    def test_model_core(self, tmp_path):
        started = time.time()
        micro = ModelConfig(
            src_vocab_size=12, tgt_vocab_size=12, encoder_layers=1, decoder_layers=1,
            model_size=8, attention_heads=2, feed_forward_hidden=16,
            dropout_act=0.0, dropout_attention=0.0, dropout_prepost=0.0, max_seq_len=16,
        )
        deviation = gradient_check(micro, seed=0)

        import math

        logits = torch.zeros(2, 5, 40)
        targets = torch.randint(4, 40, (2, 5))
        uniform_loss, _ = label_smoothed_loss(logits, targets, epsilon=0.1)
        uniform_gap = abs(uniform_loss.item() - math.log(40))

        vocab = Vocab.from_corpus(["0 1 2 3 4 5 6 7 8 9 a b c"])
        rng = Random(3)
        pairs = []
        for _ in range(32):
            src = " ".join(rng.choice("0123456789") for _ in range(4))
            tgt = " ".join(reversed(src.split()))
            pairs.append((src + " a", tgt))
        examples = encode_examples(pairs, vocab, vocab, None, max_len=12)
        overfit_cfg = ModelConfig(
            src_vocab_size=len(vocab), tgt_vocab_size=len(vocab), encoder_layers=1, decoder_layers=1,
            model_size=32, attention_heads=2, feed_forward_hidden=64,
            dropout_act=0.0, dropout_attention=0.0, dropout_prepost=0.0, max_seq_len=12,
        )
        model = build_model(overfit_cfg, seed=5)
        tcfg = TrainConfig(
            max_epochs=2000, batch_size=32, label_smoothing=0.0, lr_peak=1e-3,
            warmup_steps=100, patience=10**9, seed=7, eval_every_epochs=100,
        )
        result = train(model, examples, [], tcfg, tmp_path / "overfit")
        final_loss = result.history[-1]["loss"]
        steps = result.steps

        save_checkpoint(model, tmp_path / "rt.ulck", step=steps)
        reloaded, _ = load_checkpoint(tmp_path / "rt.ulck")
        batch = examples[:8]
        from unitloc.training import make_batch

        b = make_batch(batch)
        model.eval()
        loss_a, _ = forward_loss(model, b.src, None, b.tgt_in, b.tgt_out, 0.0)
        loss_b, _ = forward_loss(reloaded, b.src, None, b.tgt_in, b.tgt_out, 0.0)
        bit_exact = loss_a.item() == loss_b.item()
        elapsed = time.time() - started
        report(
            5,
            deviation < 1e-3 and uniform_gap < 1e-6 and final_loss < 0.1 and steps <= 2000 and bit_exact and elapsed < 300,
            f"grad dev={deviation:.2e} (<1e-3), uniform-logit gap={uniform_gap:.1e} (<1e-6), "
            f"overfit loss={final_loss:.3f} (<0.1) in {steps} steps (<=2000), checkpoint bit-exact={bit_exact}, "
            f"{elapsed:.0f}s (<300s)",
        )


class TestCriterion9:
    def test_bleu_correctness(self):
        corpus = ["the venue is near", "wir fuhren nach norden", "es ist kalt"]
        identity = bleu(corpus, list(corpus))
        empty = bleu([""], ["the venue"])
        hand = bleu(["the cat sat"], ["the cat sat down"])
        report(
            9,
            identity == 100.0 and empty == 0.0 and abs(hand - 71.65) <= 0.01,
            f"identity={identity}, empty={empty}, hand-derived example={hand:.2f} (71.65 +/- 0.01)",
        )


# --------------------------------------------------------------------------
# Slow criteria: desk-scale trainings on one CPU. Runs are cached per tag in
# UNITLOC_ACCEPTANCE_CACHE (if set) so reruns skip finished trainings.
# --------------------------------------------------------------------------

ACCEPT_SEED = 20260809
DESK_MODEL = dict()  # ModelConfig defaults ARE the desk config (2+1 layers, d=128)


@pytest.fixture(scope="session")
def run_root(tmp_path_factory):
    env = os.environ.get("UNITLOC_ACCEPTANCE_CACHE")
    if env:
        root = Path(env)
        root.mkdir(parents=True, exist_ok=True)
        return root
    return tmp_path_factory.mktemp("acceptance_runs")


def _cached(run_dir: Path, compute):
    marker = run_dir / "acceptance_result.json"
    if marker.exists():
        return json.loads(marker.read_text(encoding="utf-8"))
    result = compute()
    marker.parent.mkdir(parents=True, exist_ok=True)
    marker.write_text(json.dumps(result, indent=2) + "\n", encoding="utf-8")
    return result


def _accuracy(model, pipeline, pairs, lexicon) -> float:
    hyps = decode_corpus(model, pipeline, [s for s, _ in pairs], batch_size=256)
    return conversion_accuracy(hyps, [t for _, t in pairs], TOL, lexicon).accuracy


def _conv_corpus(task, size, registry, lexicon):
    spec = ConvDatasetSpec(task=task, size=size, seed=ACCEPT_SEED, validation_size=1000, test_size=2000)
    return generate_conv_dataset(spec, registry[task], lexicon)


def _conv_only_run(root: Path, task: str, size: int, max_epochs: int, registry, lexicon) -> dict:
    run_dir = root / f"conv_{task}_{size}"

    def compute():
        started = time.time()
        corpus = _conv_corpus(task, size, registry, lexicon)
        run = run_training(
            run_dir,
            corpus.lines["train"],
            corpus.lines["validation"],
            lexicon,
            model_cfg=dict(DESK_MODEL),
            train_cfg=TrainConfig(
                max_epochs=max_epochs, batch_size=256, patience=12, eval_every_epochs=2, selection="val_accuracy"
            ),
            seed=derive_seed(ACCEPT_SEED, "accept", task, size),
            val_accuracy_examples=400,
        )
        accuracy = _accuracy(run.model, run.pipeline, corpus.lines["test"], lexicon)
        return {"test_accuracy": accuracy, "steps": run.train_result.steps, "wall_seconds": time.time() - started}

    return _cached(run_dir, compute)


@pytest.fixture(scope="session")
def joint_data(registry, lexicon):
    """Shared data for the joint-training criteria: toy MT, Conv, Loc sets."""
    toy = generate_toy_corpus(
        ToyCorpusSpec(
            n_plain=20_000,
            n_unit_per_task=5_000,
            seed=ACCEPT_SEED,
            pool_size_distance=400,
            pool_size_temperature=200,
        ),
        registry,
    )
    mt_pairs = [(" ".join(s.source), " ".join(s.target)) for s in toy.plain]
    # a small held-out slice of plain sentences for validation
    mt_train, mt_val = mt_pairs[:-500], mt_pairs[-500:]
    conv = {task: _conv_corpus(task, 25_000, registry, lexicon) for task in ("ftoc", "mtokm")}
    corpora = build_loc_corpus(toy.all_sentences, lexicon, registry, LocSplitPolicy(2000, 700, seed=ACCEPT_SEED))
    loc_train, loc_test, challenge = {}, {}, {}
    for task, loc in corpora.items():
        sampler = uniform_quantity_sampler(registry[task].source_unit, (1, 6), 0.5)
        upsampled = upsample_contexts(
            loc.train, 5000, sampler, derive_seed(ACCEPT_SEED, "upsample", task), registry, lexicon
        )
        loc_train[task] = [(" ".join(ex.sentence.source), " ".join(ex.sentence.target)) for ex in upsampled]
        loc_test[task] = [(" ".join(ex.sentence.source), " ".join(ex.sentence.target)) for ex in loc.test]
        challenge_examples = build_challenge_set(
            ChallengeSpec(
                base=tuple(loc.test),
                digit_lengths=(1, 6),
                seed=derive_seed(ACCEPT_SEED, "challenge", task),
                exclude=frozenset(ex.source_quantity.magnitude for ex in loc.train),
            ),
            registry,
            lexicon,
        )
        challenge[task] = [(" ".join(ex.sentence.source), " ".join(ex.sentence.target)) for ex in challenge_examples]
    validation = mt_val + conv["ftoc"].lines["validation"][:250] + conv["mtokm"].lines["validation"][:250]
    return {
        "mt": mt_train,
        "conv": {task: c.lines["train"] for task, c in conv.items()},
        "loc_train": loc_train,
        "loc_test": loc_test,
        "challenge": challenge,
        "validation": validation,
    }


def _joint_run(root: Path, tag: str, data, with_conv: bool, with_loc: bool, max_epochs: int, lexicon) -> Path:
    run_dir = root / f"joint_{tag}"
    if (run_dir / "wall_seconds.json").exists():  # completion marker
        return run_dir
    started = time.time()
    train_pairs = list(data["mt"])
    if with_conv:
        train_pairs += data["conv"]["ftoc"] + data["conv"]["mtokm"]
    if with_loc:
        train_pairs += data["loc_train"]["ftoc"] + data["loc_train"]["mtokm"]
    run_training(
        run_dir,
        train_pairs,
        data["validation"],
        lexicon,
        model_cfg={**DESK_MODEL, "factor_embedding_size": 8},
        train_cfg=TrainConfig(
            max_epochs=max_epochs, batch_size=256, patience=8, eval_every_epochs=1, selection="val_accuracy"
        ),
        subword_vocab_size=500,
        seed=derive_seed(ACCEPT_SEED, "accept", "joint", tag),
        val_accuracy_examples=200,
    )
    (run_dir / "wall_seconds.json").write_text(json.dumps({"wall_seconds": time.time() - started}) + "\n")
    return run_dir


def _joint_eval(run_dir: Path, data, test_key: str, lexicon) -> float:
    """Micro-averaged in-context conversion accuracy over both tasks."""
    from unitloc.pipeline import load_run

    model, pipeline = load_run(run_dir / "best.ulck", lexicon)
    correct, total = 0, 0
    for task in ("ftoc", "mtokm"):
        pairs = data[test_key][task]
        hyps = decode_corpus(model, pipeline, [s for s, _ in pairs], batch_size=256)
        score = conversion_accuracy(hyps, [t for _, t in pairs], TOL, lexicon)
        correct += score.correct
        total += score.n
    return correct / total if total else 0.0


@pytest.mark.slow
class TestCriterion6:
    def test_scaled_learning_curve(self, run_root, registry, lexicon):
        """Separate conv-only desk models: FtoC@5k beats MtoKm@5k by >= 20
        points; FtoC@25k reaches >= 95% at 1e-4 relative tolerance."""
        ftoc_5k = _conv_only_run(run_root, "ftoc", 5000, 150, registry, lexicon)
        mtokm_5k = _conv_only_run(run_root, "mtokm", 5000, 150, registry, lexicon)
        ftoc_25k = _conv_only_run(run_root, "ftoc", 25000, 80, registry, lexicon)
        wall = sum(r["wall_seconds"] for r in (ftoc_5k, mtokm_5k, ftoc_25k))
        gap = ftoc_5k["test_accuracy"] - mtokm_5k["test_accuracy"]
        report(
            6,
            gap >= 0.20 and ftoc_25k["test_accuracy"] >= 0.95 and wall < 3600,
            f"FtoC@5k={ftoc_5k['test_accuracy']:.3f}, MtoKm@5k={mtokm_5k['test_accuracy']:.3f} "
            f"(gap {100 * gap:.1f} pts >= 20), FtoC@25k={ftoc_25k['test_accuracy']:.3f} (>= 0.95), "
            f"training wall {wall:.0f}s (< 3600s)",
        )

    def test_converged_model_decodes_freezing_point(self, run_root, registry, lexicon):
        from unitloc.pipeline import load_run

        _conv_only_run(run_root, "ftoc", 25000, 80, registry, lexicon)
        model, pipeline = load_run(run_root / "conv_ftoc_25000" / "best.ulck", lexicon)
        hyps = decode_corpus(model, pipeline, ["3 2 °F"])
        assert hyps == ["0 °C"]


@pytest.mark.slow
class TestCriterion7:
    def test_scaled_joint_reproduction(self, run_root, joint_data, lexicon):
        """Toy MT + 25k Conv per task: in-context conversion accuracy < 10%
        with 0 Loc and >= 60% with 5k up-sampled Loc per task."""
        no_loc = _joint_run(run_root, "mt_conv", joint_data, with_conv=True, with_loc=False, max_epochs=25, lexicon=lexicon)
        with_loc = _joint_run(run_root, "mt_conv_loc", joint_data, with_conv=True, with_loc=True, max_epochs=25, lexicon=lexicon)
        acc_no_loc = _cached(no_loc / "eval_loc", lambda: {"acc": _joint_eval(no_loc, joint_data, "loc_test", lexicon)})["acc"]
        acc_with_loc = _cached(with_loc / "eval_loc", lambda: {"acc": _joint_eval(with_loc, joint_data, "loc_test", lexicon)})["acc"]
        wall = sum(
            json.loads((d / "wall_seconds.json").read_text())["wall_seconds"] for d in (no_loc, with_loc)
        )
        report(
            7,
            acc_no_loc < 0.10 and acc_with_loc >= 0.60 and wall < 7200,
            f"0 Loc -> {acc_no_loc:.3f} (< 0.10), 5k up-sampled Loc -> {acc_with_loc:.3f} (>= 0.60), "
            f"training wall {wall:.0f}s (< 7200s)",
        )


@pytest.mark.slow
class TestCriterion8:
    def test_scaled_challenge_gap(self, run_root, joint_data, lexicon):
        """With 5k Loc, challenge-set accuracy with 0 Conv trails the 25k-Conv
        setup by >= 25 points."""
        with_conv = _joint_run(run_root, "mt_conv_loc", joint_data, with_conv=True, with_loc=True, max_epochs=25, lexicon=lexicon)
        no_conv = _joint_run(run_root, "mt_loc", joint_data, with_conv=False, with_loc=True, max_epochs=25, lexicon=lexicon)
        acc_with_conv = _cached(with_conv / "eval_challenge", lambda: {"acc": _joint_eval(with_conv, joint_data, "challenge", lexicon)})["acc"]
        acc_no_conv = _cached(no_conv / "eval_challenge", lambda: {"acc": _joint_eval(no_conv, joint_data, "challenge", lexicon)})["acc"]
        gap = acc_with_conv - acc_no_conv
        report(
            8,
            gap >= 0.25,
            f"challenge accuracy: 25k Conv -> {acc_with_conv:.3f}, 0 Conv -> {acc_no_conv:.3f} "
            f"(gap {100 * gap:.1f} pts >= 25)",
        )


@pytest.mark.slow
class TestCriterion10:
    def test_pipeline_determinism(self, tmp_path):
        """Two runs of the full desk-scale pipeline with one seed produce
        byte-identical corpora, metric logs, and reports (single thread)."""
        from unitloc.cli import main as cli_main

        digests = []
        for run_idx in range(2):
            root = tmp_path / f"run{run_idx}"
            data = root / "data"
            model_dir = root / "model"
            assert cli_main([
                "gen-conv", "--task", "ftoc", "--size", "400", "--seed", "77",
                "--validation-size", "50", "--test-size", "50", "--out-dir", str(data),
            ]) == 0
            assert cli_main([
                "gen-toy", "--n-plain", "150", "--n-unit-per-task", "60",
                "--pool-size-distance", "40", "--pool-size-temperature", "25",
                "--seed", "77", "--out-dir", str(data),
            ]) == 0
            assert cli_main([
                "synth-loc", "--source", str(data / "toy.units.src"), "--target", str(data / "toy.units.tgt"),
                "--train-size", "20", "--test-size", "10", "--upsample", "40", "--challenge",
                "--seed", "77", "--out-dir", str(data),
            ]) == 0
            config = root / "config.json"
            config.write_text(json.dumps({
                "seed": 77,
                "textprep": {"subword_vocab_size": 300},
                "model": {"factor_embedding_size": 8, "encoder_layers": 1, "decoder_layers": 1,
                          "model_size": 64, "attention_heads": 2, "feed_forward_hidden": 128},
                "train": {
                    "corpora": [
                        [str(data / "ftoc.train.src"), str(data / "ftoc.train.tgt")],
                        [str(data / "loc.ftoc.train.upsampled.src"), str(data / "loc.ftoc.train.upsampled.tgt")],
                        [str(data / "toy.mt.src"), str(data / "toy.mt.tgt")],
                    ],
                    "validation": [str(data / "ftoc.validation.src"), str(data / "ftoc.validation.tgt")],
                    "max_epochs": 3, "batch_size": 64, "threads": 1,
                },
            }))
            assert cli_main(["train", "--config", str(config), "--out-dir", str(model_dir)]) == 0
            hyp = root / "hyp.txt"
            assert cli_main([
                "translate", "--checkpoint", str(model_dir / "best.ulck"),
                "--source", str(data / "ftoc.test.src"), "--output", str(hyp),
            ]) == 0
            assert cli_main([
                "evaluate", "--hyp", str(hyp), "--ref", str(data / "ftoc.test.tgt"),
                "--label", "ftoc", "--tolerance", "1e-4", "--tolerance", "0",
                "--out-dir", str(root / "reports"), "--no-figures",
            ]) == 0
            import hashlib

            digest = hashlib.sha256()
            tracked = sorted(
                p
                for p in (
                    list(data.glob("*.src")) + list(data.glob("*.tgt")) + list(data.glob("*.jsonl"))
                    + list(data.glob("*.json")) + [model_dir / "metrics.tsv", hyp]
                    + list((root / "reports").glob("report.*"))
                )
                # run-config manifests echo absolute paths, which differ per run dir
                if p.name != "manifest.json"
            )
            for path in tracked:
                digest.update(path.name.encode())
                digest.update(path.read_bytes())
            digests.append((digest.hexdigest(), [p.name for p in tracked]))
        identical = digests[0][0] == digests[1][0]
        report(
            10,
            identical and len(digests[0][1]) > 10,
            f"two pipeline runs, {len(digests[0][1])} artifacts hashed, byte-identical={identical}",
        )
