"""Command-line pipeline: gen-conv, gen-toy, synth-loc, train, translate, evaluate.

One JSON config document drives a run; command-line flags mirror config keys
one-to-one and override them. Every subcommand is a pure function of
(config, input files, seed): reruns produce byte-identical artifacts.

Exit codes: 0 success, 64 usage error, 65 data error, 66 missing input,
2 infeasible request.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

from . import __version__
from .convert import default_registry, load_registry, parse_tolerance
from .datagen import ConvDatasetSpec, InfeasibleSplit, generate_conv_dataset, read_parallel, write_corpus, write_parallel
from .evaluation import (
    AlignmentError,
    CurvePoint,
    build_report,
    curve_from_tsv,
    curve_to_tsv,
    reports_to_tsv,
    write_reports,
)
from .locsynth import (
    ChallengeSpec,
    InsufficientData,
    LocSplitPolicy,
    build_challenge_set,
    build_loc_corpus,
    read_parallel_sentences,
    uniform_quantity_sampler,
    upsample_contexts,
    write_loc_corpus,
)
from .model import InvalidConfig
from .pipeline import decode_corpus, load_run, run_training
from .quantity import Lexicon, MalformedNumber
from .seeding import derive_seed
from .textprep import CorpusTooSmall
from .toytext import ToyCorpusSpec, generate_toy_corpus
from .training import NonFiniteLoss, TrainConfig

EXIT_OK = 0
EXIT_USAGE = 64
EXIT_DATA = 65
EXIT_MISSING_INPUT = 66
EXIT_INFEASIBLE = 2


class CliParser(argparse.ArgumentParser):
    """argparse reports usage problems with exit code 64, not 2."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"config file {path} not found")
    return json.loads(p.read_text(encoding="utf-8"))


def _section(config: dict, name: str) -> dict:
    section = config.get(name, {})
    if not isinstance(section, dict):
        raise ValueError(f"config section {name!r} must be an object")
    return dict(section)


def _merged(section: dict, args: argparse.Namespace, keys: list[str]) -> dict:
    """Section values overridden by explicitly passed flags."""
    out = dict(section)
    for key in keys:
        value = getattr(args, key, None)
        if value is not None:
            out[key] = value
    return out


def _require_files(*paths: str | Path) -> None:
    for p in paths:
        if not Path(p).exists():
            raise FileNotFoundError(f"missing input: {p}")


def _lexicon(config: dict, args: argparse.Namespace) -> Lexicon:
    path = getattr(args, "lexicon", None) or config.get("lexicon")
    if path:
        _require_files(path)
        return Lexicon.from_file(path)
    return Lexicon.default()


def _registry(config: dict, args: argparse.Namespace) -> dict:
    path = getattr(args, "conversions", None) or config.get("conversions")
    if path:
        _require_files(path)
        return load_registry(path)
    return default_registry()


def _write_manifest(out_dir: Path, command: str, effective: dict) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    blob = json.dumps(effective, sort_keys=True, ensure_ascii=False)
    manifest = {
        "command": command,
        "config": effective,
        "config_hash": hashlib.sha256(blob.encode("utf-8")).hexdigest(),
        "unitloc_version": __version__,
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")


def cmd_gen_conv(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    section = _merged(
        _section(config, "gen_conv"),
        args,
        ["task", "size", "digit_lengths", "precision_mix", "validation_size", "test_size", "seed"],
    )
    section.setdefault("seed", config.get("seed", 0))
    if section.get("size", 0) <= 0:
        raise UsageError("gen-conv requires a positive --size")
    if "task" not in section:
        raise UsageError("gen-conv requires --task")
    lengths = tuple(section.get("digit_lengths", (1, 6)))
    spec = ConvDatasetSpec(
        task=section["task"],
        size=int(section["size"]),
        digit_lengths=(int(lengths[0]), int(lengths[1])),
        precision_mix=float(section.get("precision_mix", 0.5)),
        seed=int(section["seed"]),
        validation_size=int(section.get("validation_size", 1000)),
        test_size=int(section.get("test_size", 2000)),
    )
    registry = _registry(config, args)
    if spec.task not in registry:
        raise UsageError(f"unknown task {spec.task!r}; registry has {sorted(registry)}")
    lexicon = _lexicon(config, args)
    out_dir = Path(args.out_dir or config.get("out_dir", "."))
    corpus = generate_conv_dataset(spec, registry[spec.task], lexicon)
    files = write_corpus(corpus, out_dir)
    _write_manifest(out_dir, "gen-conv", section)
    for name, path in sorted(files.items()):
        print(f"{name}\t{path}")
    return EXIT_OK


def cmd_gen_toy(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    section = _merged(
        _section(config, "gen_toy"),
        args,
        ["n_plain", "n_unit_per_task", "pool_size_distance", "pool_size_temperature", "seed"],
    )
    section.setdefault("seed", config.get("seed", 0))
    spec = ToyCorpusSpec(
        n_plain=int(section.get("n_plain", 1000)),
        n_unit_per_task=int(section.get("n_unit_per_task", 500)),
        seed=int(section["seed"]),
        pool_size_distance=int(section.get("pool_size_distance", 300)),
        pool_size_temperature=int(section.get("pool_size_temperature", 150)),
    )
    registry = _registry(config, args)
    corpus = generate_toy_corpus(spec, registry)
    out_dir = Path(args.out_dir or config.get("out_dir", "."))
    out_dir.mkdir(parents=True, exist_ok=True)
    write_parallel([(" ".join(s.source), " ".join(s.target)) for s in corpus.plain], out_dir / "toy.mt.src", out_dir / "toy.mt.tgt")
    write_parallel([(" ".join(s.source), " ".join(s.target)) for s in corpus.unit], out_dir / "toy.units.src", out_dir / "toy.units.tgt")
    _write_manifest(out_dir, "gen-toy", section)
    print(f"mt\t{out_dir / 'toy.mt.src'}")
    print(f"units\t{out_dir / 'toy.units.src'}")
    return EXIT_OK


def cmd_synth_loc(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    section = _merged(
        _section(config, "synth_loc"),
        args,
        ["source", "target", "train_size", "test_size", "upsample", "challenge", "seed"],
    )
    section.setdefault("seed", config.get("seed", 0))
    for key in ("source", "target"):
        if key not in section:
            raise UsageError(f"synth-loc requires --{key}")
    _require_files(section["source"], section["target"])
    lexicon = _lexicon(config, args)
    registry = _registry(config, args)
    out_dir = Path(args.out_dir or config.get("out_dir", "."))
    seed = int(section["seed"])
    policy = LocSplitPolicy(
        train_size=int(section.get("train_size", 5000)),
        test_size=int(section.get("test_size", 2000)),
        seed=seed,
    )
    sentences = read_parallel_sentences(section["source"], section["target"])
    corpora = build_loc_corpus(sentences, lexicon, registry, policy)
    stats = {}
    for task, loc in sorted(corpora.items()):
        write_loc_corpus(loc.train, out_dir, f"loc.{task}.train")
        write_loc_corpus(loc.test, out_dir, f"loc.{task}.test")
        stats[task] = loc.stats
        upsample = int(section.get("upsample", 0) or 0)
        if upsample > 0:
            sampler = uniform_quantity_sampler(registry[task].source_unit, (1, 6), 0.5)
            upsampled = upsample_contexts(
                loc.train, upsample, sampler, derive_seed(seed, "upsample", task), registry, lexicon
            )
            write_loc_corpus(upsampled, out_dir, f"loc.{task}.train.upsampled")
        if section.get("challenge"):
            exclude = frozenset(ex.source_quantity.magnitude for ex in loc.train)
            challenge = build_challenge_set(
                ChallengeSpec(base=tuple(loc.test), digit_lengths=(1, 6), seed=derive_seed(seed, "challenge", task), exclude=exclude),
                registry,
                lexicon,
            )
            write_loc_corpus(challenge, out_dir, f"loc.{task}.challenge")
    (out_dir / "loc.stats.json").write_text(json.dumps(stats, indent=2) + "\n", encoding="utf-8")
    _write_manifest(out_dir, "synth-loc", section)
    for task, s in sorted(stats.items()):
        print(f"{task}\t{json.dumps(s, sort_keys=True)}")
    return EXIT_OK


def cmd_train(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    section = _merged(_section(config, "train"), args, ["max_epochs", "batch_size", "seed", "threads"])
    section.setdefault("seed", config.get("seed", 0))
    textprep_cfg = _section(config, "textprep")
    if getattr(args, "subword_vocab_size", None) is not None:
        textprep_cfg["subword_vocab_size"] = args.subword_vocab_size
    model_cfg = _section(config, "model")
    if getattr(args, "factor_embedding_size", None) is not None:
        model_cfg["factor_embedding_size"] = args.factor_embedding_size

    corpora = section.get("corpora") or ([[args.source, args.target]] if args.source and args.target else None)
    if not corpora:
        raise UsageError("train requires corpora (config train.corpora or --source/--target)")
    train_pairs = []
    for src_path, tgt_path in corpora:
        _require_files(src_path, tgt_path)
        train_pairs.extend(read_parallel(src_path, tgt_path))
    val_pairs = []
    validation = section.get("validation")
    if validation:
        _require_files(*validation)
        val_pairs = read_parallel(validation[0], validation[1])

    out_dir = Path(args.out_dir or config.get("out_dir", "."))
    tcfg = TrainConfig(
        max_epochs=int(section.get("max_epochs", 100)),
        batch_size=int(section.get("batch_size", 256)),
        label_smoothing=float(section.get("label_smoothing", 0.1)),
        lr_peak=float(section.get("lr_peak", 1e-3)),
        warmup_steps=int(section.get("warmup_steps", 500)),
        grad_clip=float(section.get("grad_clip", 1.0)),
        patience=int(section.get("patience", 10)),
        eval_every_epochs=int(section.get("eval_every_epochs", 1)),
        selection=str(section.get("selection", "val_loss")),
        threads=int(section.get("threads", 1)),
    )
    result = run_training(
        out_dir,
        train_pairs,
        val_pairs,
        _lexicon(config, args),
        model_cfg=model_cfg,
        train_cfg=tcfg,
        subword_vocab_size=int(textprep_cfg.get("subword_vocab_size", 0)),
        seed=int(section["seed"]),
    )
    _write_manifest(out_dir, "train", {"train": section, "model": model_cfg, "textprep": textprep_cfg})
    print(f"best\t{result.train_result.best_path}")
    print(f"last\t{result.train_result.last_path}")
    print(f"metrics\t{result.train_result.log_path}")
    return EXIT_OK


def cmd_translate(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    _require_files(args.checkpoint, args.source)
    lexicon = _lexicon(config, args)
    model, pipeline = load_run(args.checkpoint, lexicon)
    src_lines = Path(args.source).read_text(encoding="utf-8").splitlines()
    import torch

    torch.set_num_threads(int(getattr(args, "threads", None) or 1))
    hyps = decode_corpus(model, pipeline, src_lines, batch_size=int(args.batch_size or 128))
    Path(args.output).parent.mkdir(parents=True, exist_ok=True)
    Path(args.output).write_text("".join(h + "\n" for h in hyps), encoding="utf-8")
    print(f"output\t{args.output}")
    return EXIT_OK


def cmd_evaluate(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    _require_files(args.hyp, args.ref)
    lexicon = _lexicon(config, args)
    tolerance_texts = args.tolerance or config.get("tolerances") or ["1e-4", "0"]
    tolerances = [parse_tolerance(t) for t in tolerance_texts]
    hyps = Path(args.hyp).read_text(encoding="utf-8").splitlines()
    refs = Path(args.ref).read_text(encoding="utf-8").splitlines()
    label = args.label or Path(args.hyp).stem
    reports = build_report(label, hyps, refs, tolerances, lexicon)
    out_dir = Path(args.out_dir or config.get("out_dir", "."))
    files = write_reports(reports, out_dir, stem=f"report.{label}")
    rendered = [files["tsv"], files["json"]]
    if not args.no_figures:
        from .plots import accuracy_by_length_figure, learning_curve_figure

        figure = accuracy_by_length_figure(reports[0], out_dir / f"report.{label}.by_length.png")
        rendered.append(figure)
        if args.curve_size is not None:
            curve_path = out_dir / "curve.tsv"
            points = curve_from_tsv(curve_path.read_text(encoding="utf-8")) if curve_path.exists() else []
            points = [p for p in points if not (p.series == label and p.size == args.curve_size)]
            points.append(CurvePoint(label, args.curve_size, reports[0].accuracy))
            curve_path.write_text(curve_to_tsv(points), encoding="utf-8")
            rendered.append(learning_curve_figure(points, out_dir / "curve.png"))
    sys.stdout.write(reports_to_tsv(reports))
    for path in rendered:
        print(f"wrote\t{path}")
    return EXIT_OK


class UsageError(Exception):
    pass


def build_parser() -> CliParser:
    parser = CliParser(prog="unitloc", description=__doc__)
    parser.add_argument("--version", action="version", version=f"unitloc {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: CliParser) -> None:
        p.add_argument("--config", help="JSON config document; flags override its keys")
        p.add_argument("--out-dir", dest="out_dir", help="run directory for artifacts")
        p.add_argument("--seed", type=int, help="top-level seed")
        p.add_argument("--lexicon", help="unit lexicon file (default: bundled)")
        p.add_argument("--conversions", help="conversion registry file (default: bundled)")

    p = sub.add_parser("gen-conv", help="generate synthetic conversion corpora", parents=[], add_help=True)
    common(p)
    p.add_argument("--task", help="conversion name (mtokm, ftoc)")
    p.add_argument("--size", type=int, help="training examples")
    p.add_argument("--digit-lengths", dest="digit_lengths", type=int, nargs=2, metavar=("LO", "HI"))
    p.add_argument("--precision-mix", dest="precision_mix", type=float, help="fraction of one-decimal inputs")
    p.add_argument("--validation-size", dest="validation_size", type=int)
    p.add_argument("--test-size", dest="test_size", type=int)
    p.set_defaults(func=cmd_gen_conv)

    p = sub.add_parser("gen-toy", help="generate the toy substitution-language corpus")
    common(p)
    p.add_argument("--n-plain", dest="n_plain", type=int)
    p.add_argument("--n-unit-per-task", dest="n_unit_per_task", type=int)
    p.add_argument("--pool-size-distance", dest="pool_size_distance", type=int)
    p.add_argument("--pool-size-temperature", dest="pool_size_temperature", type=int)
    p.set_defaults(func=cmd_gen_toy)

    p = sub.add_parser("synth-loc", help="synthesize localization corpora from parallel text")
    common(p)
    p.add_argument("--source", help="source-side text file")
    p.add_argument("--target", help="target-side text file")
    p.add_argument("--train-size", dest="train_size", type=int)
    p.add_argument("--test-size", dest="test_size", type=int)
    p.add_argument("--upsample", type=int, help="up-sampled training size per task")
    p.add_argument("--challenge", action="store_const", const=True, help="also build uniform-length challenge sets")
    p.set_defaults(func=cmd_synth_loc)

    p = sub.add_parser("train", help="train the transformer on prepared corpora")
    common(p)
    p.add_argument("--source", help="training source file (alternative to config corpora)")
    p.add_argument("--target", help="training target file")
    p.add_argument("--max-epochs", dest="max_epochs", type=int)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--threads", type=int)
    p.add_argument("--subword-vocab-size", dest="subword_vocab_size", type=int)
    p.add_argument("--factor-embedding-size", dest="factor_embedding_size", type=int)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("translate", help="greedy-decode a source file with a checkpoint")
    common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--source", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--threads", type=int)
    p.set_defaults(func=cmd_translate)

    p = sub.add_parser("evaluate", help="score hypotheses against references; write reports and figures")
    common(p)
    p.add_argument("--hyp", required=True, help="hypothesis file")
    p.add_argument("--ref", required=True, help="reference file")
    p.add_argument("--label", help="report label (default: hypothesis stem)")
    p.add_argument("--tolerance", action="append", help="repeatable; '0' means exact match")
    p.add_argument("--curve-size", dest="curve_size", type=int, help="record this accuracy on the learning curve at SIZE")
    p.add_argument("--no-figures", dest="no_figures", action="store_true")
    p.set_defaults(func=cmd_evaluate)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"unitloc: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"unitloc: missing input: {exc}", file=sys.stderr)
        return EXIT_MISSING_INPUT
    except InfeasibleSplit as exc:
        print(f"unitloc: infeasible request: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (InsufficientData, CorpusTooSmall, AlignmentError, MalformedNumber, NonFiniteLoss, InvalidConfig, ValueError) as exc:
        print(f"unitloc: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
