"""Conversion accuracy under tolerance, corpus BLEU, and report assembly.

Inputs are already whitespace-tokenized; no retokenization is applied, so
BLEU values are comparable within this toolkit but not against externally
tokenized scores.
"""

from __future__ import annotations

import json
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from decimal import Decimal
from pathlib import Path
from typing import Sequence

from .convert import ToleranceSpec, within_tolerance
from .quantity import Lexicon, UnitKind


class AlignmentError(Exception):
    """Hypothesis and reference line counts differ."""


_LAX_COMPACT = re.compile(r"^\d[\d.,]*$")


def _lax_compact_value(token: str) -> Decimal | None:
    """Compact numeral for scoring: any number of fractional digits allowed."""
    negative = token.startswith("-")
    token = token[1:] if negative else token
    if not _LAX_COMPACT.match(token):
        return None
    try:
        if "," in token and "." in token:
            if token.rindex(".") > token.rindex(","):
                integer, _, frac = token.rpartition(".")
                integer = integer.replace(",", "")
            else:
                integer, _, frac = token.rpartition(",")
                integer = integer.replace(".", "")
            if not integer.isdigit() or not frac.isdigit():
                return None
            value = Decimal(f"{integer}.{frac}")
        elif "," in token:
            if re.match(r"^\d{1,3}(,\d{3})+$", token):
                value = Decimal(token.replace(",", ""))
            elif re.match(r"^\d+,\d+$", token):
                value = Decimal(token.replace(",", "."))
            else:
                return None
        elif "." in token:
            if not re.match(r"^\d+\.\d+$", token):
                return None
            value = Decimal(token)
        else:
            value = Decimal(token)
    except ArithmeticError:
        return None
    return -value if negative else value


def _scan_numbers_lax(tokens: Sequence[str], lexicon: Lexicon) -> list[tuple[Decimal, UnitKind]]:
    """All number+unit pairs for scoring; unlimited fraction digits.

    Hypotheses are model output and may carry any digit shape; scoring reads
    what is there rather than enforcing the corpus precision domain.
    """
    found: list[tuple[Decimal, UnitKind]] = []
    i = 0
    n = len(tokens)
    while i < n:
        j = i
        negative = False
        if tokens[j] == "-" and j + 1 < n:
            negative = True
            j += 1
        value: Decimal | None = None
        if j < n and len(tokens[j]) == 1 and tokens[j].isdigit():
            digits: list[str] = []
            seps = 0
            while j < n:
                t = tokens[j]
                if len(t) == 1 and t.isdigit():
                    digits.append(t)
                    j += 1
                elif t == "." and seps == 0 and digits and j + 1 < n and len(tokens[j + 1]) == 1 and tokens[j + 1].isdigit():
                    digits.append(".")
                    seps = 1
                    j += 1
                else:
                    break
            value = Decimal("".join(digits))
        elif j < n:
            value = _lax_compact_value(tokens[j])
            if value is not None:
                negative = negative or value < 0
                value = abs(value)
                j += 1
        if value is None:
            i += 1
            continue
        unit = lexicon.match_unit(tokens, j)
        if unit is None:
            i += 1
            continue
        kind, stop, _ = unit
        found.append((-value if negative else value, kind))
        i = stop
    return found


@dataclass
class ConversionScore:
    """Accuracy of converted quantities at one tolerance."""

    n: int = 0
    correct: int = 0
    unparseable: int = 0
    skipped: int = 0  # references without a parsable quantity (not scored)
    per_length: dict[int, tuple[int, int]] = field(default_factory=dict)  # length -> (correct, total)

    @property
    def accuracy(self) -> float:
        return self.correct / self.n if self.n else 0.0

    def per_length_accuracy(self) -> dict[int, float]:
        return {k: c / t for k, (c, t) in sorted(self.per_length.items()) if t}


def _digit_length(value: Decimal) -> int:
    return len(str(int(abs(value))))


def conversion_accuracy(
    hypotheses: Sequence[str],
    references: Sequence[str],
    tol: ToleranceSpec,
    lexicon: Lexicon,
) -> ConversionScore:
    """Score converted quantities line by line.

    The reference's first unit mention is the gold conversion; the hypothesis
    is correct when its first quantity of the same unit matches within
    tolerance. A hypothesis without any parsable quantity counts incorrect
    and unparseable. Reference lines without a quantity are skipped (mixed
    validation corpora contain plain sentences).
    """
    if len(hypotheses) != len(references):
        raise AlignmentError(f"{len(hypotheses)} hypotheses vs {len(references)} references")
    score = ConversionScore()
    for hyp, ref in zip(hypotheses, references):
        ref_mentions = _scan_numbers_lax(ref.split(), lexicon)
        if not ref_mentions:
            score.skipped += 1
            continue
        ref_value, ref_unit = ref_mentions[0]
        score.n += 1
        length = _digit_length(ref_value)
        correct_bucket, total_bucket = score.per_length.get(length, (0, 0))
        hyp_mentions = _scan_numbers_lax(hyp.split(), lexicon)
        same_unit = [v for v, u in hyp_mentions if u is ref_unit]
        ok = False
        if not hyp_mentions:
            score.unparseable += 1
        elif same_unit:
            ok = within_tolerance(same_unit[0], ref_value, tol)
        if ok:
            score.correct += 1
            correct_bucket += 1
        score.per_length[length] = (correct_bucket, total_bucket + 1)
    return score


def _ngrams(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu(hypotheses: Sequence[str], references: Sequence[str], max_order: int = 4) -> float:
    """Corpus BLEU: geometric mean of 1..4-gram modified precisions times the
    brevity penalty. Orders with no hypothesis n-grams at all are dropped
    (effective order), so short corpora still score; any order with zero
    matches scores 0.
    """
    if len(hypotheses) != len(references):
        raise AlignmentError(f"{len(hypotheses)} hypotheses vs {len(references)} references")
    matches = [0] * max_order
    totals = [0] * max_order
    hyp_len = 0
    ref_len = 0
    for hyp, ref in zip(hypotheses, references):
        hyp_tokens, ref_tokens = hyp.split(), ref.split()
        hyp_len += len(hyp_tokens)
        ref_len += len(ref_tokens)
        for n in range(1, max_order + 1):
            hyp_counts = _ngrams(hyp_tokens, n)
            ref_counts = _ngrams(ref_tokens, n)
            totals[n - 1] += sum(hyp_counts.values())
            matches[n - 1] += sum(min(c, ref_counts[g]) for g, c in hyp_counts.items())
    if hyp_len == 0:
        return 0.0
    log_sum = 0.0
    orders = 0
    for m, t in zip(matches, totals):
        if t == 0:
            continue
        if m == 0:
            return 0.0
        log_sum += math.log(m / t)
        orders += 1
    if orders == 0:
        return 0.0
    brevity = 1.0 if hyp_len > ref_len else math.exp(1.0 - ref_len / hyp_len)
    return 100.0 * brevity * math.exp(log_sum / orders)


@dataclass
class EvalReport:
    """One evaluated test set at one tolerance."""

    label: str
    tolerance: str
    n: int
    accuracy: float
    exact_match: float
    bleu: float
    unparseable: int
    per_length: dict[int, float] = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "label": self.label,
            "tolerance": self.tolerance,
            "n": self.n,
            "accuracy": self.accuracy,
            "exact_match": self.exact_match,
            "bleu": self.bleu,
            "unparseable": self.unparseable,
            "per_length": {str(k): v for k, v in self.per_length.items()},
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "EvalReport":
        return cls(
            label=doc["label"],
            tolerance=doc["tolerance"],
            n=doc["n"],
            accuracy=doc["accuracy"],
            exact_match=doc["exact_match"],
            bleu=doc["bleu"],
            unparseable=doc["unparseable"],
            per_length={int(k): v for k, v in doc["per_length"].items()},
        )


def build_report(
    label: str,
    hypotheses: Sequence[str],
    references: Sequence[str],
    tolerances: Sequence[ToleranceSpec],
    lexicon: Lexicon,
) -> list[EvalReport]:
    """One report per tolerance; exact match and BLEU are computed once."""
    from .convert import ToleranceMode

    exact = conversion_accuracy(hypotheses, references, ToleranceSpec(ToleranceMode.EXACT), lexicon)
    corpus_bleu = bleu(hypotheses, references)
    reports = []
    for tol in tolerances:
        score = conversion_accuracy(hypotheses, references, tol, lexicon)
        reports.append(
            EvalReport(
                label=label,
                tolerance=tol.label,
                n=score.n,
                accuracy=score.accuracy,
                exact_match=exact.accuracy,
                bleu=corpus_bleu,
                unparseable=score.unparseable,
                per_length=score.per_length_accuracy(),
            )
        )
    return reports


_TSV_COLUMNS = ("label", "tolerance", "n", "accuracy", "exact_match", "bleu", "unparseable")


def reports_to_tsv(reports: Sequence[EvalReport]) -> str:
    lengths = sorted({k for r in reports for k in r.per_length})
    header = list(_TSV_COLUMNS) + [f"len{k}" for k in lengths]
    rows = ["\t".join(header)]
    for r in reports:
        row = [
            r.label,
            r.tolerance,
            str(r.n),
            f"{r.accuracy:.6f}",
            f"{r.exact_match:.6f}",
            f"{r.bleu:.2f}",
            str(r.unparseable),
        ]
        row += [f"{r.per_length[k]:.6f}" if k in r.per_length else "-" for k in lengths]
        rows.append("\t".join(row))
    return "\n".join(rows) + "\n"


def reports_from_tsv(text: str) -> list[EvalReport]:
    lines = [line for line in text.splitlines() if line]
    header = lines[0].split("\t")
    lengths = [int(h[3:]) for h in header if h.startswith("len")]
    reports = []
    for line in lines[1:]:
        cells = dict(zip(header, line.split("\t")))
        per_length = {
            k: float(cells[f"len{k}"]) for k in lengths if cells.get(f"len{k}", "-") != "-"
        }
        reports.append(
            EvalReport(
                label=cells["label"],
                tolerance=cells["tolerance"],
                n=int(cells["n"]),
                accuracy=float(cells["accuracy"]),
                exact_match=float(cells["exact_match"]),
                bleu=float(cells["bleu"]),
                unparseable=int(cells["unparseable"]),
                per_length=per_length,
            )
        )
    return reports


def write_reports(reports: Sequence[EvalReport], out_dir: str | Path, stem: str = "report") -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tsv_path = out / f"{stem}.tsv"
    json_path = out / f"{stem}.json"
    tsv_path.write_text(reports_to_tsv(reports), encoding="utf-8")
    json_path.write_text(
        json.dumps([r.to_json_dict() for r in reports], indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
    )
    return {"tsv": tsv_path, "json": json_path}


def read_reports(path: str | Path) -> list[EvalReport]:
    text = Path(path).read_text(encoding="utf-8")
    if str(path).endswith(".json"):
        return [EvalReport.from_json_dict(d) for d in json.loads(text)]
    return reports_from_tsv(text)


@dataclass(frozen=True)
class CurvePoint:
    """One learning-curve entry: training-set size against accuracy."""

    series: str
    size: int
    accuracy: float


def curve_to_tsv(points: Sequence[CurvePoint]) -> str:
    rows = ["series\tsize\taccuracy"]
    for p in sorted(points, key=lambda p: (p.series, p.size)):
        rows.append(f"{p.series}\t{p.size}\t{p.accuracy:.6f}")
    return "\n".join(rows) + "\n"


def curve_from_tsv(text: str) -> list[CurvePoint]:
    points = []
    for line in text.splitlines()[1:]:
        if not line:
            continue
        series, size, accuracy = line.split("\t")
        points.append(CurvePoint(series, int(size), float(accuracy)))
    return points
