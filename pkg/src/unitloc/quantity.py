"""Numeric unit expressions: parsing, formatting, and digit tokenization.

A :class:`Quantity` is an exact decimal magnitude (at most one fractional
digit) tagged with a unit and a display precision. Magnitudes are
``decimal.Decimal`` values normalized to exponent 0 (INTEGER) or -1
(ONE_DECIMAL) so truncation and round-trip semantics are bit-exact; binary
floats never enter the data path.

Token-level grammar accepted by the parser (one documented definition, used
by both :func:`parse_quantity` and the corpus scanner in ``locsynth``):

* a number is either a single compact token or a run of single-character
  digit tokens with at most one decimal-separator token, optionally preceded
  by a ``-`` token;
* compact tokens accept English thousands grouping (``1,000``) which is
  normalized away, and a single-digit decimal fraction with ``.`` or the
  comma variant (``3.8`` / ``3,8``); more than one fractional digit is not
  representable and is rejected;
* the unit lexeme follows the number immediately and may span several
  tokens (``degrees Fahrenheit``); one trailing punctuation character on the
  final unit token is tolerated and preserved by rewriters.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from decimal import Decimal
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Iterable, Literal


class UnitKind(Enum):
    MILE = "MILE"
    KM = "KM"
    FAHRENHEIT = "FAHRENHEIT"
    CELSIUS = "CELSIUS"

    @property
    def partner(self) -> "UnitKind":
        """The paired unit on the other side of the conversion (involution)."""
        return _PARTNER[self]

    @property
    def dimension(self) -> str:
        """``"distance"`` or ``"temperature"``."""
        return "distance" if self in (UnitKind.MILE, UnitKind.KM) else "temperature"

    @property
    def is_imperial(self) -> bool:
        return self in (UnitKind.MILE, UnitKind.FAHRENHEIT)

    @property
    def is_metric(self) -> bool:
        return not self.is_imperial


_PARTNER = {
    UnitKind.MILE: UnitKind.KM,
    UnitKind.KM: UnitKind.MILE,
    UnitKind.FAHRENHEIT: UnitKind.CELSIUS,
    UnitKind.CELSIUS: UnitKind.FAHRENHEIT,
}


class Precision(Enum):
    INTEGER = "INTEGER"
    ONE_DECIMAL = "ONE_DECIMAL"

    @property
    def exponent(self) -> int:
        return 0 if self is Precision.INTEGER else -1

    @property
    def ulp(self) -> Decimal:
        """One unit in the last displayed place."""
        return Decimal(1).scaleb(self.exponent)


class NoMatch(Exception):
    """No number-unit pair present in the token sequence."""


class MalformedNumber(Exception):
    """A number adjacent to a unit has more than one decimal separator or an
    unrepresentable fraction (more than one fractional digit)."""


def _canonical_magnitude(value: Decimal | int | str, precision: Precision) -> Decimal:
    mag = value if isinstance(value, Decimal) else Decimal(str(value))
    exp = precision.exponent
    quantized = mag.quantize(Decimal(1).scaleb(exp))
    if quantized != mag:
        raise ValueError(f"magnitude {mag} has more fractional digits than {precision.name} allows")
    # -0 and -0.0 normalize to their non-negative form
    if quantized == 0:
        quantized = Decimal(0).quantize(Decimal(1).scaleb(exp))
    return quantized


@dataclass(frozen=True)
class Quantity:
    """An exact decimal magnitude with unit kind and display precision.

    Generated source data is non-negative, but converted outputs may be
    negative (Fahrenheit below 32 maps below 0 Celsius), so negative
    magnitudes are representable and format with a leading ``-`` token.
    """

    magnitude: Decimal
    unit: UnitKind
    precision: Precision

    def __post_init__(self) -> None:
        object.__setattr__(self, "magnitude", _canonical_magnitude(self.magnitude, self.precision))

    @classmethod
    def of(cls, value: Decimal | int | str, unit: UnitKind, precision: Precision | None = None) -> "Quantity":
        """Build a quantity, inferring precision from the literal when omitted."""
        mag = value if isinstance(value, Decimal) else Decimal(str(value))
        if precision is None:
            precision = Precision.INTEGER if mag == mag.to_integral_value() and mag.as_tuple().exponent >= 0 else Precision.ONE_DECIMAL
        return cls(mag, unit, precision)


def digit_length(q: Quantity) -> int:
    """Number of digits in the integer part of the magnitude (1 for 0.x)."""
    return len(str(int(abs(q.magnitude))))


@dataclass(frozen=True)
class TokenSpan:
    """Half-open token index range [start, stop) covering number and unit."""

    start: int
    stop: int

    def __len__(self) -> int:
        return self.stop - self.start


class Lexicon:
    """Maps unit surface forms (possibly multi-token) to unit kinds.

    The first surface listed for each kind is its canonical form, used when
    formatting. Surfaces are matched case-sensitively, longest first.
    """

    def __init__(self, entries: Iterable[tuple[tuple[str, ...], UnitKind]]):
        self._surfaces: list[tuple[tuple[str, ...], UnitKind]] = []
        self._canonical: dict[UnitKind, str] = {}
        for surface, kind in entries:
            if not surface:
                raise ValueError("empty lexicon surface")
            self._surfaces.append((surface, kind))
            self._canonical.setdefault(kind, " ".join(surface))
        for kind in UnitKind:
            if kind not in self._canonical:
                raise ValueError(f"lexicon has no surface for {kind.name}")
        self._surfaces.sort(key=lambda e: len(e[0]), reverse=True)
        self._max_len = max(len(s) for s, _ in self._surfaces)

    @classmethod
    def from_lines(cls, lines: Iterable[str]) -> "Lexicon":
        entries = []
        for lineno, raw in enumerate(lines, start=1):
            line = raw.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            try:
                surface, kind = line.split("\t")
            except ValueError as exc:
                raise ValueError(f"lexicon line {lineno}: expected 'surface<TAB>UNIT_KIND'") from exc
            entries.append((tuple(surface.split(" ")), UnitKind[kind]))
        return cls(entries)

    @classmethod
    def from_file(cls, path: str | Path) -> "Lexicon":
        with open(path, encoding="utf-8") as fh:
            return cls.from_lines(fh)

    @classmethod
    def default(cls) -> "Lexicon":
        text = resources.files("unitloc.data").joinpath("lexicon.tsv").read_text(encoding="utf-8")
        return cls.from_lines(text.splitlines())

    def canonical_surface(self, kind: UnitKind) -> str:
        return self._canonical[kind]

    def match_unit(self, tokens: list[str] | tuple[str, ...], start: int) -> tuple[UnitKind, int, str] | None:
        """Match a unit surface at ``start``; returns (kind, stop, trailing punct)."""
        for surface, kind in self._surfaces:
            stop = start + len(surface)
            if stop > len(tokens):
                continue
            window = tokens[start:stop]
            if tuple(window) == surface:
                return kind, stop, ""
            # tolerate one trailing punctuation char on the final token
            if tuple(window[:-1]) == surface[:-1] and len(window[-1]) == len(surface[-1]) + 1:
                if window[-1][:-1] == surface[-1] and window[-1][-1] in ".,;:!?":
                    return kind, stop, window[-1][-1]
        return None


_DIGIT = frozenset("0123456789")
_COMPACT_RE = re.compile(r"^\d[\d.,]*$")


def _parse_compact(token: str) -> Decimal | None:
    """Normalize a compact numeral token to an exact Decimal, or None.

    Raises MalformedNumber for number-shaped tokens whose fraction cannot be
    represented at one decimal digit (e.g. ``3.85``) or with conflicting
    separators.
    """
    if not _COMPACT_RE.match(token):
        return None
    if "," in token and "." in token:
        # both separators: the last one is the decimal mark
        if token.rindex(".") > token.rindex(","):
            integer, _, frac = token.rpartition(".")
            integer = integer.replace(",", "")
        else:
            integer, _, frac = token.rpartition(",")
            integer = integer.replace(".", "")
        if not re.match(r"^\d+$", integer) or not frac:
            raise MalformedNumber(f"cannot read number {token!r}")
        if len(frac) > 1:
            raise MalformedNumber(f"{token!r} has more than one fractional digit")
        return Decimal(f"{integer}.{frac}")
    if "," in token:
        if re.match(r"^\d{1,3}(,\d{3})+$", token):  # English thousands grouping
            return Decimal(token.replace(",", ""))
        if re.match(r"^\d+,\d$", token):  # comma decimal mark, one digit
            return Decimal(token.replace(",", "."))
        raise MalformedNumber(f"cannot read number {token!r}")
    if "." in token:
        if token.count(".") > 1:
            raise MalformedNumber(f"{token!r} has more than one decimal separator")
        integer, _, frac = token.partition(".")
        if not integer or not frac:
            raise MalformedNumber(f"cannot read number {token!r}")
        if len(frac) > 1:
            # ambiguous with dotted thousands grouping; not representable here
            raise MalformedNumber(f"{token!r} has more than one fractional digit")
        return Decimal(token)
    return Decimal(token)


def _scan_number(tokens: list[str] | tuple[str, ...], start: int) -> tuple[Decimal, Precision, int] | None:
    """Scan a number starting at ``start``; returns (magnitude, precision, stop).

    Recognizes a leading ``-`` token, then either one compact numeral token or
    a maximal run of single-character digit/separator tokens.
    """
    i = start
    negative = False
    if i < len(tokens) and tokens[i] == "-":
        negative = True
        i += 1
    if i >= len(tokens):
        return None
    tok = tokens[i]
    if not negative and len(tok) > 1 and tok.startswith("-") and _COMPACT_RE.match(tok[1:]):
        value = _parse_compact(tok[1:])
        if value is None:
            return None
        precision = Precision.INTEGER if value.as_tuple().exponent == 0 else Precision.ONE_DECIMAL
        return -value, precision, i + 1
    if len(tok) == 1 and tok in _DIGIT:
        digits: list[str] = []
        seps = 0
        frac_digits = 0
        j = i
        while j < len(tokens):
            t = tokens[j]
            if len(t) == 1 and t in _DIGIT:
                digits.append(t)
                if seps:
                    frac_digits += 1
                j += 1
            elif t == "." and seps == 0 and digits and j + 1 < len(tokens) and tokens[j + 1] in _DIGIT and len(tokens[j + 1]) == 1:
                digits.append(".")
                seps = 1
                j += 1
            elif t == "." and seps >= 1 and digits:
                raise MalformedNumber("more than one decimal separator in digit run")
            else:
                break
        if frac_digits > 1:
            raise MalformedNumber("more than one fractional digit in digit run")
        text = "".join(digits)
        value = Decimal(text)
        precision = Precision.ONE_DECIMAL if seps else Precision.INTEGER
    elif _COMPACT_RE.match(tok):
        value = _parse_compact(tok)
        if value is None:
            return None
        precision = Precision.INTEGER if value.as_tuple().exponent == 0 else Precision.ONE_DECIMAL
        j = i + 1
    else:
        return None
    if negative:
        value = -value
    return value, precision, j


def scan_quantity(
    tokens: list[str] | tuple[str, ...], start: int, lexicon: Lexicon
) -> tuple[Quantity, TokenSpan, str] | None:
    """Try to match a number immediately followed by a unit at ``start``.

    Returns (quantity, span, trailing punctuation) or None. Propagates
    MalformedNumber only when the malformed number sits directly before a
    unit lexeme (i.e. it would otherwise have been a match).
    """
    try:
        number = _scan_number(tokens, start)
    except MalformedNumber:
        # malformed: only an error when a unit follows the offending run
        j = start
        while j < len(tokens) and (tokens[j] in ("-", ".") or _COMPACT_RE.match(tokens[j])):
            j += 1
        if j > start and lexicon.match_unit(tokens, j) is not None:
            raise
        return None
    if number is None:
        return None
    value, precision, stop = number
    unit = lexicon.match_unit(tokens, stop)
    if unit is None:
        return None
    kind, unit_stop, trailing = unit
    return Quantity(value, kind, precision), TokenSpan(start, unit_stop), trailing


def parse_quantity(tokens: list[str] | tuple[str, ...], lexicon: Lexicon) -> tuple[Quantity, TokenSpan]:
    """Parse the first number-unit pair in a token sequence.

    The number may be digit-tokenized (``5 2 1 miles``) or compact
    (``521 miles``). Raises NoMatch when no pair is present, MalformedNumber
    when the number next to a unit has more than one decimal separator or an
    unrepresentable fraction.
    """
    for i in range(len(tokens)):
        found = scan_quantity(tokens, i, lexicon)
        if found is not None:
            quantity, span, _ = found
            return quantity, span
    raise NoMatch("no number-unit pair in token sequence")


FormatStyle = Literal["compact", "digit-tokenized"]


def format_quantity(q: Quantity, style: FormatStyle = "digit-tokenized", lexicon: Lexicon | None = None) -> list[str]:
    """Render a quantity as tokens; digit-tokenized style emits one token per
    digit and per decimal separator, then the unit token."""
    lex = lexicon if lexicon is not None else Lexicon.default()
    unit_tokens = lex.canonical_surface(q.unit).split(" ")
    mag = q.magnitude
    text = str(abs(mag))
    if style == "compact":
        number_tokens = [("-" if mag < 0 else "") + text]
    elif style == "digit-tokenized":
        number_tokens = (["-"] if mag < 0 else []) + list(text)
    else:
        raise ValueError(f"unknown style {style!r}")
    return number_tokens + unit_tokens
