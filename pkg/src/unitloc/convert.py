"""Exact conversion math: affine conversions, precision truncation, tolerances.

All arithmetic is exact rational (``fractions.Fraction``); binary floats never
appear. A conversion is ``y = (x - offset) * scale``. ``mtokm`` uses the
factor 1.60934 (exactly as a rational, not the legal 1.609344) and ``ftoc``
is ``(x - 32) * 5/9``.

Outputs are *truncated toward zero* at the display precision, never rounded.
For 521 miles this yields 838 km (521 * 1.60934 = 838.46...); the value 839
sometimes quoted for this example comes from rounding and is intentionally
not reproduced — see the package README.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from decimal import Decimal
from enum import Enum
from fractions import Fraction
from importlib import resources
from pathlib import Path

from .quantity import Precision, Quantity, UnitKind


class UnitMismatch(Exception):
    """Quantity's unit does not match the conversion's expected unit."""


@dataclass(frozen=True)
class ConversionSpec:
    """An affine conversion ``y = (x - offset) * scale`` between two units."""

    name: str
    offset: Fraction
    scale: Fraction
    source_unit: UnitKind
    target_unit: UnitKind

    def __post_init__(self) -> None:
        if self.scale == 0:
            raise ValueError("conversion scale must be nonzero")
        if self.target_unit is not self.source_unit.partner:
            raise ValueError(f"{self.source_unit.name} does not pair with {self.target_unit.name}")

    @property
    def dimension(self) -> str:
        return self.source_unit.dimension


def _load_registry_dict(doc: dict) -> dict[str, ConversionSpec]:
    registry = {}
    for entry in doc["conversions"]:
        num, den = entry["scale"]
        spec = ConversionSpec(
            name=entry["name"],
            offset=Fraction(Decimal(entry["offset"])),
            scale=Fraction(num, den),
            source_unit=UnitKind[entry["source_unit"]],
            target_unit=UnitKind[entry["target_unit"]],
        )
        registry[spec.name] = spec
    return registry


def load_registry(path: str | Path) -> dict[str, ConversionSpec]:
    """Load a conversion registry document (see data/conversions.json)."""
    with open(path, encoding="utf-8") as fh:
        return _load_registry_dict(json.load(fh))


def default_registry() -> dict[str, ConversionSpec]:
    text = resources.files("unitloc.data").joinpath("conversions.json").read_text(encoding="utf-8")
    return _load_registry_dict(json.loads(text))


def spec_for_unit(registry: dict[str, ConversionSpec], unit: UnitKind) -> ConversionSpec:
    """The registry entry whose source or target unit is ``unit``."""
    for spec in registry.values():
        if unit in (spec.source_unit, spec.target_unit):
            return spec
    raise KeyError(f"no conversion registered for {unit.name}")


def convert_exact(x: Fraction | Decimal | int, spec: ConversionSpec) -> Fraction:
    """``(x - offset) * scale`` in exact rational arithmetic, no rounding."""
    return (Fraction(x) - spec.offset) * spec.scale


def apply_precision(y: Fraction | Decimal | int, precision: Precision) -> Decimal:
    """Truncate toward zero at the precision's decimal place."""
    scaled = Fraction(y) * 10 ** (-precision.exponent)
    truncated = abs(scaled.numerator) // scaled.denominator
    if scaled < 0:
        truncated = -truncated
    return Decimal(truncated).scaleb(precision.exponent)


def convert(q: Quantity, spec: ConversionSpec) -> Quantity:
    """Convert a quantity, truncating the output to the input's precision."""
    if q.unit is not spec.source_unit:
        raise UnitMismatch(f"cannot apply {spec.name} to {q.unit.name}")
    magnitude = apply_precision(convert_exact(q.magnitude, spec), q.precision)
    return Quantity(magnitude, spec.target_unit, q.precision)


def invert(q: Quantity, spec: ConversionSpec, precision: Precision) -> Quantity:
    """Map a target-unit quantity back, truncated at a caller-chosen precision.

    Used when rewriting the opposite side of a parallel pair: the inverse of
    an integer metric value is usually rendered one decimal finer (5 km maps
    to 3.1 miles).
    """
    if q.unit is not spec.target_unit:
        raise UnitMismatch(f"cannot invert {spec.name} from {q.unit.name}")
    x = Fraction(q.magnitude) / spec.scale + spec.offset
    return Quantity(apply_precision(x, precision), spec.source_unit, precision)


def round_trip_bound(spec: ConversionSpec, source_precision: Precision, target_precision: Precision) -> Fraction:
    """Worst-case |convert_exact(src) - tgt| when each side was truncated once.

    One truncation on the source side moves the exact image by at most
    ulp(src) * |scale|; one on the target side adds ulp(tgt).
    """
    return Fraction(source_precision.ulp) * abs(spec.scale) + Fraction(target_precision.ulp)


class ToleranceMode(Enum):
    RELATIVE = "RELATIVE"
    EXACT = "EXACT"


@dataclass(frozen=True)
class ToleranceSpec:
    mode: ToleranceMode
    threshold: Fraction = Fraction(0)

    def __post_init__(self) -> None:
        if self.mode is ToleranceMode.RELATIVE and self.threshold <= 0:
            raise ValueError("relative tolerance requires a positive threshold")

    @property
    def label(self) -> str:
        if self.mode is ToleranceMode.EXACT:
            return "0"
        return format(float(self.threshold), "g")


def parse_tolerance(text: str) -> ToleranceSpec:
    """Parse a tolerance flag value: "0" means exact match, else relative."""
    value = Fraction(Decimal(text))
    if value == 0:
        return ToleranceSpec(ToleranceMode.EXACT)
    return ToleranceSpec(ToleranceMode.RELATIVE, value)


def within_tolerance(pred: Decimal | Fraction | int, ref: Decimal | Fraction | int, tol: ToleranceSpec) -> bool:
    """Accept ``pred`` against ``ref``; relative mode is |pred-ref|/|ref| <= t.

    A zero reference with a nonzero prediction cannot be scored relatively
    and counts as a failure; pred = ref = 0 is within any tolerance.
    """
    p, r = Fraction(pred), Fraction(ref)
    if tol.mode is ToleranceMode.EXACT:
        return p == r
    if r == 0:
        return p == 0
    return abs(p - r) / abs(r) <= tol.threshold
