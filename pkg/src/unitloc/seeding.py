"""Named sub-seed derivation so every random stream is auditable.

All randomness in the toolkit flows from one top-level seed. Components never
share a raw seed; they derive their own with ``derive_seed(seed, "component",
"purpose", ...)`` so that adding a consumer never perturbs existing streams.
"""

from __future__ import annotations

import hashlib
import random

_MASK63 = (1 << 63) - 1


def derive_seed(seed: int, *labels: str | int) -> int:
    """Derive a 63-bit sub-seed from a top-level seed and a label path."""
    h = hashlib.blake2b(digest_size=8)
    h.update(str(seed).encode("utf-8"))
    for label in labels:
        h.update(b"/")
        h.update(str(label).encode("utf-8"))
    return int.from_bytes(h.digest(), "little") & _MASK63


def derive_rng(seed: int, *labels: str | int) -> random.Random:
    """A ``random.Random`` seeded with :func:`derive_seed`."""
    return random.Random(derive_seed(seed, *labels))
