"""Counted splittable randomness: every consumer derives its generator
from one root seed plus a stable tag, so worker count and scheduling
cannot change sampled values."""

from __future__ import annotations

import hashlib
import random


def derive_seed(root: int, *tags) -> int:
    text = "|".join([str(root), *map(str, tags)])
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def spawn_rng(root: int, *tags) -> random.Random:
    return random.Random(derive_seed(root, *tags))
