"""Named deterministic RNG streams derived from a single root seed.

Each consumer (per-robot lidar noise, per-robot drift walk, per-link
latency draws) gets its own stream keyed by stable string labels, so
adding or removing one consumer never perturbs the draws of another.
"""

from __future__ import annotations

import hashlib

import numpy as np


def _label_entropy(label) -> int:
    digest = hashlib.sha256(str(label).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def derive_rng(root_seed: int, *labels) -> np.random.Generator:
    """Build a generator for the stream named by ``labels``."""
    entropy = [int(root_seed)] + [_label_entropy(lb) for lb in labels]
    return np.random.default_rng(np.random.SeedSequence(entropy))
