"""Labeled, counter-based random streams.

Every consumer (outcome draws, policy draws, ...) gets its own named stream
derived from the master seed, so adding a consumer never perturbs the draws
of another. Draws are keyed, not sequential: the value depends only on
(seed, stream label, key), which makes transitions replayable without
carrying generator state around.
"""

from __future__ import annotations

import hashlib


class SplitRng:
    """One named draw stream derived from a master seed."""

    def __init__(self, master_seed: int, label: str):
        self.master_seed = int(master_seed)
        self.label = label

    def _digest(self, key: tuple) -> int:
        material = f"{self.master_seed}|{self.label}|" + "|".join(str(k) for k in key)
        h = hashlib.blake2b(material.encode("utf-8"), digest_size=8)
        return int.from_bytes(h.digest(), "big")

    def uniform(self, *key) -> float:
        """Uniform in [0, 1), a pure function of (seed, label, key)."""
        return self._digest(key) / 2**64

    def spawn(self, sublabel: str) -> "SplitRng":
        return SplitRng(self.master_seed, f"{self.label}/{sublabel}")
