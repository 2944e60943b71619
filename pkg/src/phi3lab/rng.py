"""Counter-based random streams.

Every random quantity is drawn from a Philox generator keyed by
``(seed, stream, *extra)``. Inside a stream, draws are laid out in a fixed
canonical order (e.g. Fourier modes sorted by ``|n|^2``), so a value depends
only on the key and its position, never on loop order or worker count.
"""
from __future__ import annotations

import numpy as np

# stream tags
FIELD = 0
INCREMENT = 1
GRAM = 2
LATTICE = 3
IID = 4

_MASK = (1 << 64) - 1


def stream(seed: int, tag: int, *extra: int) -> np.random.Generator:
    """Independent generator for ``(seed, tag, *extra)``; negative seeds are allowed."""
    key = [int(seed) & _MASK, int(tag)] + [int(e) & _MASK for e in extra]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(key)))


def child_seeds(seed: int, tag: int, n: int) -> list[int]:
    """n per-sample seeds derived from ``(seed, tag)``, stable in n's prefix."""
    ss = np.random.SeedSequence([int(seed) & _MASK, int(tag), 0xC41D])
    return [int(s) for s in ss.generate_state(n, dtype=np.uint64)]
