"""Counter-based random number streams.

Every randomized routine in the package takes either a 64-bit integer seed
or a preconstructed ``numpy.random.Generator``.  Seeds are expanded with
Philox, a counter-based generator: ``substream(seed, i)`` positions the
256-bit counter at a fixed offset proportional to ``i``, so realization
``i`` of an experiment is reproducible on its own without generating the
preceding ``i - 1`` realizations.  Substreams are spaced 2**192 draws
apart and can never overlap in practice.
"""
from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def substream(seed: int, index: int = 0) -> np.random.Generator:
    """Return the generator for substream ``index`` of ``seed``."""
    if index < 0:
        raise ValueError("substream index must be nonnegative")
    bitgen = np.random.Philox(key=seed & _MASK64, counter=[0, 0, 0, index])
    return np.random.Generator(bitgen)


def master(seed: int) -> np.random.Generator:
    """Generator used for run-level draws (substream 0 is reserved for it)."""
    return substream(seed, 0)
