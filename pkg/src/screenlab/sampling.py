"""Seeded random designs and per-repetition random streams.

Every stream is keyed by ``(master_seed, stream_index)`` through a numpy
``SeedSequence`` feeding a Philox counter-based bit generator, so a
repetition's random numbers never depend on which worker runs it or in
what order.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .core import DesignMatrix, InvalidShape, validate_design

SEED_ENV = "SCREENLAB_SEED"
DEFAULT_SEED = 20190101

# Sub-stream purposes within one repetition.
DESIGN = 0
FOLDS = 1
EXTRA = 2


@dataclass(frozen=True)
class SeededStream:
    master_seed: int
    stream_index: int = 0

    def generator(self, purpose: int = DESIGN) -> np.random.Generator:
        """Fresh generator for one use inside this stream.

        Distinct ``purpose`` values give independent generators, so drawing
        CV folds does not shift the design draws and vice versa.
        """
        ss = np.random.SeedSequence(
            entropy=self.master_seed & 0xFFFF_FFFF_FFFF_FFFF,
            spawn_key=(self.stream_index, purpose),
        )
        return np.random.Generator(np.random.Philox(ss))


def spawn_rep_stream(master_seed: int, rep: int) -> SeededStream:
    if rep < 0:
        raise ValueError("rep must be nonnegative")
    return SeededStream(int(master_seed), int(rep))


def resolve_seed(seed: int | None) -> int:
    """Explicit seed, else ``$SCREENLAB_SEED``, else the package default."""
    if seed is not None:
        return int(seed)
    env = os.environ.get(SEED_ENV)
    if env:
        return int(env)
    return DEFAULT_SEED


def sample_uniform_design(n: int, p: int, stream: SeededStream) -> DesignMatrix:
    """``n x p`` i.i.d. Uniform[0, 1) design drawn from ``stream``."""
    if n < 2 or p < 1:
        raise InvalidShape(f"need n >= 2 and p >= 1, got n={n}, p={p}")
    # Generator.random never returns 1.0
    return validate_design(stream.generator(DESIGN).random((n, p)))
