"""Deterministic random streams.

Every randomized operation derives its draws from ``(seed, purpose, *key)``
through :class:`numpy.random.SeedSequence` spawn keys, so results depend only
on the seed and the logical position of the draw, never on evaluation order
or scheduling. Purpose tags:

== ============================================================
1  background row sample shared by local attribution methods
2  variable-ordering draws, keyed by ordering index
3  row sample for permutation importance
4  single-column permutations, keyed by (column index, repetition)
5  row sample for aggregated profiles
6  joint all-column permutations, keyed by repetition
== ============================================================

Tests that re-implement an estimator as an independent oracle reproduce the
same draws from this table.
"""

from __future__ import annotations

import numpy as np

from .errors import ParameterError

STREAM_BACKGROUND = 1
STREAM_ORDERING = 2
STREAM_IMPORTANCE_ROWS = 3
STREAM_COLUMN_PERMUTATION = 4
STREAM_PROFILE_ROWS = 5
STREAM_JOINT_PERMUTATION = 6

_SEED_MAX = 2**64


def check_seed(seed: int) -> int:
    if not isinstance(seed, (int, np.integer)) or isinstance(seed, bool):
        raise ParameterError("seed must be an integer", field="seed")
    seed = int(seed)
    if not 0 <= seed < _SEED_MAX:
        raise ParameterError("seed must be a 64-bit unsigned integer", field="seed")
    return seed


def substream(seed: int, *key: int) -> np.random.Generator:
    """Generator for the substream identified by ``(seed, *key)``."""
    return np.random.default_rng(np.random.SeedSequence(check_seed(seed), spawn_key=tuple(key)))


def sample_rows(seed: int, purpose: int, n: int, size: int, *key: int) -> np.ndarray:
    """Sample ``min(size, n)`` distinct row indices, returned in ascending order."""
    size = min(size, n)
    idx = substream(seed, purpose, *key).choice(n, size=size, replace=False)
    return np.sort(idx)


def permutation(seed: int, purpose: int, n: int, *key: int) -> np.ndarray:
    """A permutation of ``range(n)`` drawn from the keyed substream."""
    return substream(seed, purpose, *key).permutation(n)
