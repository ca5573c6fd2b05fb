"""Reproducible weighted index sampling for row and column selection.

Indices are drawn by inverse CDF: a uniform double in [0, 1) is scaled by
the total weight and located in the prefix sums with a binary search.

Uniforms come straight from the raw 64-bit output of a PCG64 bit generator
(top 53 bits, scaled by 2**-53).  numpy guarantees the raw bit-generator
stream for a given seed across versions and platforms, which the
higher-level ``Generator`` methods do not.
"""

from __future__ import annotations

from bisect import bisect_right
from itertools import accumulate

import numpy as np

from .dense import as_dense
from .errors import ArgumentError

_BLOCK = 1024
_MASK64 = (1 << 64) - 1


class WeightedSampler:
    __slots__ = ("weights", "total", "cumulative", "_cum", "_last")

    def __init__(self, weights):
        w = np.array(weights, dtype=np.float64)
        if w.ndim != 1 or w.size == 0:
            raise ArgumentError("weights must be a non-empty vector")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ArgumentError("weights must be finite and non-negative")
        self._cum = list(accumulate(w.tolist()))
        self.total = self._cum[-1]
        if not self.total > 0:
            raise ArgumentError("weights sum to zero; nothing to sample")
        w.setflags(write=False)
        self.weights = w
        self.cumulative = np.array(self._cum)
        self.cumulative.setflags(write=False)
        self._last = int(np.flatnonzero(w > 0)[-1])

    def __len__(self) -> int:
        return self.weights.size

    @property
    def probabilities(self) -> np.ndarray:
        return self.weights / self.total

    def locate(self, u: float) -> int:
        """Index whose CDF interval contains ``u`` in [0, 1)."""
        i = bisect_right(self._cum, u * self.total)
        # u * total can round up to total itself
        return i if i <= self._last else self._last


def sampler_from_rows(A) -> WeightedSampler:
    """Rows chosen with probability ``||a_i||^2 / ||A||_F^2``."""
    A = as_dense(A)
    if A.is_zero():
        raise ArgumentError("cannot sample rows of an all-zero matrix")
    return WeightedSampler(A.row_norms_sq)


def sampler_from_cols(A) -> WeightedSampler:
    A = as_dense(A)
    if A.is_zero():
        raise ArgumentError("cannot sample columns of an all-zero matrix")
    return WeightedSampler(A.col_norms_sq)


class RngStream:
    """Single-owner uniform stream keyed by ``(seed, stream_id)``.

    Equal keys give identical sequences; distinct stream ids (one per
    trial) give statistically independent sequences via numpy's
    ``SeedSequence`` spawn keys.
    """

    def __init__(self, seed: int, stream_id: int = 0):
        self.seed = int(seed) & _MASK64
        self.stream_id = int(stream_id) & _MASK64
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream_id,))
        self._bitgen = np.random.PCG64(ss)
        self._buf: list[float] = []
        self._pos = 0

    def random(self) -> float:
        if self._pos == len(self._buf):
            raw = self._bitgen.random_raw(_BLOCK)
            self._buf = ((raw >> np.uint64(11)).astype(np.float64) * 2.0**-53).tolist()
            self._pos = 0
        u = self._buf[self._pos]
        self._pos += 1
        return u

    def draw(self, sampler: WeightedSampler) -> int:
        return sampler.locate(self.random())


def problem_rng(seed: int, index: int = 0) -> np.random.Generator:
    """Generator for building the ``index``-th test problem from ``seed``.

    Uses a two-element spawn key, so it never coincides with a trial's
    :class:`RngStream` (whose keys have one element).
    """
    ss = np.random.SeedSequence(entropy=int(seed) & _MASK64, spawn_key=(0, int(index)))
    return np.random.Generator(np.random.PCG64(ss))


class ScriptedIndices:
    """Replays a fixed index sequence in place of an :class:`RngStream`.

    Useful for hand-checked iterations and for driving two algorithms with
    the same (column, row) choices.  Zero-weight indices are rejected.
    """

    def __init__(self, indices):
        self._it = iter(list(indices))

    def draw(self, sampler: WeightedSampler) -> int:
        try:
            i = int(next(self._it))
        except StopIteration:
            raise ArgumentError("scripted index sequence exhausted") from None
        if not 0 <= i < len(sampler) or sampler.weights[i] == 0:
            raise ArgumentError(f"scripted index {i} has zero probability")
        return i


def draw(s: WeightedSampler, rng) -> int:
    """Draw one index from ``s``, advancing ``rng``."""
    return rng.draw(s)
