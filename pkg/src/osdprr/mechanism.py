"""Seeded one-sided randomized-response release decisions.

The mechanism never releases a sensitive record.  A non-sensitive record is
released with probability ``1 - exp(-epsilon)``.

Randomness comes from numpy's PCG64 generator (``numpy.random.default_rng``):
the same seed yields the same decision sequence within this implementation
(cross-language equality is not promised).  Exactly one uniform draw is
consumed per non-sensitive record and none for sensitive records, so a
stream's decisions are stable under insertion order.  Streams may be
parallelized only by splitting into chunks whose generators are seeded with
``seed XOR chunk_index``; `release_stream` implements that derivation.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import InvalidParameterError
from .model import ReleaseOutcome, SensitivityIndicator, _check_epsilon

_SEED_MASK = (1 << 64) - 1


def check_seed(seed: int) -> int:
    """Validate a 64-bit unsigned RNG seed."""
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
        raise InvalidParameterError(f"seed must be an integer, got {seed!r}")
    seed = int(seed)
    if not 0 <= seed <= _SEED_MASK:
        raise InvalidParameterError(f"seed must fit in 64 unsigned bits, got {seed}")
    return seed


def chunk_seed(seed: int, chunk_index: int) -> int:
    """Derived seed for a stream chunk: ``seed XOR chunk_index``."""
    return check_seed(seed) ^ chunk_index


def release_probability(epsilon: float) -> float:
    """Probability that a non-sensitive record is released: ``1 - exp(-epsilon)``."""
    epsilon = _check_epsilon("epsilon", epsilon)
    return -math.expm1(-epsilon)


def osdprr_release(
    x: SensitivityIndicator | int,
    epsilon: float,
    rng: np.random.Generator,
) -> ReleaseOutcome:
    """Release decision for a single record.

    Sensitive records (``x = 0``) are always suppressed and consume no
    randomness.  Non-sensitive records consume one uniform draw and are
    released when it falls below ``1 - exp(-epsilon)``.
    """
    p = release_probability(epsilon)
    if x not in (0, 1):
        raise InvalidParameterError(f"sensitivity indicator must be 0 or 1, got {x!r}")
    if x == SensitivityIndicator.SENSITIVE:
        return ReleaseOutcome.SUPPRESSED
    return ReleaseOutcome.RELEASED if rng.random() < p else ReleaseOutcome.SUPPRESSED


def release_stream(xs, epsilon: float, seed: int, chunks: int = 1) -> np.ndarray:
    """Element-wise release decisions for a stream of sensitivity indicators.

    Returns a ``uint8`` array of `ReleaseOutcome` codes (1 = released).  With
    ``chunks = 1`` the result is identical to applying `osdprr_release`
    record by record with a single generator seeded from ``seed``.  With
    ``chunks > 1`` the stream is split into contiguous chunks processed with
    independently derived seeds (``seed XOR chunk_index``), which changes the
    draws but keeps the result deterministic given ``(xs, epsilon, seed,
    chunks)`` and preserves the no-sensitive-release guarantee.
    """
    p = release_probability(epsilon)
    seed = check_seed(seed)
    if isinstance(chunks, bool) or not isinstance(chunks, int) or chunks < 1:
        raise InvalidParameterError(f"chunks must be a positive integer, got {chunks!r}")
    xs = np.asarray(xs)
    if xs.ndim != 1:
        raise InvalidParameterError("xs must be a one-dimensional sequence")
    if xs.size and not np.isin(xs, (0, 1)).all():
        raise InvalidParameterError("sensitivity indicators must all be 0 or 1")
    xs = xs.astype(np.uint8, copy=False)

    out = np.zeros(xs.size, dtype=np.uint8)
    for index, (lo, hi) in enumerate(_chunk_bounds(xs.size, chunks)):
        rng = np.random.default_rng(chunk_seed(seed, index))
        nonsensitive = np.flatnonzero(xs[lo:hi] == 1)
        draws = rng.random(nonsensitive.size)
        out[lo + nonsensitive] = draws < p
    return out


def _chunk_bounds(size: int, chunks: int):
    edges = np.linspace(0, size, chunks + 1).astype(int)
    return zip(edges[:-1], edges[1:])
