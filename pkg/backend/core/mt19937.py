"""
MT19937 Mersenne Twister and the lab's draw-order contract.

All encoder randomness comes from one MtState. Draws are consumed as:

- ``next_u32``: the next tempered 32-bit output; the twist runs every 624 draws.
- ``next_f64``: ``next_u32() / 2**32``, a real in [0, 1).
- ``mt_shuffle(n)``: Fisher-Yates, i from n-1 down to 1, partner
  ``j = next_u32() % (i + 1)``; exactly n-1 draws.
- ``mt_sample(population, count)``: partial Fisher-Yates from the top of the
  population, ``r = next_u32() % (top + 1)``; exactly ``count`` draws.

Modulo reduction is deliberately rejection-free so the number of draws per
operation is fixed; the seed-recovery attack relies on it.

The batch helpers run the same generator over many seeds at once with numpy
and must stay bit-identical to the scalar path.
"""

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from core.errors import ConfigError

N = 624
M = 397
MASK32 = 0xFFFFFFFF
INIT_MULT = 1812433253
TWO_POW_32 = 4294967296.0

_MATRIX_A = np.uint32(0x9908B0DF)
_UPPER = np.uint32(0x80000000)
_LOWER = np.uint32(0x7FFFFFFF)
_ZERO = np.uint32(0)
_ONE = np.uint32(1)


def _mix(upper: np.ndarray, lower: np.ndarray) -> np.ndarray:
    y = (upper & _UPPER) | (lower & _LOWER)
    return (y >> _ONE) ^ np.where((y & _ONE) != 0, _MATRIX_A, _ZERO)


def twist(mt: np.ndarray) -> None:
    """Regenerate 624 words in place; works on (..., 624) uint32 arrays."""
    mt[..., 0:227] = mt[..., 397:624] ^ _mix(mt[..., 0:227], mt[..., 1:228])
    mt[..., 227:454] = mt[..., 0:227] ^ _mix(mt[..., 227:454], mt[..., 228:455])
    mt[..., 454:623] = mt[..., 227:396] ^ _mix(mt[..., 454:623], mt[..., 455:624])
    mt[..., 623] = mt[..., 396] ^ _mix(mt[..., 623], mt[..., 0])


def temper(y: np.ndarray) -> np.ndarray:
    y = y ^ (y >> np.uint32(11))
    y = y ^ ((y << np.uint32(7)) & np.uint32(0x9D2C5680))
    y = y ^ ((y << np.uint32(15)) & np.uint32(0xEFC60000))
    return y ^ (y >> np.uint32(18))


def _check_seed(seed: int) -> int:
    if not 0 <= int(seed) <= MASK32:
        raise ConfigError(f"seed must be a 32-bit unsigned integer, got {seed}")
    return int(seed)


@dataclass(eq=False)
class MtState:
    """Single-owner generator state: 624 words plus the read position."""

    state: np.ndarray
    index: int = N
    _block: Optional[np.ndarray] = field(default=None, repr=False)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MtState):
            return NotImplemented
        return self.index == other.index and np.array_equal(self.state, other.state)

    def _ensure_block(self) -> None:
        if self.index >= N:
            twist(self.state)
            self._block = temper(self.state)
            self.index = 0
        elif self._block is None:
            self._block = temper(self.state)

    def next_u32(self) -> int:
        self._ensure_block()
        value = int(self._block[self.index])
        self.index += 1
        return value

    def next_f64(self) -> float:
        return self.next_u32() / TWO_POW_32

    def next_u32_array(self, count: int) -> np.ndarray:
        """``count`` sequential draws; identical to calling next_u32 that often."""
        out = np.empty(count, dtype=np.uint32)
        filled = 0
        while filled < count:
            self._ensure_block()
            take = min(count - filled, N - self.index)
            out[filled:filled + take] = self._block[self.index:self.index + take]
            self.index += take
            filled += take
        return out

    def copy(self) -> "MtState":
        block = None if self._block is None else self._block.copy()
        return MtState(self.state.copy(), self.index, block)


def mt_seed(seed: int) -> MtState:
    """Reference init_genrand recurrence."""
    x = _check_seed(seed)
    mt = np.empty(N, dtype=np.uint32)
    mt[0] = x
    for i in range(1, N):
        x = (INIT_MULT * (x ^ (x >> 30)) + i) & MASK32
        mt[i] = x
    return MtState(mt)


def mt_next_u32(state: MtState) -> int:
    return state.next_u32()


def mt_next_f64(state: MtState) -> float:
    return state.next_f64()


def mt_shuffle(state: MtState, n: int) -> List[int]:
    if n < 1:
        raise ConfigError(f"shuffle size must be >= 1, got {n}")
    perm = list(range(n))
    for i in range(n - 1, 0, -1):
        j = state.next_u32() % (i + 1)
        perm[i], perm[j] = perm[j], perm[i]
    return perm


def mt_sample(state: MtState, population: int, count: int) -> List[int]:
    """Distinct indices from range(population), in draw order."""
    if count > population:
        raise ConfigError(f"cannot draw {count} distinct items from {population}")
    swaps = {}
    chosen = []
    for t in range(count):
        top = population - 1 - t
        r = state.next_u32() % (top + 1)
        chosen.append(swaps.get(r, r))
        swaps[r] = swaps.get(top, top)
    return chosen


def seed_states(seeds: np.ndarray) -> np.ndarray:
    """init_genrand for a whole batch of seeds, shape (B, 624)."""
    x = np.asarray(seeds, dtype=np.uint64) & np.uint64(MASK32)
    mt = np.empty((x.shape[0], N), dtype=np.uint32)
    mt[:, 0] = x
    mult = np.uint64(INIT_MULT)
    mask = np.uint64(MASK32)
    shift = np.uint64(30)
    for i in range(1, N):
        x = (mult * (x ^ (x >> shift)) + np.uint64(i)) & mask
        mt[:, i] = x
    return mt


def batch_draws(seeds: np.ndarray, count: int) -> np.ndarray:
    """First ``count`` outputs for every seed, shape (B, count)."""
    mt = seed_states(seeds)
    blocks = []
    produced = 0
    while produced < count:
        twist(mt)
        blocks.append(temper(mt))
        produced += N
    return np.concatenate(blocks, axis=1)[:, :count]


def batch_shuffle(draws: np.ndarray, offsets: np.ndarray, n: int) -> np.ndarray:
    """mt_shuffle for many streams, reading each row from its own offset."""
    rows = np.arange(draws.shape[0])
    perm = np.tile(np.arange(n, dtype=np.int64), (rows.shape[0], 1))
    for t, i in enumerate(range(n - 1, 0, -1)):
        j = (draws[rows, offsets + t] % np.uint32(i + 1)).astype(np.int64)
        held = perm[rows, i].copy()
        perm[rows, i] = perm[rows, j]
        perm[rows, j] = held
    return perm
