"""Counter-free xorshift64* streams shared by the numba and Python paths.

A stream is one ``uint64`` slot in a state array, so a worker pool holds one
array with a slot per worker. Both backends produce the same sequence for the
same seed, which keeps seeded runs comparable across ``IDSENSE_DISABLE_JIT``.
"""
import numpy as np

from ._jit import USE_NUMBA, njit

_MASK = (1 << 64) - 1
_MUL = 0x2545F4914F6CDD1D
_INV53 = 1.0 / 9007199254740992.0


def _splitmix64(x):
    x = (x + 0x9E3779B97F4A7C15) & _MASK
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return x, z ^ (z >> 31)


def make_state(seed, n_streams=1):
    """Seed ``n_streams`` independent generators from one integer seed."""
    x = int(seed) & _MASK
    out = np.empty(n_streams, dtype=np.uint64)
    for i in range(n_streams):
        x, z = _splitmix64(x)
        out[i] = z or 0x9E3779B97F4A7C15
    return out


if USE_NUMBA:

    @njit
    def next_uniform(state, i):
        x = state[i]
        x ^= x >> np.uint64(12)
        x ^= x << np.uint64(25)
        x ^= x >> np.uint64(27)
        state[i] = x
        return float((x * np.uint64(_MUL)) >> np.uint64(11)) * _INV53

else:

    def next_uniform(state, i):
        x = int(state[i])
        x ^= x >> 12
        x ^= (x << 25) & _MASK
        x ^= x >> 27
        state[i] = x
        return (((x * _MUL) & _MASK) >> 11) * _INV53


@njit
def next_below(state, i, n):
    k = int(next_uniform(state, i) * n)
    return k if k < n else n - 1


@njit
def alias_draw(prob, alias, state, i):
    slot = next_below(state, i, prob.shape[0])
    if next_uniform(state, i) < prob[slot]:
        return slot
    return alias[slot]


@njit
def alias_draw_many(prob, alias, state, n):
    out = np.empty(n, dtype=np.int64)
    for t in range(n):
        out[t] = alias_draw(prob, alias, state, 0)
    return out
