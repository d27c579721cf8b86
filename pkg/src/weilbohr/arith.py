"""Smallest-prime-factor sieve and the arithmetic functions built on it."""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np


@lru_cache(maxsize=8)
def _spf(n: int) -> np.ndarray:
    spf = np.zeros(n + 1, dtype=np.int64)
    for p in range(2, math.isqrt(n) + 1):
        if spf[p] == 0:
            block = spf[p * p::p]
            block[block == 0] = p
    idx = np.arange(n + 1)
    rest = (spf == 0) & (idx >= 2)
    spf[rest] = idx[rest]
    spf.setflags(write=False)
    return spf


def smallest_prime_factor(n: int) -> np.ndarray:
    """spf[k] for 0 <= k <= n (0 for k < 2)."""
    return _spf(int(n))


def primes_upto(n: int) -> np.ndarray:
    if n < 2:
        return np.zeros(0, dtype=np.int64)
    spf = _spf(int(n))
    idx = np.arange(len(spf))
    return idx[(spf == idx) & (idx >= 2)]


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n < 4:
        return True
    if n % 2 == 0:
        return False
    return all(n % d for d in range(3, math.isqrt(n) + 1, 2))


def factorize(n: int) -> dict:
    n = int(n)
    out = {}
    d = 2
    while d * d <= n:
        while n % d == 0:
            out[d] = out.get(d, 0) + 1
            n //= d
        d += 1 if d == 2 else 2
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out
