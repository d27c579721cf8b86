"""Classical ground truth: zeta and digamma, the von Mangoldt function,
zeros on the critical line, and the two explicit-formula checks.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy.optimize import brentq
from scipy.special import bernoulli, loggamma, psi

from .arith import smallest_prime_factor
from .domain import TestFunction, ZeroTable
from .errors import DomainError, IntegrityError, PoleError, ZeroFileError

EULER_GAMMA = 0.5772156649015329

_EM_TERMS = 18
_B2K = bernoulli(2 * _EM_TERMS)[2::2]  # B_2, B_4, ..., B_{2M}
_EM_COEF = np.array([_B2K[k] / math.factorial(2 * k + 2) for k in range(_EM_TERMS)])


def _zeta_em(s: complex) -> complex:
    # Euler-Maclaurin with N above |s|/2 keeps the correction terms
    # shrinking by roughly (1/pi)^2 each
    N = int(max(12, math.ceil(0.5 * abs(s) + 10)))
    n = np.arange(1, N, dtype=float)
    head = np.exp(-s * np.log(n)).sum()
    logN = math.log(N)
    NS = np.exp(-s * logN)
    total = head + N * NS / (s - 1) + 0.5 * NS
    # term_k = B_{2k}/(2k)! * s(s+1)...(s+2k-2) * N^(-s-2k+1)
    poch = s
    power = NS / N
    for k in range(_EM_TERMS):
        total += _EM_COEF[k] * poch * power
        poch *= (s + 2 * k + 1) * (s + 2 * k + 2)
        power /= N * N
    return complex(total)


def zeta_eval(s) -> complex:
    """Riemann zeta at a complex point (or array of points), s != 1."""
    arr = np.asarray(s, dtype=complex)
    if np.any(arr == 1):
        raise PoleError("zeta has a pole at s = 1")
    if arr.ndim == 0:
        return _zeta_em(complex(arr))
    return _zeta_em_vec(arr)


def _zeta_em_vec(s: np.ndarray) -> np.ndarray:
    flat = s.ravel()
    out = np.empty(flat.shape, dtype=complex)
    order = np.argsort(np.abs(flat))
    # group points of similar |s| to share one N per block
    block = 256
    for start in range(0, len(order), block):
        idx = order[start:start + block]
        ss = flat[idx]
        N = int(max(12, math.ceil(0.5 * np.abs(ss).max() + 10)))
        logs = np.log(np.arange(1, N, dtype=float))
        acc = np.zeros(len(ss), dtype=complex)
        step = max(1, 4_000_000 // max(len(ss), 1))
        for j in range(0, len(logs), step):
            acc += np.exp(-np.outer(ss, logs[j:j + step])).sum(axis=1)
        logN = math.log(N)
        NS = np.exp(-ss * logN)
        total = acc + N * NS / (ss - 1) + 0.5 * NS
        poch = ss.copy()
        power = NS / N
        for k in range(_EM_TERMS):
            total += _EM_COEF[k] * poch * power
            poch = poch * (ss + 2 * k + 1) * (ss + 2 * k + 2)
            power = power / (N * N)
        out[idx] = total
    return out.reshape(s.shape)


# ---------------------------------------------------------------------------
# digamma
# ---------------------------------------------------------------------------

def digamma(s):
    """Gamma'/Gamma at a complex point or array; poles raise PoleError."""
    arr = np.asarray(s, dtype=complex)
    bad = (arr.imag == 0) & (arr.real <= 0) & (arr.real == np.round(arr.real))
    if np.any(bad):
        raise PoleError("digamma has poles at the nonpositive integers")
    out = psi(arr)
    return complex(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# von Mangoldt and Chebyshev psi
# ---------------------------------------------------------------------------


def von_mangoldt_sieve(N: int) -> np.ndarray:
    """Array L with L[n] = Lambda(n) for 0 <= n <= N (L[0] = L[1] = 0)."""
    if N < 1:
        raise DomainError("N must be at least 1")
    spf = smallest_prime_factor(N)
    n = np.arange(N + 1)
    out = np.zeros(N + 1)
    p = spf[2:]
    m = n[2:].copy()
    # strip the smallest prime factor completely; prime powers reduce to 1
    while True:
        divisible = (m % p == 0) & (m > 1)
        if not divisible.any():
            break
        m[divisible] //= p[divisible]
    prime_power = m == 1
    out[2:][prime_power] = np.log(p[prime_power])
    return out


def chebyshev_psi(x: float) -> float:
    """Sum of Lambda(n) over n <= x."""
    if x < 1:
        raise DomainError("chebyshev_psi needs x >= 1")
    N = int(math.floor(x))
    if N < 2:
        return 0.0
    return float(math.fsum(von_mangoldt_sieve(N)))


# ---------------------------------------------------------------------------
# zeros
# ---------------------------------------------------------------------------


def riemann_siegel_theta(t):
    t = np.asarray(t, dtype=float)
    return np.imag(loggamma(0.25 + 0.5j * t)) - 0.5 * t * math.log(math.pi)


def hardy_z(t):
    t = np.asarray(t, dtype=float)
    z = zeta_eval(0.5 + 1j * t)
    return np.real(np.exp(1j * riemann_siegel_theta(t)) * z)


def zero_count(T: float) -> int:
    """N(T), the number of zeros with 0 < gamma <= T, by the argument principle.

    arg zeta(1/2 + iT) is followed continuously along the horizontal segment
    from sigma = 3 (where |arg| < pi/2) to sigma = 1/2.  T must not be a zero.
    """
    sig = np.linspace(3.0, 0.5, 4000)
    vals = zeta_eval(sig + 1j * T)
    arg = np.unwrap(np.angle(vals))
    S = arg[-1] / math.pi
    return int(round(float(riemann_siegel_theta(T)) / math.pi + 1.0 + S))


@lru_cache(maxsize=4)
def _scan_zeros(count: int, step: float) -> tuple:
    found: list[float] = []
    t0 = 10.0
    while len(found) < count:
        ts = np.arange(t0, t0 + 50.0 + step / 2, step)
        z = hardy_z(ts)
        for i in np.flatnonzero(np.sign(z[:-1]) * np.sign(z[1:]) < 0):
            root = brentq(lambda t: float(hardy_z(t)), ts[i], ts[i + 1], xtol=1e-12, rtol=1e-15)
            found.append(root)
            if len(found) == count:
                break
        t0 = ts[-1]
    return tuple(found)


def find_zeros(count: int, step: float = 0.05) -> ZeroTable:
    """First ``count`` zero ordinates by a sign scan of Hardy's Z-function.

    The scan result is checked against N(T) from the argument principle at a
    height between the last found zero and the next one; a mismatch means a
    sign change was missed and raises IntegrityError.
    """
    if count < 0:
        raise DomainError("count must be nonnegative")
    if count == 0:
        return ZeroTable(np.zeros(0), "computed")
    zeros = _scan_zeros(int(count), float(step))
    nxt = _scan_zeros(int(count) + 1, float(step))[-1]
    T = 0.5 * (zeros[-1] + nxt)
    n = zero_count(T)
    if n != count:
        raise IntegrityError(f"sign scan found {count} zeros below T={T:.3f}, N(T)={n}")
    return ZeroTable(np.array(zeros), "computed")


def load_zeros(path) -> ZeroTable:
    """Read one positive decimal ordinate per line; '#' starts a comment."""
    out: list[float] = []
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ZeroFileError(f"cannot read zero file: {exc}", 0) from None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            g = float(line)
        except ValueError:
            raise ZeroFileError(f"not a decimal number: {line!r}", lineno) from None
        if not (g > 0 and math.isfinite(g)):
            raise ZeroFileError(f"ordinate must be positive: {line!r}", lineno)
        if out and g <= out[-1]:
            raise ZeroFileError("ordinates must be strictly increasing", lineno)
        out.append(g)
    return ZeroTable(np.array(out), "loaded")


# ---------------------------------------------------------------------------
# explicit formulas
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class VonMangoldtCheck:
    x: float
    prime_side: float
    zero_side: float
    gap: float
    n_zeros: int


def von_mangoldt_check(x: float, zeros: ZeroTable) -> VonMangoldtCheck:
    """Both sides of the von Mangoldt explicit formula at x > 1.

    prime side: sum_{1<n<x} Lambda(n) + Lambda(x)/2
    zero side:  x - sum_gamma 2 Re(x^rho/rho) - log(2 pi) - log(1 - x^-2)/2
    """
    if not x > 1:
        raise DomainError("x must exceed 1")
    N = int(math.floor(x))
    lam = von_mangoldt_sieve(max(N, 2))
    prime = math.fsum(lam[2:N + 1])
    if float(N) == x:
        prime -= 0.5 * lam[N]
    rho = 0.5 + 1j * np.asarray(zeros.ordinates)
    terms = 2.0 * np.real(np.exp(rho * math.log(x)) / rho)
    zero = x - math.fsum(terms) - math.log(2 * math.pi) - 0.5 * math.log(1 - x ** -2)
    return VonMangoldtCheck(x, prime, zero, prime - zero, len(zeros))


@dataclass(frozen=True)
class ZeroSide:
    value: float
    pole_terms: float
    zero_sum: float
    tail_estimate: float
    warning: bool


def explicit_formula_zero_side(f: TestFunction, zeros: ZeroTable, tol: float = 1e-6,
                               quad=None) -> ZeroSide:
    """M(f)(0) + M(f)(1) - sum over zeros of M(f)(rho), pairing +-gamma.

    The tail estimate extrapolates |M(f)(1/2 + i gamma)| beyond the last
    zero with the local zero density log(T/2pi)/2pi over one more
    window of the same length as the last tenth of the table.
    """
    from .mellin import mellin_continuous, mellin_critical_line

    g = np.asarray(zeros.ordinates)
    m0 = mellin_continuous(f, 0.0, quad)
    m1 = mellin_continuous(f, 1.0, quad)
    poles = m0 + m1
    if len(g):
        vals = mellin_critical_line(f, g, quad)
        zs = 2.0 * np.real(vals) if f.is_real else vals + np.conj(
            mellin_critical_line(f, -g, quad))
        zero_sum = complex(np.sum(zs))
        last = np.abs(vals[-max(1, len(g) // 10):])
        T = g[-1]
        density = math.log(T / (2 * math.pi)) / (2 * math.pi)
        tail = float(2.0 * last.max() * density * max(1.0, 0.1 * T))
    else:
        zero_sum = 0j
        tail = math.inf
    value = poles - zero_sum
    if f.is_real:
        value = value.real
        poles = poles.real
        zero_sum = zero_sum.real
    return ZeroSide(value, poles, zero_sum, tail, tail > tol)
