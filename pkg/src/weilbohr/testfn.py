"""Constructions on test functions.

Two convolutions live here and are kept apart on purpose:

* ``autocorrelate`` is the continuous multiplicative autocorrelation
  f(x) = int g(xy) conj(g(y)) dy used by the Weil positivity criterion;
* ``lattice_autocorrelate`` is the discrete Haar convolution G * G# on one
  lattice b^Z, the product under which the lattice Mellin transform at
  sigma = 1/2 is multiplicative: M(G * G#)(1/2, .) = |M(G)(1/2, .)|^2.

The quadratic-form identities for the prime and q places hold for the second
one; the continuous one differs from it off the lattice.
"""
from __future__ import annotations

import math

import numpy as np

from .domain import Autocorrelation, Combination, PrimeLatticeFunction, Star, TestFunction
from .errors import ContractError, DegeneracyError
from .mellin import QuadConfig, mellin_continuous


def involution_star(g: TestFunction) -> TestFunction:
    """g*(x) = g(1/x)/x; applying it twice returns the original object."""
    if isinstance(g, Star):
        return g.of
    return Star(g)


def autocorrelate(g: TestFunction, density: int = 4096, rtol: float = 1e-10) -> Autocorrelation:
    return Autocorrelation(g, density=density, rtol=rtol)


def lattice_conj_star(G: PrimeLatticeFunction) -> PrimeLatticeFunction:
    """G#(b^k) = b^(-k) conj(G(b^(-k)))."""
    ks = G.ks[::-1]
    vals = np.exp(ks * math.log(G.base)) * np.conj(G.values[::-1])
    k_min = -int(ks[0]) if len(ks) else 0
    return PrimeLatticeFunction(G.base, k_min, vals, G.label)


lattice_sharp = lattice_conj_star


def _check_same_lattice(G, H):
    if G.base != H.base or G.label != H.label:
        raise ContractError("lattice functions live on different lattices")


def haar_convolve(G: PrimeLatticeFunction, H: PrimeLatticeFunction) -> PrimeLatticeFunction:
    """(G * H)(b^k) = sum_j G(b^(k-j)) H(b^j), the unweighted lattice convolution."""
    _check_same_lattice(G, H)
    if len(G.values) == 0 or len(H.values) == 0:
        return PrimeLatticeFunction(G.base, 0, np.zeros(0, dtype=complex), G.label)
    return PrimeLatticeFunction(G.base, G.k_min + H.k_min,
                                np.convolve(G.values, H.values), G.label)


def lattice_autocorrelate(G: PrimeLatticeFunction) -> PrimeLatticeFunction:
    """H(b^k) = sum_j G(b^(k+j)) conj(G(b^j)) b^j."""
    return haar_convolve(G, lattice_conj_star(G))


def lattice_window(f: TestFunction, base: float) -> tuple[int, int]:
    """Smallest k-range whose lattice points cover supp f."""
    la, lb = f.log_support
    lbase = math.log(base)
    # tolerate rounding when a support endpoint is itself a lattice point
    k_lo = math.ceil(la / lbase - 1e-12)
    k_hi = math.floor(lb / lbase + 1e-12)
    return k_lo, k_hi


def lattice_restrict(f: TestFunction, base: float, window: tuple[int, int] | None = None,
                     auto_expand: bool = True, label=None) -> PrimeLatticeFunction:
    """Values f(b^k) over a window of k covering every lattice point in supp f."""
    if not base > 1:
        raise ContractError("lattice base must exceed 1")
    k_lo, k_hi = lattice_window(f, base)
    if window is not None:
        w_lo, w_hi = window
        if (w_lo > k_lo or w_hi < k_hi) and k_lo <= k_hi:
            if not auto_expand:
                raise ContractError(
                    f"window {window} misses lattice points of the support ({k_lo}..{k_hi})")
            w_lo, w_hi = min(w_lo, k_lo), max(w_hi, k_hi)
        k_lo, k_hi = w_lo, w_hi
    if k_hi < k_lo:
        return PrimeLatticeFunction(base, 0, np.zeros(0, dtype=complex), label)
    ks = np.arange(k_lo, k_hi + 1)
    if abs(base - round(base)) < 1e-12:
        pts = np.array([float(round(base)) ** int(k) for k in ks])
    else:
        pts = np.exp(ks * math.log(base))
    return PrimeLatticeFunction(base, k_lo, f(pts), label)


def project_mellin_vanishing(g0: TestFunction, g1: TestFunction, g2: TestFunction,
                             quad: QuadConfig | None = None,
                             max_condition: float = 1e12) -> TestFunction:
    """g0 + c1 g1 + c2 g2 with M(.)(0) = M(.)(1) = 0.

    Raises DegeneracyError when the 2x2 system in (c1, c2) has condition
    number above ``max_condition``.
    """
    cfg = quad or QuadConfig(rtol=1e-13)
    m = np.array([[mellin_continuous(g, s, cfg) for g in (g0, g1, g2)] for s in (0.0, 1.0)])
    if np.all(np.abs(m[:, 0]) <= 1e-14):
        return g0
    A = m[:, 1:]
    cond = np.linalg.cond(A)
    if not cond <= max_condition:
        raise DegeneracyError(f"Mellin-vanishing system is degenerate (condition {cond:.3g})")
    c = np.linalg.solve(A, -m[:, 0])
    if np.all(np.abs(c.imag) <= 1e-15 * np.abs(c).max()):
        c = c.real
    return Combination(((1.0, g0), (c[0], g1), (c[1], g2)))
