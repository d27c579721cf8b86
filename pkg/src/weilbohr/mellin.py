"""Lattice Mellin transforms as trigonometric polynomials in one torus angle,
and the continuous Mellin transform by Gauss-Legendre quadrature in log x.

Convention: for a lattice function F on b^Z,

    M(F)(sigma, theta) = sum_j F(b^j) b^(j sigma) e^(i j theta).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .domain import (Autocorrelation, Indicator, log_breakpoints, Combination, GridSampled, PrimeLatticeFunction, Star,
                     TestFunction)
from .errors import NumericError


@dataclass(frozen=True)
class QuadConfig:
    rtol: float = 1e-10
    nodes: int = 20          # Gauss-Legendre nodes per panel
    min_panels: int = 4
    max_refine: int = 8
    chunk: int = 4_000_000   # max entries of one s-by-node matrix

    def __post_init__(self):
        if self.max_refine < 1 or self.nodes < 1 or self.min_panels < 1:
            raise ValueError("quadrature needs max_refine, nodes, min_panels >= 1")


DEFAULT_QUAD = QuadConfig()


@dataclass(frozen=True, eq=False)
class TrigPolynomial:
    """sum_j coeffs[j - offset] e^(i j theta) on the circle of one torus label."""

    label: object
    offset: int
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex).ravel()
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "offset", int(self.offset))

    @classmethod
    def constant(cls, label, value=1.0):
        return cls(label, 0, np.array([value], dtype=complex))

    @classmethod
    def from_dict(cls, label, coeffs: dict):
        if not coeffs:
            return cls(label, 0, np.zeros(0, dtype=complex))
        lo, hi = min(coeffs), max(coeffs)
        arr = np.zeros(hi - lo + 1, dtype=complex)
        for j, c in coeffs.items():
            arr[j - lo] = c
        return cls(label, lo, arr)

    @property
    def degrees(self) -> np.ndarray:
        return np.arange(self.offset, self.offset + len(self.coeffs))

    @property
    def max_degree(self) -> int:
        if len(self.coeffs) == 0:
            return 0
        return int(max(abs(self.offset), abs(self.offset + len(self.coeffs) - 1)))

    def coeff(self, j: int) -> complex:
        i = j - self.offset
        return complex(self.coeffs[i]) if 0 <= i < len(self.coeffs) else 0j

    def to_dict(self) -> dict:
        return {int(j): complex(c) for j, c in zip(self.degrees, self.coeffs) if c != 0}

    def mean(self) -> complex:
        return self.coeff(0)

    def __call__(self, theta):
        theta = np.asarray(theta, dtype=float)
        if len(self.coeffs) == 0:
            return np.zeros(theta.shape, dtype=complex)
        # Horner in z = e^(i theta), then the shift z^offset
        z = np.exp(1j * theta)
        out = np.full(theta.shape, self.coeffs[-1], dtype=complex)
        for c in self.coeffs[-2::-1]:
            out = out * z + c
        if self.offset:
            out = out * np.exp(1j * self.offset * theta)
        return out

    def conj(self) -> "TrigPolynomial":
        """Pointwise complex conjugate: c_j -> conj(c_{-j})."""
        n = len(self.coeffs)
        return TrigPolynomial(self.label, -(self.offset + n - 1), np.conj(self.coeffs[::-1]))

    def __mul__(self, other):
        if isinstance(other, TrigPolynomial):
            if other.label != self.label:
                raise ValueError("multiply polynomials of different labels via TorusSeries")
            if len(self.coeffs) == 0 or len(other.coeffs) == 0:
                return TrigPolynomial(self.label, 0, np.zeros(0, dtype=complex))
            return TrigPolynomial(self.label, self.offset + other.offset,
                                  np.convolve(self.coeffs, other.coeffs))
        return TrigPolynomial(self.label, self.offset, self.coeffs * other)

    __rmul__ = __mul__

    def __add__(self, other: "TrigPolynomial"):
        if other.label != self.label:
            raise ValueError("add polynomials of different labels via TorusSeries")
        if len(other.coeffs) == 0:
            return self
        if len(self.coeffs) == 0:
            return other
        lo = min(self.offset, other.offset)
        hi = max(self.offset + len(self.coeffs), other.offset + len(other.coeffs))
        arr = np.zeros(hi - lo, dtype=complex)
        arr[self.offset - lo:self.offset - lo + len(self.coeffs)] += self.coeffs
        arr[other.offset - lo:other.offset - lo + len(other.coeffs)] += other.coeffs
        return TrigPolynomial(self.label, lo, arr)

    def pair(self, other: "TrigPolynomial") -> complex:
        """Haar integral of self * other over the circle: sum_j a_j b_{-j}."""
        total = 0j
        for j, c in zip(self.degrees, self.coeffs):
            total += c * other.coeff(-int(j))
        return total


def mellin_lattice(F: PrimeLatticeFunction, sigma: float) -> TrigPolynomial:
    ks = F.ks.astype(float)
    coeffs = F.values * np.exp(ks * sigma * math.log(F.base))
    return TrigPolynomial(F.label, F.k_min, coeffs)


def trig_norm_sq(P: TrigPolynomial) -> float:
    """Haar-space squared norm, sum_j |c_j|^2."""
    return float(np.sum(np.abs(P.coeffs) ** 2))


def involution_transform_identity_check(F: PrimeLatticeFunction, sigma: float,
                                        n_theta: int = 257, seed: int = 0) -> float:
    """max over sampled theta of |M(conj F*)(sigma, theta) - conj M(F)(1 - sigma, theta)|."""
    from .testfn import lattice_conj_star

    theta = np.random.default_rng(seed).uniform(0.0, 2 * math.pi, n_theta)
    lhs = mellin_lattice(lattice_conj_star(F), sigma)(theta)
    rhs = np.conj(mellin_lattice(F, 1.0 - sigma)(theta))
    return float(np.max(np.abs(lhs - rhs), initial=0.0))


# ---------------------------------------------------------------------------
# continuous Mellin transform
# ---------------------------------------------------------------------------


def _breakpoints(f: TestFunction) -> np.ndarray:
    return log_breakpoints(f)


def _has_autocorrelation(f) -> bool:
    if isinstance(f, Autocorrelation):
        return True
    if isinstance(f, Star):
        return _has_autocorrelation(f.of)
    if isinstance(f, Combination):
        return any(_has_autocorrelation(g) for _, g in f.terms)
    return False


def _panel_rule(la, lb, panels, nodes, breaks):
    edges = np.union1d(np.linspace(la, lb, panels + 1), breaks[(breaks > la) & (breaks < lb)])
    x, w = np.polynomial.legendre.leggauss(nodes)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    u = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    wt = (half[:, None] * w[None, :]).ravel()
    return u, wt


def _quad_base(f: TestFunction, s: np.ndarray, cfg: QuadConfig) -> np.ndarray:
    la, lb = f.log_support
    breaks = _breakpoints(f)
    out = np.empty(s.shape, dtype=complex)
    order = np.argsort(np.abs(s.imag))
    block = 256
    for start in range(0, len(order), block):
        idx = order[start:start + block]
        ss = s[idx]
        tmax = float(np.abs(ss.imag).max())
        # start at one period of e^(i t u) per panel; the first refinement
        # reaches half a period
        panels = max(cfg.min_panels, int(math.ceil((lb - la) * tmax / (2 * math.pi))))
        prev = _apply_rule(f, ss, la, lb, panels, cfg, breaks)
        for _ in range(cfg.max_refine):
            panels *= 2
            cur, scale = _apply_rule(f, ss, la, lb, panels, cfg, breaks, with_scale=True)
            err = np.abs(cur - prev)
            if np.all(err <= cfg.rtol * np.maximum(np.abs(cur), scale) + 1e-300):
                break
            prev = cur
        else:
            bad = int(np.argmax(err))
            raise NumericError(f"Mellin quadrature did not converge at s={ss[bad]}",
                               estimates=(complex(prev[bad]), complex(cur[bad])))
        out[idx] = cur
    return out


def _apply_rule(f, ss, la, lb, panels, cfg, breaks, with_scale=False):
    u, w = _panel_rule(la, lb, panels, cfg.nodes, breaks)
    fu = f(np.exp(u)) * w
    res = np.empty(len(ss), dtype=complex)
    step = max(1, cfg.chunk // len(u))
    for i in range(0, len(ss), step):
        res[i:i + step] = np.exp(np.outer(ss[i:i + step], u)) @ fu
    if not with_scale:
        return res
    scale = np.exp(np.outer(ss.real, u)) @ np.abs(fu)
    return res, scale


def _indicator_mellin(f: Indicator, s: np.ndarray) -> np.ndarray:
    # (b^s - a^s)/s written as a^s expm1(s L)/s, L = log(b/a)
    L = math.log(f.b / f.a)
    small = np.abs(s) * L < 1e-8
    safe = np.where(small, 1.0, s)
    ratio = np.where(small, L * (1 + 0.5 * s * L), np.expm1(safe * L) / safe)
    return np.exp(s * math.log(f.a)) * ratio


def _mellin_vec(f: TestFunction, s: np.ndarray, cfg: QuadConfig) -> np.ndarray:
    if isinstance(f, Indicator):
        return _indicator_mellin(f, s)
    if isinstance(f, Autocorrelation):
        g = f.of
        m = _mellin_vec(g, s, cfg)
        if np.all(s.real == 0.5):
            # on the critical line 1 - conj(s) = s
            return m * np.conj(m)
        return m * np.conj(_mellin_vec(g, 1.0 - np.conj(s), cfg))
    if isinstance(f, Star) and _has_autocorrelation(f):
        return _mellin_vec(f.of, 1.0 - s, cfg)
    if isinstance(f, Combination) and _has_autocorrelation(f):
        out = np.zeros(s.shape, dtype=complex)
        for c, g in f.terms:
            out += c * _mellin_vec(g, s, cfg)
        return out
    return _quad_base(f, s, cfg)


def mellin_continuous(f: TestFunction, s: complex, quad: QuadConfig | None = None) -> complex:
    """M(f)(s) = int_0^inf f(x) x^s dx/x, computed as int f(e^u) e^(su) du."""
    cfg = quad or DEFAULT_QUAD
    return complex(_mellin_vec(f, np.array([complex(s)]), cfg)[0])


def mellin_many(f: TestFunction, s, quad: QuadConfig | None = None) -> np.ndarray:
    cfg = quad or DEFAULT_QUAD
    s = np.asarray(s, dtype=complex)
    return _mellin_vec(f, s.ravel(), cfg).reshape(s.shape)


def mellin_critical_line(f: TestFunction, t, quad: QuadConfig | None = None,
                         sigma: float = 0.5) -> np.ndarray:
    """M(f)(sigma + i t) for an array of t."""
    t = np.asarray(t, dtype=float)
    return mellin_many(f, sigma + 1j * t, quad)
