"""Symbols of the Weil multiplication operators on the product torus,
their quadratic forms against |F|^2, spectral-measure estimates and the
q -> 1 sweep.

Every symbol here is a sum of per-label functions with real, even Fourier
coefficients: s(theta) = c_0 + 2 sum_{k>=1} c_k cos(k theta).  Pairings use
the coefficients exactly; evaluation truncates at a degree K chosen so the
dropped tail is below a declared bound.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .bohr import RandomVariableSpec, TorusSeries
from .domain import Q_LABEL, TWO_PI, SpectralMeasureEstimate, TestFunction, TorusCharacter
from .errors import ContractError, DomainError, NumericError, UnsupportedModeError
from .mellin import TrigPolynomial, mellin_lattice
from .testfn import autocorrelate, lattice_autocorrelate, lattice_restrict
from .weil import _lattice_weil, weil_arch_integral, weil_finite

# ---------------------------------------------------------------------------
# symbols
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PlaceSymbol:
    label: object
    c0: float
    coeff_fn: Callable          # k >= 1 (int array) -> c_k
    K: int                      # evaluation truncation degree
    tail: float                 # bound on |dropped part| of the evaluation
    lo: float
    hi: float
    closed_form: Callable | None = None

    def coeffs(self, k) -> np.ndarray:
        k = np.abs(np.asarray(k))
        out = np.zeros(k.shape)
        nz = k != 0
        out[nz] = self.coeff_fn(k[nz])
        out[~nz] = self.c0
        return out

    def __call__(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        if self.closed_form is not None:
            return self.closed_form(theta)
        flat = theta.ravel()
        ks = np.arange(1, self.K + 1)
        ck = self.coeff_fn(ks)
        out = np.full(flat.shape, self.c0)
        step = max(1, 4_000_000 // max(self.K, 1))
        for i in range(0, len(flat), step):
            out[i:i + step] += 2.0 * np.cos(np.outer(flat[i:i + step], ks)) @ ck
        return out.reshape(theta.shape)

    def on_grid(self, n: int, offset: float = 0.0) -> np.ndarray:
        """Values at offset + 2 pi j / n, j = 0..n-1, by folding coefficients mod n."""
        if self.closed_form is not None:
            return self.closed_form(offset + TWO_PI * np.arange(n) / n)
        ks = np.arange(-self.K, self.K + 1)
        c = self.coeffs(ks) * np.exp(1j * ks * offset)
        folded = np.zeros(n, dtype=complex)
        np.add.at(folded, ks % n, c)
        return (np.fft.ifft(folded) * n).real

    def pair(self, P: TrigPolynomial) -> complex:
        """Haar integral of this symbol times P."""
        if len(P.coeffs) == 0:
            return 0j
        return complex(np.sum(self.coeffs(-P.degrees) * P.coeffs))


@dataclass(frozen=True, eq=False)
class Symbol:
    places: tuple
    constant: float = 0.0

    @property
    def labels(self) -> tuple:
        return tuple(s.label for s in self.places)

    @property
    def range(self) -> tuple[float, float]:
        return (self.constant + sum(s.lo for s in self.places),
                self.constant + sum(s.hi for s in self.places))

    @property
    def tail(self) -> float:
        return sum(s.tail for s in self.places)

    def place(self, label) -> PlaceSymbol:
        for s in self.places:
            if s.label == label:
                return s
        raise KeyError(label)

    def mean(self) -> float:
        return self.constant + sum(s.c0 for s in self.places)

    def __call__(self, chi):
        if isinstance(chi, TorusCharacter):
            return float(self.constant + sum(s(np.array(chi[s.label])) for s in self.places))
        out = self.constant
        for s in self.places:
            out = out + s(chi[s.label])
        return out

    def __add__(self, other: "Symbol") -> "Symbol":
        clash = set(self.labels) & set(other.labels)
        if clash:
            raise ContractError(f"symbols share labels {sorted(map(str, clash))}")
        return Symbol(self.places + other.places, self.constant + other.constant)


def _prime_closed(p):
    lp = math.log(p)
    r = p ** -0.5

    def s(theta):
        z = r * np.exp(1j * np.asarray(theta, dtype=float))
        return 2 * lp * np.real(z / (1 - z))
    return s


def symbol_prime(p: int, tail_tol: float = 1e-15) -> Symbol:
    """s_p(theta) = 2 log p Re(r e^(i theta) / (1 - r e^(i theta))), r = p^(-1/2)."""
    if p < 2:
        raise DomainError("p must be a prime")
    lp = math.log(p)
    r = p ** -0.5
    # 2 log p sum_{k>K} r^k <= tail_tol
    K = max(1, int(math.ceil(math.log(tail_tol * (1 - r) / (2 * lp)) / math.log(r))))
    tail = 2 * lp * r ** (K + 1) / (1 - r)
    sym = PlaceSymbol(int(p), 0.0, lambda k: lp * r ** k.astype(float), K, tail,
                      -2 * lp * r / (1 + r), 2 * lp * r / (1 - r), _prime_closed(p))
    return Symbol((sym,))


def _q_coeff(q):
    lq = math.log(1 / q)

    def c(k):
        k = k.astype(float)
        return lq * np.exp(0.5 * k * math.log(q)) / -np.expm1(2 * k * math.log(q))
    return c


def symbol_arch_q(q: float, K: int | None = None, include_log_pi: bool = True,
                  tail_tol: float = 1e-9, K_max: int = 5_000_000) -> Symbol:
    """H_q(theta) = log(1-q^2) + log(1/q) sum_{k != 0} e^(ik theta) q^(|k|/2)/(1-q^(2|k|)),
    plus log(pi) when ``include_log_pi``."""
    if not 0 < q < 1:
        raise DomainError("q must lie in (0, 1)")
    lq = math.log(1 / q)
    rq = math.sqrt(q)

    def tail_at(K):
        return 2 * lq * rq ** (K + 1) / ((1 - q ** (2 * (K + 1))) * (1 - rq))

    if K is None:
        K = int(math.ceil(2 * math.log(tail_tol * (1 - q * q) * (1 - rq) / (2 * lq)) /
                          math.log(q)))
        K = max(K, 1)
        while tail_at(K) > tail_tol:
            K = int(K * 1.1) + 1
        if K > K_max:
            raise NumericError(f"q-symbol needs K={K} > K_max={K_max}")
    tail = tail_at(K)
    coeff = _q_coeff(q)
    c0 = math.log(1 - q * q) + (math.log(math.pi) if include_log_pi else 0.0)
    ck = coeff(np.arange(1, K + 1))
    # all coefficients positive: the maximum is at theta = 0, the minimum at pi
    hi = c0 + 2 * math.fsum(ck) + tail
    signs = np.where(np.arange(1, K + 1) % 2 == 0, 1.0, -1.0)
    lo = c0 + 2 * math.fsum(signs * ck) - tail
    return Symbol((PlaceSymbol(Q_LABEL, c0, coeff, K, tail, lo, hi),))


def symbol_combined(primes, q: float, **kw) -> Symbol:
    out = symbol_arch_q(q, include_log_pi=True, **kw)
    for p in sorted(int(p) for p in primes):
        out = symbol_prime(p) + out
    return out


# ---------------------------------------------------------------------------
# quadratic forms
# ---------------------------------------------------------------------------


def _as_series(F) -> TorusSeries:
    if isinstance(F, TorusSeries):
        return F
    if isinstance(F, TrigPolynomial):
        return TorusSeries.from_trig(F)
    if isinstance(F, RandomVariableSpec):
        if F.series is None:
            raise UnsupportedModeError("quadratic_form needs exact coefficients; "
                                       "use bohr.haar_expectation with mc instead")
        return F.series
    raise ContractError(f"cannot pair a symbol with {type(F).__name__}")


def pair_symbol(S: Symbol, X) -> complex:
    """E[S * X] for X with exact Fourier data."""
    series = _as_series(X)
    total = S.constant * series.mean()
    for place in S.places:
        for c, factors in series.terms:
            P = factors.get(place.label)
            val = place.c0 if P is None else place.pair(P)
            rest = math.prod(Q.mean() for lab, Q in factors.items() if lab != place.label)
            total += c * val * rest
    return complex(total)


def quadratic_form(S: Symbol, F) -> float:
    """E[S |F|^2] by exact coefficient pairing."""
    series = _as_series(F)
    return float(pair_symbol(S, series * series.conj()).real)


# ---------------------------------------------------------------------------
# spectral measures
# ---------------------------------------------------------------------------


def _product_grid_values(S: Symbol, F: TorusSeries, labels, n, offsets):
    d = len(labels)
    theta = {lab: offsets[lab] + TWO_PI * np.arange(n) / n for lab in labels}
    # symbol: sum of 1-D grids broadcast over the product grid
    lam = np.full((n,) * d, S.constant)
    for place in S.places:
        i = labels.index(place.label)
        shape = [1] * d
        shape[i] = n
        lam = lam + place.on_grid(n, offsets[place.label]).reshape(shape)
    mesh = np.meshgrid(*[theta[lab] for lab in labels], indexing="ij")
    ang = {lab: m for lab, m in zip(labels, mesh)}
    w = np.abs(F(ang)) ** 2 * np.ones_like(lam)
    return lam.ravel(), w.ravel() / n ** d


def spectral_measure(S: Symbol, F, bins=64, n: int | None = None, replicas: int = 16,
                     seed: int = 0, max_points: int = 1 << 18) -> SpectralMeasureEstimate:
    """Pushforward of |F|^2 d(chi) under S on the bins, by rotated uniform grids.

    Each replica evaluates on the product of per-label n-point grids, each
    shifted by an independent uniform rotation; the estimates are averaged
    over replicas and their spread gives the standard errors.
    """
    series = _as_series(F)
    labels = list(S.labels) + [lab for lab in series.labels if lab not in S.labels]
    d = max(1, len(labels))
    if n is None:
        n = max(8, int(max_points ** (1.0 / d)))
    lo, hi = S.range
    edges = np.linspace(lo, hi, bins + 1) if np.isscalar(bins) else np.asarray(bins, float)
    if edges[0] > lo or edges[-1] < hi:
        raise ContractError(f"bins [{edges[0]}, {edges[-1]}] do not cover the symbol range "
                            f"[{lo}, {hi}]")
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), 7919])))
    hists, masses, moments = [], [], []
    for _ in range(replicas):
        offsets = {lab: rng.uniform(0, TWO_PI / n) for lab in labels}
        lam, w = _product_grid_values(S, series, labels, n, offsets)
        h, _ = np.histogram(np.clip(lam, edges[0], edges[-1]), bins=edges, weights=w)
        hists.append(h)
        masses.append(w.sum())
        moments.append(np.sum(lam * w))
    hists = np.array(hists)
    r = math.sqrt(replicas)
    return SpectralMeasureEstimate(
        edges=edges, weights=hists.mean(axis=0), total_mass=float(np.mean(masses)),
        first_moment=float(np.mean(moments)),
        mass_stderr=float(np.std(masses, ddof=1) / r) if replicas > 1 else math.inf,
        moment_stderr=float(np.std(moments, ddof=1) / r) if replicas > 1 else math.inf)


def spectral_csv(est: SpectralMeasureEstimate, header_lines=()) -> str:
    buf = io.StringIO()
    for line in header_lines:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["lambda_lo", "lambda_hi", "weight"])
    for a, b, x in zip(est.edges[:-1], est.edges[1:], est.weights):
        w.writerow([repr(float(a)), repr(float(b)), repr(float(x))])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# q -> 1 sweep
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SweepRow:
    q: float
    finite: float          # sum_p W_p of the per-prime lattice autocorrelations
    cov_q: float           # log(1/q) * Cov[M_q(H_q), H~_q]
    const_q: float         # log(1/q) * log((1-q^2) pi) * H_q(1)
    arch_q: float          # cov_q + const_q
    total: float
    reference: float
    gap: float


@dataclass(frozen=True)
class SweepTable:
    test_function: str
    primes: tuple
    arch_reference: float
    finite_continuous: float
    rows: list = field(default_factory=list)

    def gaps(self) -> list:
        return [r.gap for r in self.rows]


def q_sweep(g: TestFunction, primes=(), qs=(0.9, 0.99, 0.999)) -> SweepTable:
    """Per-place quadratic forms of M_{I,q}(g) against the combined symbol.

    The q-place form is multiplied by log(1/q), the lattice spacing in
    log x, so that it approximates W_inf(g * g#) rather than a multiple of
    it.  The reference is the lattice finite part plus the digamma-integral
    archimedean term of the continuous autocorrelation.
    """
    primes = tuple(sorted(int(p) for p in primes))
    finite = 0.0
    for p in primes:
        G = lattice_restrict(g, p)
        finite += quadratic_form(symbol_prime(p), mellin_lattice(G, 0.5))
    f = autocorrelate(g)
    if _is_zero(g):
        arch_ref, fin_cont = 0.0, 0.0
    else:
        arch_ref = weil_arch_integral(f).value
        fin_cont = float(np.real(weil_finite(f)[1]))
    reference = finite + arch_ref
    rows = []
    for q in qs:
        G = lattice_restrict(g, 1.0 / q)
        P = mellin_lattice(G, 0.5)
        lq = math.log(1 / q)
        sym = symbol_arch_q(q, include_log_pi=True)
        form = quadratic_form(sym, P) if not G.is_zero() else 0.0
        const = math.log((1 - q * q) * math.pi) * float(np.sum(np.abs(P.coeffs) ** 2))
        cov_q, const_q = lq * (form - const), lq * const
        total = finite + cov_q + const_q
        rows.append(SweepRow(q, finite, cov_q, const_q, cov_q + const_q, total, reference,
                             abs(total - reference)))
    return SweepTable(g.descriptor(), primes, arch_ref, fin_cont, rows)


def _is_zero(g: TestFunction) -> bool:
    la, lb = g.log_support
    x = np.exp(np.linspace(la, lb, 257))
    return not np.any(g(x))


def lattice_weil_form(g: TestFunction, p: int) -> float:
    """W_p of the lattice autocorrelation of g on p^Z."""
    return float(np.real(_lattice_weil(lattice_autocorrelate(lattice_restrict(g, p)))))
