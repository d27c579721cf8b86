"""Haar integration on finite product tori.

Every random variable used here depends on finitely many rationally
independent frequencies, one angle per prime plus one for the q-place, so
the Haar measure of the Bohr space pushes forward to the uniform measure on
a finite product torus.  Integrals are computed there, either exactly from
Fourier coefficients, on uniform angle grids, or by Monte Carlo.
"""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

from .arith import primes_upto, smallest_prime_factor
from .domain import Q_LABEL, TWO_PI, PrimeLatticeFunction, TorusCharacter
from .errors import ContractError, DomainError, UnsupportedModeError
from .mellin import TrigPolynomial, mellin_lattice
from .zeta import zeta_eval

# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------


def _label_code(label) -> int:
    if label == Q_LABEL:
        return 0
    if isinstance(label, (int, np.integer)) and label > 0:
        return int(label)
    raise ContractError(f"unsupported torus label {label!r}")


def _stream(seed: int, label) -> np.random.Generator:
    # counter-based generator keyed by (seed, label): streams of different
    # labels never interact, so adding a label leaves the others unchanged
    ss = np.random.SeedSequence([int(seed), _label_code(label)])
    return np.random.Generator(np.random.Philox(ss))


def sample_angles(labels, seed: int, n: int, start: int = 0) -> dict:
    """Draws start .. start+n-1 of every label's uniform angle stream."""
    labels = list(labels)
    if len(set(labels)) != len(labels):
        raise ContractError("labels must be distinct")
    out = {}
    for lab in labels:
        u = _stream(seed, lab).random(start + n)[start:]
        th = TWO_PI * u
        out[lab] = np.where(th >= TWO_PI, 0.0, th)
    return out


def sample_character(labels, seed: int, index: int = 0) -> TorusCharacter:
    ang = sample_angles(labels, seed, 1, start=index)
    return TorusCharacter({lab: float(a[0]) for lab, a in ang.items()})


def sample_characters(labels, seed: int, n: int) -> dict:
    return sample_angles(labels, seed, n)


# ---------------------------------------------------------------------------
# random variables with exact Fourier data
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TorusSeries:
    """sum_i c_i prod_label P_{i,label}(theta_label), each P a TrigPolynomial."""

    terms: tuple = ()

    @classmethod
    def constant(cls, value) -> "TorusSeries":
        return cls(((complex(value), {}),))

    @classmethod
    def from_trig(cls, P: TrigPolynomial) -> "TorusSeries":
        return cls(((1.0 + 0j, {P.label: P}),))

    @property
    def labels(self) -> tuple:
        seen = []
        for _, factors in self.terms:
            for lab in factors:
                if lab not in seen:
                    seen.append(lab)
        return tuple(seen)

    def __add__(self, other):
        if not isinstance(other, TorusSeries):
            other = TorusSeries.constant(other)
        return TorusSeries(self.terms + other.terms)

    __radd__ = __add__

    def __sub__(self, other):
        if not isinstance(other, TorusSeries):
            other = TorusSeries.constant(other)
        return self + other * -1.0

    def __mul__(self, other):
        if not isinstance(other, TorusSeries):
            return TorusSeries(tuple((c * other, f) for c, f in self.terms))
        terms = []
        for c1, f1 in self.terms:
            for c2, f2 in other.terms:
                f = dict(f1)
                for lab, P in f2.items():
                    f[lab] = f[lab] * P if lab in f else P
                terms.append((c1 * c2, f))
        return TorusSeries(tuple(terms))

    __rmul__ = __mul__

    def conj(self) -> "TorusSeries":
        return TorusSeries(tuple((np.conj(c), {lab: P.conj() for lab, P in f.items()})
                                 for c, f in self.terms))

    def mean(self) -> complex:
        return complex(sum(c * math.prod(P.mean() for P in f.values()) for c, f in self.terms))

    def max_degree(self, label) -> int:
        return max((f[label].max_degree for _, f in self.terms if label in f), default=0)

    def __call__(self, angles: Mapping) -> np.ndarray:
        out = 0j
        for c, f in self.terms:
            term = c
            for lab, P in f.items():
                term = term * P(angles[lab])
            out = out + term
        return out


@dataclass(frozen=True, eq=False)
class RandomVariableSpec:
    """A function on the product torus over ``labels``.

    ``evaluator`` maps a dict label -> angle array to values of the same
    shape.  ``series`` is the optional exact Fourier representation.
    """

    labels: tuple
    evaluator: Callable
    series: TorusSeries | None = None

    def __post_init__(self):
        labels = tuple(self.labels)
        if len(set(labels)) != len(labels):
            raise ContractError("labels must be distinct")
        object.__setattr__(self, "labels", labels)

    @classmethod
    def from_series(cls, series: TorusSeries, labels=None) -> "RandomVariableSpec":
        labs = tuple(labels) if labels is not None else series.labels
        return cls(labs, series, series)

    @classmethod
    def from_trig(cls, P: TrigPolynomial) -> "RandomVariableSpec":
        return cls.from_series(TorusSeries.from_trig(P))

    @classmethod
    def constant(cls, value=1.0) -> "RandomVariableSpec":
        return cls.from_series(TorusSeries.constant(value), labels=())

    def __call__(self, chi) -> np.ndarray:
        if isinstance(chi, TorusCharacter):
            return complex(np.asarray(self.evaluator({lab: np.array(chi[lab]) for lab in
                                                      self.labels})))
        return np.asarray(self.evaluator(chi))

    def _binary(self, other, op):
        labels = self.labels + tuple(lab for lab in other.labels if lab not in self.labels)
        series = None
        if self.series is not None and other.series is not None:
            series = op(self.series, other.series)
        return RandomVariableSpec(labels, lambda a: op(self.evaluator(a), other.evaluator(a)),
                                  series)

    def __add__(self, other):
        return self._binary(other, lambda x, y: x + y)

    def __mul__(self, other):
        if not isinstance(other, RandomVariableSpec):
            s = None if self.series is None else self.series * other
            return RandomVariableSpec(self.labels, lambda a: self.evaluator(a) * other, s)
        return self._binary(other, lambda x, y: x * y)

    def conj(self):
        s = None if self.series is None else self.series.conj()
        return RandomVariableSpec(self.labels, lambda a: np.conj(self.evaluator(a)), s)


def mellin_variable(F: PrimeLatticeFunction, sigma: float) -> RandomVariableSpec:
    """The lattice Mellin transform of F at sigma, as a random variable."""
    return RandomVariableSpec.from_trig(mellin_lattice(F, sigma))


def von_mangoldt_lattice(p: int, K: int, part: str = "lambda") -> PrimeLatticeFunction:
    """Truncation at |k| <= K of the two halves of the von Mangoldt lattice function.

    ``lambda``: log p at p^-k, k >= 1.  ``lambda_star``: p^-k log p at p^k.
    """
    lp = math.log(p)
    k = np.arange(1, K + 1)
    if part == "lambda":
        return PrimeLatticeFunction(p, -K, np.full(K, lp), p)
    if part == "lambda_star":
        return PrimeLatticeFunction(p, 1, lp * np.exp(-k * lp), p)
    raise ContractError(f"unknown part {part!r}")


# ---------------------------------------------------------------------------
# expectations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Estimate:
    value: complex
    stderr: float
    method: str


def _grid_mean(fn, labels, n, chunk=1 << 20):
    d = len(labels)
    if d == 0:
        return complex(np.asarray(fn({})).mean())
    theta = TWO_PI * np.arange(n) / n
    total = n ** d
    acc = 0j
    step = max(1, min(total, chunk))
    for start in range(0, total, step):
        idx = np.arange(start, min(total, start + step))
        ang = {}
        for i, lab in enumerate(labels):
            ang[lab] = theta[(idx // n ** (d - 1 - i)) % n]
        acc += np.sum(fn(ang))
    return acc / total


def _mc_values(fn, labels, N, seed):
    ang = sample_angles(labels, seed, N)
    vals = np.asarray(fn(ang))
    return np.broadcast_to(vals, (N,)) if vals.ndim == 0 else vals


def _complex_stderr(vals: np.ndarray) -> float:
    n = len(vals)
    if n < 2:
        return math.inf
    return float(math.sqrt((np.var(vals.real, ddof=1) + np.var(vals.imag, ddof=1)) / n))


def haar_expectation(X: RandomVariableSpec, method: str = "exact", n: int = 64,
                     N: int = 100_000, seed: int = 0) -> Estimate:
    """E[X] under the product Haar measure.

    ``exact`` reads the constant coefficient of the series; ``quadrature``
    averages over an n-point uniform grid per label (exact for degrees < n);
    ``mc`` averages N sampled characters and reports the standard error.
    """
    if method == "exact":
        if X.series is None:
            raise UnsupportedModeError("exact expectation needs Fourier coefficients")
        return Estimate(X.series.mean(), 0.0, method)
    if method == "quadrature":
        return Estimate(_grid_mean(X.evaluator, X.labels, n), 0.0, method)
    if method == "mc":
        vals = _mc_values(X.evaluator, X.labels, N, seed)
        return Estimate(complex(vals.mean()), _complex_stderr(vals), method)
    raise UnsupportedModeError(f"unknown method {method!r}")


def covariance(X: RandomVariableSpec, Y: RandomVariableSpec, method: str = "exact",
               n: int = 64, N: int = 100_000, seed: int = 0) -> Estimate:
    """E[X conj(Y)] - E[X] conj(E[Y])."""
    if method == "exact":
        if X.series is None or Y.series is None:
            raise UnsupportedModeError("exact covariance needs Fourier coefficients")
        val = (X.series * Y.series.conj()).mean() - X.series.mean() * np.conj(Y.series.mean())
        return Estimate(complex(val), 0.0, method)
    labels = X.labels + tuple(lab for lab in Y.labels if lab not in X.labels)
    if method == "quadrature":
        exy = _grid_mean(lambda a: X.evaluator(a) * np.conj(Y.evaluator(a)), labels, n)
        ex = _grid_mean(X.evaluator, labels, n)
        ey = _grid_mean(Y.evaluator, labels, n)
        return Estimate(complex(exy - ex * np.conj(ey)), 0.0, method)
    if method == "mc":
        ang = sample_angles(labels, seed, N)
        x = np.broadcast_to(np.asarray(X.evaluator(ang)), (N,))
        y = np.broadcast_to(np.asarray(Y.evaluator(ang)), (N,))
        prod = (x - x.mean()) * np.conj(y - y.mean())
        val = prod.sum() / (N - 1)
        return Estimate(complex(val), _complex_stderr(prod), method)
    raise UnsupportedModeError(f"unknown method {method!r}")


# ---------------------------------------------------------------------------
# random Euler products
# ---------------------------------------------------------------------------


def _angles_of(chi, labels):
    if isinstance(chi, TorusCharacter):
        return {lab: np.array(chi[lab]) for lab in labels}
    return {lab: np.asarray(chi[lab]) for lab in labels}


def random_euler_product(sigma: float, chi, P: int, mode: str = "product",
                         N: int | None = None):
    """zeta(sigma, chi) by the Euler product over p <= P or the Dirichlet series to N.

    ``chi`` is a TorusCharacter (scalar result) or a mapping prime -> angle
    array (vectorized over characters).
    """
    if not sigma > 0.5:
        raise DomainError("random Euler products are only exposed for sigma > 1/2")
    scalar = isinstance(chi, TorusCharacter)
    if mode == "product":
        ps = [int(p) for p in primes_upto(P)]
        missing = [p for p in ps if p not in (chi.angles if scalar else chi)]
        if missing:
            raise ContractError(f"character lacks angles for primes {missing[:5]}...")
        ang = _angles_of(chi, ps)
        log_sum = 0j
        for p in ps:
            log_sum = log_sum - np.log1p(-np.exp(1j * ang[p] - sigma * math.log(p)))
        out = np.exp(log_sum)
    elif mode == "series":
        if N is None:
            raise ContractError("series mode needs N")
        ps = [int(p) for p in primes_upto(N)]
        missing = [p for p in ps if p not in (chi.angles if scalar else chi)]
        if missing:
            raise ContractError(f"character lacks angles for primes {missing[:5]}...")
        ang = _angles_of(chi, ps)
        spf = smallest_prime_factor(max(N, 2))
        shape = np.shape(ang[ps[0]]) if ps else ()
        phase = [np.zeros(shape)] * (N + 1)
        for k in range(2, N + 1):
            p = int(spf[k])
            phase[k] = phase[k // p] + ang[p]
        out = 0j
        for k in range(1, N + 1):
            out = out + np.exp(1j * phase[k] - sigma * math.log(k))
    else:
        raise UnsupportedModeError(f"unknown mode {mode!r}")
    return complex(out) if scalar else np.asarray(out)


def time_average(f: Callable, T: float, step: float = 0.01) -> complex:
    """Trapezoid estimate of (1/2T) int_{-T}^{T} f(x) dx with spacing <= step."""
    if not T > 0:
        raise DomainError("T must be positive")
    n = int(math.ceil(2 * T / step))
    x = np.linspace(-T, T, n + 1)
    y = np.asarray(f(x), dtype=complex) * np.ones_like(x)
    integral = (2 * T / n) * (y.sum() - 0.5 * (y[0] + y[-1]))
    return complex(integral / (2 * T))


# ---------------------------------------------------------------------------
# variance of von Mangoldt tails
# ---------------------------------------------------------------------------


def lambda_tail_variance(P: int, sigma: float, P_max: int) -> float:
    """sum_{P < p <= P_max} (log p)^2 p^-2sigma / (1 - p^-2sigma), the variance
    of the tail of sum_p M_p(Lambda)(sigma, .)."""
    ps = primes_upto(P_max)
    ps = ps[ps > P].astype(float)
    w = ps ** (-2 * sigma)
    return float(np.sum(np.log(ps) ** 2 * w / (1 - w)))


def lambda_tail_sample(P: int, sigma: float, P_max: int, N: int, seed: int = 0) -> Estimate:
    """Empirical variance of sum_{P < p <= P_max} M_p(Lambda)(sigma, theta_p)."""
    ps = [int(p) for p in primes_upto(P_max) if p > P]
    ang = sample_angles(ps, seed, N)
    acc = np.zeros(N, dtype=complex)
    for p in ps:
        w = np.exp(-sigma * math.log(p) - 1j * ang[p])
        acc += math.log(p) * w / (1 - w)
    dev = np.abs(acc - acc.mean()) ** 2
    return Estimate(float(dev.sum() / (N - 1)), float(dev.std(ddof=1) / math.sqrt(N)), "mc")


# ---------------------------------------------------------------------------
# Bohr-Jessen comparison
# ---------------------------------------------------------------------------


def energy_distance(A: np.ndarray, B: np.ndarray, chunk: int = 2048, threads: int = 1) -> float:
    """2 E|X-Y| - E|X-X'| - E|Y-Y'| for planar clouds given as complex arrays.

    V-statistics throughout, so the distance of a cloud to itself is 0.
    Chunks may run on a thread pool; partial sums are merged in chunk order.
    """
    A = np.asarray(A, dtype=complex).ravel()
    B = np.asarray(B, dtype=complex).ravel()

    def mean_abs(X, Y):
        def part(i):
            return float(np.abs(X[i:i + chunk, None] - Y[None, :]).sum())
        starts = range(0, len(X), chunk)
        if threads > 1:
            with ThreadPoolExecutor(threads) as pool:
                parts = list(pool.map(part, starts))
        else:
            parts = [part(i) for i in starts]
        return math.fsum(parts) / (len(X) * len(Y))

    if A.shape == B.shape and np.array_equal(A, B):
        return 0.0
    return max(0.0, 2 * mean_abs(A, B) - mean_abs(A, A) - mean_abs(B, B))


@dataclass(frozen=True)
class BohrJessenReport:
    sigma: float
    P: int
    N: int
    T: float
    distance: float
    threshold: float
    character_cloud: np.ndarray
    time_cloud: np.ndarray

    @property
    def passed(self) -> bool:
        return self.distance <= self.threshold


def character_cloud(sigma: float, P: int, N: int, seed: int = 0) -> np.ndarray:
    ps = [int(p) for p in primes_upto(P)]
    return random_euler_product(sigma, sample_angles(ps, seed, N), P)


def time_cloud(sigma: float, T: float, M: int) -> np.ndarray:
    """zeta(sigma + i t_j) at the midpoints t_j of M equal cells of [0, T]."""
    t = (np.arange(M) + 0.5) * (T / M)
    return zeta_eval(sigma + 1j * t)


def bohr_jessen_compare(sigma: float = 0.8, P: int = 997, N: int = 20_000, T: float = 5000.0,
                        M: int | None = None, seed: int = 0,
                        threshold: float = 0.05, threads: int = 1) -> BohrJessenReport:
    if not 0.5 < sigma < 1:
        raise DomainError("sigma must lie in (1/2, 1)")
    A = character_cloud(sigma, P, N, seed)
    B = time_cloud(sigma, T, M or N)
    return BohrJessenReport(sigma, P, N, T, energy_distance(A, B, threads=threads), threshold, A, B)


def cloud_csv(cloud: np.ndarray, header_lines=()) -> str:
    buf = io.StringIO()
    for line in header_lines:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["re", "im"])
    for z in np.asarray(cloud):
        w.writerow([repr(float(z.real)), repr(float(z.imag))])
    return buf.getvalue()


def histogram_csv(cloud: np.ndarray, bins: int, extent, header_lines=()) -> str:
    (x0, x1), (y0, y1) = extent
    counts, xe, ye = np.histogram2d(np.real(cloud), np.imag(cloud), bins=bins,
                                    range=[[x0, x1], [y0, y1]])
    xc, yc = 0.5 * (xe[1:] + xe[:-1]), 0.5 * (ye[1:] + ye[:-1])
    buf = io.StringIO()
    for line in header_lines:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["bin_x", "bin_y", "count"])
    for i in range(bins):
        for j in range(bins):
            w.writerow([repr(float(xc[i])), repr(float(yc[j])), int(counts[i, j])])
    return buf.getvalue()


def common_extent(*clouds, clip: float = 0.005):
    allz = np.concatenate([np.asarray(c).ravel() for c in clouds])
    xs = np.quantile(allz.real, [clip, 1 - clip])
    ys = np.quantile(allz.imag, [clip, 1 - clip])
    return (float(xs[0]), float(xs[1])), (float(ys[0]), float(ys[1]))
