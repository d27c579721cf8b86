"""Weil sums: local terms at the primes, the archimedean term (digamma
integral and two q-discretizations), report assembly, and the covariance
bound experiment at the q-place.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .arith import primes_upto
from .domain import PrimeLatticeFunction, TestFunction, WeilReport, ZeroTable
from .errors import ContractError, DomainError, NumericError
from .mellin import QuadConfig, mellin_critical_line
from .testfn import lattice_autocorrelate, lattice_restrict
from .zeta import digamma

LOG_PI = math.log(math.pi)


def _as_real(v):
    v = complex(v)
    return v.real if v.imag == 0 else v


# ---------------------------------------------------------------------------
# finite places
# ---------------------------------------------------------------------------


def _lattice_weil(F: PrimeLatticeFunction) -> complex:
    ks = F.ks
    mask = ks != 0
    w = np.minimum(np.exp(ks[mask] * math.log(F.base)), 1.0)
    return math.log(F.base) * complex(np.sum(F.values[mask] * w))


def weil_local(f, p: int, window: tuple[int, int] | None = None):
    """log p * sum_{k != 0} f(p^k) min(p^k, 1).

    ``f`` is a TestFunction or a PrimeLatticeFunction on base p.
    """
    if isinstance(f, PrimeLatticeFunction):
        if abs(f.base - p) > 1e-12 * p:
            raise ContractError(f"lattice function has base {f.base}, expected {p}")
        return _as_real(_lattice_weil(f))
    F = lattice_restrict(f, p, window)
    val = _lattice_weil(F)
    return val.real if f.is_real else val


def relevant_primes(f: TestFunction) -> np.ndarray:
    """Primes p having some p^k (k != 0) in supp f."""
    a, b = f.support
    bound = max(b, 1.0 / a)
    ps = primes_upto(int(math.floor(bound)))
    keep = []
    for p in ps:
        k_lo, k_hi = math.ceil(math.log(a) / math.log(p) - 1e-12), math.floor(
            math.log(b) / math.log(p) + 1e-12)
        if k_lo <= k_hi and (k_lo != 0 or k_hi != 0):
            keep.append(int(p))
    return np.array(keep, dtype=np.int64)


def weil_finite(f: TestFunction) -> tuple[dict, float]:
    """Per-prime map p -> W_p(f) and the total, summed in ascending p."""
    per = {int(p): weil_local(f, int(p)) for p in relevant_primes(f)}
    vals = list(per.values())
    if all(isinstance(v, float) for v in vals):
        total = math.fsum(vals)
    else:
        total = _as_real(sum(complex(v) for v in vals))
    return per, total


# ---------------------------------------------------------------------------
# archimedean place: digamma integral
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ArchIntegral:
    value: float
    t_max: float
    tail_estimate: float
    warning: bool


def _gl_segment(lo, hi, width, nodes=16):
    n = max(1, int(math.ceil((hi - lo) / width)))
    edges = np.linspace(lo, hi, n + 1)
    x, w = np.polynomial.legendre.leggauss(nodes)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    return ((mid[:, None] + half[:, None] * x).ravel(),
            (half[:, None] * w).ravel())


def weil_arch_integral(f: TestFunction, t_max: float | None = None,
                       quad: QuadConfig | None = None, tol: float = 1e-10,
                       t_cap: float = 25600.0) -> ArchIntegral:
    """log(pi) f(1) - (1/2pi) int Re digamma(1/4 + it/2) M(f)(1/2 + it) dt.

    The t-range is grown by doubling from t = 25 until the last segment
    contributes less than ``tol`` (or up to ``t_max`` when given).  The
    contribution of the last segment is reported as the tail estimate.
    """
    la, lb = f.log_support
    # the integrand oscillates in t with frequencies up to max |log x|
    width = min(8.0, math.pi / max(abs(la), abs(lb), 1e-3))
    cap = t_max if t_max is not None else t_cap
    lo, hi = 0.0, min(25.0, cap)
    integral = 0.0 + 0j
    last = math.inf
    while True:
        # digamma(1/4 + it/2) has poles at distance 1/2 from t = 0: panels
        # there must stay short
        t, w = _gl_segment(lo, hi, min(width, max(0.5, 0.25 * lo)))
        m_pos = mellin_critical_line(f, t, quad)
        psi = digamma(0.25 + 0.5j * t).real
        if f.is_real:
            seg = 2.0 * np.sum(w * psi * m_pos.real)
        else:
            m_neg = mellin_critical_line(f, -t, quad)
            seg = np.sum(w * psi * (m_pos + m_neg))
        integral += seg
        last = abs(seg)
        if hi >= cap or (t_max is None and last <= tol):
            break
        lo, hi = hi, min(2.0 * hi, cap)
    value = LOG_PI * complex(f.evaluate(1.0)) - integral / (2.0 * math.pi)
    return ArchIntegral(_as_real(value) if not f.is_real else value.real, hi, last, last > tol)


# ---------------------------------------------------------------------------
# q-digamma and the q-discretizations of the archimedean place
# ---------------------------------------------------------------------------


def q_digamma_tail(s, q: float, K: int) -> float:
    """Bound on the omitted terms n >= K of the q-digamma series."""
    x = K + complex(s).real
    qx = q ** x
    return abs(math.log(q)) * qx / ((1 - q) * (1 - qx))


def q_digamma(s, q: float, K: int | None = None, tol: float = 1e-14,
              K_max: int = 50_000_000) -> complex:
    """-log(1-q) + log(q) sum_{n>=0} q^(n+s)/(1-q^(n+s)).

    With K omitted the truncation is chosen so the tail bound is below
    ``tol``; a given K whose tail bound exceeds ``tol`` raises NumericError.
    """
    if not 0 < q < 1:
        raise DomainError("q must lie in (0, 1)")
    s = complex(s)
    if not s.real > 0:
        raise DomainError("q_digamma needs Re s > 0")
    lq = math.log(q)
    if K is None:
        # q^(K+Re s) (1 + small) / (1-q) * |log q| <= tol
        need = math.log(tol * (1 - q) / (2 * abs(lq))) / lq - s.real
        K = max(1, int(math.ceil(need)))
        if K > K_max:
            raise NumericError(f"q_digamma needs K={K} > K_max={K_max}")
    tail = q_digamma_tail(s, q, K)
    if tail > tol:
        raise NumericError(f"q_digamma tail bound {tail:.3g} above tolerance at K={K}")
    total = 0j
    step = 1 << 20
    for start in range(0, K, step):
        n = np.arange(start, min(K, start + step), dtype=float)
        z = np.exp((n + s) * lq)
        total += np.sum(z / (1 - z))
    return -math.log(1 - q) + lq * total


ARCH_VARIANTS = ("fourier-pairing", "paper-eq")


def q_weights(n: np.ndarray, q: float, variant: str) -> np.ndarray:
    """Weights of f(q^n), n != 0, in the q-discretized archimedean sum (before the log(1/q) factor)."""
    n = np.asarray(n)
    a = np.abs(n).astype(float)
    denom = -np.expm1(2 * a * math.log(q))  # 1 - q^(2|n|)
    if variant == "fourier-pairing":
        num = np.where(n > 0, q ** a, 1.0)
    elif variant == "paper-eq":
        num = np.minimum(q ** (-2.0 * n), 1.0)
    else:
        raise ContractError(f"unknown variant {variant!r}")
    return num / denom


def _q_lattice_sum(values: np.ndarray, n: np.ndarray, q: float, variant: str) -> complex:
    # values[i] = f(q^n[i])
    const = math.log((1 - q * q) * math.pi)
    at1 = values[n == 0].sum() if np.any(n == 0) else 0.0
    mask = n != 0
    s = np.sum(values[mask] * q_weights(n[mask], q, variant))
    return complex(const * at1 + math.log(1 / q) * s)


@dataclass(frozen=True)
class ArchQ:
    value: float
    q: float
    K: int
    variant: str
    tail: float = 0.0


def weil_arch_q(f, q: float, variant: str = "fourier-pairing", K: int | None = None,
                tol: float = 1e-12) -> ArchQ:
    """q-discretized archimedean term on the lattice q^Z.

    ``f`` is a TestFunction (restricted to q^Z) or a PrimeLatticeFunction of
    base 1/q.  K limits the sum to |n| <= K; when that drops lattice points
    carrying more than ``tol`` of weighted mass a NumericError is raised.
    """
    if not 0 < q < 1:
        raise DomainError("q must lie in (0, 1)")
    if variant not in ARCH_VARIANTS:
        raise ContractError(f"unknown variant {variant!r}")
    F = f if isinstance(f, PrimeLatticeFunction) else lattice_restrict(f, 1.0 / q)
    n = -F.ks
    vals = np.asarray(F.values)
    tail = 0.0
    if K is not None:
        drop = np.abs(n) > K
        if np.any(drop):
            tail = math.log(1 / q) * float(np.sum(np.abs(vals[drop]) *
                                                  q_weights(n[drop], q, variant)))
            if tail > tol:
                raise NumericError(f"truncation K={K} drops weighted mass {tail:.3g}")
            n, vals = n[~drop], vals[~drop]
    K_used = int(np.abs(n).max(initial=0)) if K is None else int(K)
    return ArchQ(_as_real(_q_lattice_sum(vals, n, q, variant)), q, K_used, variant, tail)


# ---------------------------------------------------------------------------
# totals
# ---------------------------------------------------------------------------


def weil_total(f: TestFunction, arch_method: str = "direct-integral", q: float | None = None,
               K: int | None = None, zeros: ZeroTable | None = None,
               config: dict | None = None, quad: QuadConfig | None = None) -> WeilReport:
    per, w_fin = weil_finite(f)
    if arch_method == "direct-integral":
        res = weil_arch_integral(f, quad=quad)
        if res.warning:
            warnings.warn(f"archimedean integral not settled at t={res.t_max:g}: last segment "
                          f"contributed {res.tail_estimate:.3g}", RuntimeWarning, stacklevel=2)
        arch = res.value
        q_used, K_used = None, None
    elif arch_method in ("q-fourier", "q-paper"):
        if q is None:
            raise ContractError("q-discretized archimedean term needs q")
        variant = "fourier-pairing" if arch_method == "q-fourier" else "paper-eq"
        res = weil_arch_q(f, q, variant, K)
        arch, q_used, K_used = res.value, q, res.K
    else:
        raise ContractError(f"unknown archimedean method {arch_method!r}")
    w_fin, arch = float(np.real(w_fin)), float(np.real(arch))
    return WeilReport(
        test_function=f.descriptor(), primes=per, w_fin=w_fin, arch_method=arch_method,
        arch_value=arch, total=w_fin + arch, arch_q=q_used, arch_K=K_used,
        zeros_provenance=None if zeros is None else zeros.provenance,
        zeros_count=None if zeros is None else len(zeros), config=config or {})


# ---------------------------------------------------------------------------
# covariance bound at the q-place
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RHBound:
    q: float
    primes: tuple
    left: float
    right: float
    norm_sq: float
    per_place: dict = field(default_factory=dict)

    @property
    def satisfied(self) -> bool:
        return self.left <= self.right


def rh_bound_experiment(g: TestFunction, q: float, primes=()) -> RHBound:
    """Both sides of Cov[M_{I,q}(g * g#), W_{I,q} 1] <= ||g||^2 log((1-q)^-1 / 2pi).

    The covariance is the sum of the per-place covariances of the lattice
    autocorrelations: W_p(H_p) at each prime and, at the q-place, the
    Fourier pairing of H_q against H~_q minus its constant contribution.
    """
    if not 0 < q < 1:
        raise DomainError("q must lie in (0, 1)")
    per = {}
    for p in sorted(int(p) for p in primes):
        per[p] = float(np.real(_lattice_weil(lattice_autocorrelate(lattice_restrict(g, p)))))
    G = lattice_restrict(g, 1.0 / q)
    H = lattice_autocorrelate(G)
    full = weil_arch_q(H, q, "fourier-pairing").value
    cov_q = float(np.real(full - H[0] * math.log((1 - q * q) * math.pi)))
    per["q"] = cov_q
    norm_sq = float(np.sum(np.abs(G.values) ** 2))
    left = math.fsum(per.values())
    right = norm_sq * math.log(1.0 / ((1 - q) * 2 * math.pi))
    return RHBound(q, tuple(sorted(int(p) for p in primes)), left, right, norm_sq, per)
