"""Core data types: test functions, lattice functions, characters, zero tables
and the Weil report record with its JSON wire format.

Test functions are immutable and vectorized: calling one on an array of
positive reals returns an array of the same shape.  Compactly supported kinds
return exactly 0 outside their support.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import ClassVar, Mapping

import numpy as np

from .errors import ContractError, DomainError, NumericError, ReportParseError

TWO_PI = 2.0 * math.pi

#: label of the distinguished q-place on the product torus
Q_LABEL = "q"


def _positive(x):
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0)):
        raise DomainError("test functions are defined on (0, inf) only")
    return x


# ---------------------------------------------------------------------------
# test functions
# ---------------------------------------------------------------------------


class TestFunction:
    """Base class of the test-function kinds.

    Subclasses implement ``_eval`` on a float array of positive reals and
    expose ``support`` as a closed interval ``(a, b)`` with ``0 < a < b``.
    For rapid-decay kinds ``support`` is an effective support and
    ``truncation_error`` bounds the mass left outside it.
    """

    __test__ = False  # keep pytest from collecting this class
    kind: ClassVar[str] = ""
    compact: ClassVar[bool] = True
    truncation_error: float = 0.0

    @property
    def support(self) -> tuple[float, float]:
        raise NotImplementedError

    @property
    def is_real(self) -> bool:
        return True

    @property
    def log_support(self) -> tuple[float, float]:
        a, b = self.support
        return math.log(a), math.log(b)

    def __call__(self, x):
        x = _positive(x)
        out = self._eval(x)
        if self.is_real:
            return np.real(out).astype(float)
        return np.asarray(out, dtype=complex)

    def evaluate(self, x: float) -> complex:
        """Value at a single point ``x > 0``."""
        if not x > 0:
            raise DomainError(f"x must be positive, got {x!r}")
        v = self(np.array([float(x)]))[0]
        return complex(v) if not self.is_real else float(v)

    def _eval(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def descriptor(self) -> str:
        raise NotImplementedError

    def __str__(self):
        return self.descriptor()


@dataclass(frozen=True, eq=False)
class LogBump(TestFunction):
    """exp(-1/(1-u^2)) with u = log(x/center)/half_width, zero for |u| >= 1."""

    center: float = 1.0
    half_width: float = 0.5
    kind: ClassVar[str] = "logbump"

    def __post_init__(self):
        if not (self.center > 0 and self.half_width > 0):
            raise ContractError("log-bump needs center > 0 and half_width > 0")

    @property
    def support(self):
        e = math.exp(self.half_width)
        return self.center / e, self.center * e

    def _eval(self, x):
        u = (np.log(x) - math.log(self.center)) / self.half_width
        out = np.zeros_like(u)
        inside = np.abs(u) < 1.0
        ui = u[inside]
        out[inside] = np.exp(-1.0 / (1.0 - ui * ui))
        return out

    def descriptor(self):
        return f"logbump:c={self.center!r},h={self.half_width!r}"


@dataclass(frozen=True, eq=False)
class LogGaussian(TestFunction):
    """exp(-(log(x/center)/width)^2); effective support |log(x/center)| <= radius*width."""

    center: float = 1.0
    width: float = 1.0
    radius: float = 6.0
    kind: ClassVar[str] = "loggauss"
    compact: ClassVar[bool] = False

    def __post_init__(self):
        if not (self.center > 0 and self.width > 0 and self.radius > 0):
            raise ContractError("log-gaussian needs positive center, width, radius")

    @property
    def truncation_error(self):
        # mass of exp(-v^2) beyond |v| = radius, relative to sqrt(pi)
        return math.erfc(self.radius)

    @property
    def support(self):
        r = math.exp(self.radius * self.width)
        return self.center / r, self.center * r

    def _eval(self, x):
        v = (np.log(x) - math.log(self.center)) / self.width
        return np.exp(-v * v)

    def descriptor(self):
        return f"loggauss:c={self.center!r},w={self.width!r},r={self.radius!r}"


@dataclass(frozen=True, eq=False)
class Indicator(TestFunction):
    """1 on (a, b), 1/2 at both endpoints, 0 elsewhere."""

    a: float = 1.0
    b: float = 2.0
    kind: ClassVar[str] = "indicator"

    def __post_init__(self):
        if not (0 < self.a < self.b < math.inf):
            raise ContractError("indicator needs 0 < a < b < inf")

    @property
    def support(self):
        return self.a, self.b

    def _eval(self, x):
        out = np.where((x > self.a) & (x < self.b), 1.0, 0.0)
        out[(x == self.a) | (x == self.b)] = 0.5
        return out

    def descriptor(self):
        return f"indicator:a={self.a!r},b={self.b!r}"


@dataclass(frozen=True, eq=False)
class GridSampled(TestFunction):
    """Piecewise-linear interpolation in log x through (x_i, y_i); zero outside."""

    xs: tuple = ()
    ys: tuple = ()
    kind: ClassVar[str] = "grid"

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        if xs.ndim != 1 or len(xs) < 2 or len(self.ys) != len(xs):
            raise ContractError("grid needs at least two (x, y) pairs")
        if np.any(xs <= 0) or np.any(np.diff(xs) <= 0):
            raise ContractError("grid abscissae must be positive and strictly increasing")
        object.__setattr__(self, "xs", tuple(float(v) for v in xs))
        object.__setattr__(self, "ys", tuple(complex(v) if np.iscomplexobj(v) else float(v)
                                             for v in self.ys))

    @property
    def is_real(self):
        return all(isinstance(v, float) for v in self.ys)

    @property
    def support(self):
        return self.xs[0], self.xs[-1]

    def _eval(self, x):
        lx = np.log(x)
        knots = np.log(np.asarray(self.xs))
        ys = np.asarray(self.ys)
        inside = (lx >= knots[0]) & (lx <= knots[-1])
        if np.iscomplexobj(ys):
            vals = np.interp(lx, knots, ys.real) + 1j * np.interp(lx, knots, ys.imag)
        else:
            vals = np.interp(lx, knots, ys)
        return np.where(inside, vals, 0.0)

    def descriptor(self):
        def fmt(v):
            return repr(v) if isinstance(v, float) else repr(complex(v)).strip("()")
        xs = "|".join(repr(v) for v in self.xs)
        ys = "|".join(fmt(v) for v in self.ys)
        return f"grid:x={xs},y={ys}"


@dataclass(frozen=True, eq=False)
class Star(TestFunction):
    """x -> (1/x) g(1/x)."""

    of: TestFunction = None
    kind: ClassVar[str] = "star"

    @property
    def compact(self):
        return self.of.compact

    @property
    def truncation_error(self):
        return self.of.truncation_error

    @property
    def is_real(self):
        return self.of.is_real

    @property
    def support(self):
        a, b = self.of.support
        return 1.0 / b, 1.0 / a

    def _eval(self, x):
        return self.of(1.0 / x) / x

    def descriptor(self):
        return f"star:of={self.of.descriptor()}"


@dataclass(frozen=True, eq=False)
class Combination(TestFunction):
    """Finite linear combination sum_i c_i g_i."""

    terms: tuple = ()
    kind: ClassVar[str] = "combo"

    def __post_init__(self):
        if not self.terms:
            raise ContractError("combination needs at least one term")

    @property
    def compact(self):
        return all(g.compact for _, g in self.terms)

    @property
    def truncation_error(self):
        return sum(abs(c) * g.truncation_error for c, g in self.terms)

    @property
    def is_real(self):
        return all(g.is_real and complex(c).imag == 0 for c, g in self.terms)

    @property
    def support(self):
        return (min(g.support[0] for _, g in self.terms),
                max(g.support[1] for _, g in self.terms))

    def _eval(self, x):
        out = np.zeros_like(x, dtype=complex)
        for c, g in self.terms:
            out = out + c * g(x)
        return out

    def descriptor(self):
        parts = "".join(f"[{_fmt_num(c)}*{g.descriptor()}]" for c, g in self.terms)
        return f"combo:{parts}"


@dataclass(frozen=True, eq=False)
class Autocorrelation(TestFunction):
    """x -> int_0^inf g(xy) conj(g(y)) dy, by midpoint quadrature in log y.

    The integration range at each x is the exact overlap of the two shifted
    supports, so indicator kernels integrate exactly and smooth bumps converge
    spectrally.  ``density`` is the number of nodes per unit log-length at the
    coarse level; the estimate is refined by halving the step until two levels
    agree to ``rtol``.
    """

    of: TestFunction = None
    density: int = 4096
    rtol: float = 1e-10
    max_doublings: int = 5
    kind: ClassVar[str] = "autocorr"

    def __post_init__(self):
        if self.of is None:
            raise ContractError("autocorrelation needs a test function")
        if self.max_doublings < 1 or self.density < 1:
            raise ContractError("autocorrelation needs density >= 1 and max_doublings >= 1")

    @property
    def compact(self):
        return self.of.compact

    @property
    def truncation_error(self):
        return self.of.truncation_error

    @property
    def is_real(self):
        return self.of.is_real

    @property
    def support(self):
        a, b = self.of.support
        return a / b, b / a

    def _rule(self, lx, n):
        la, lb = self.of.log_support
        lo = np.maximum(la - lx, la)
        hi = np.minimum(lb - lx, lb)
        length = np.clip(hi - lo, 0.0, None)
        h = length / n
        nodes = lo[:, None] + (np.arange(n) + 0.5)[None, :] * h[:, None]
        y = np.exp(nodes)
        x = np.exp(lx)[:, None]
        g_xy = self.of(x * y)
        g_y = self.of(y)
        vals = g_xy * np.conj(g_y) * y
        return vals.sum(axis=1) * h, np.abs(vals).sum(axis=1) * h

    def _eval(self, x):
        lx = np.log(np.asarray(x, dtype=float)).ravel()
        out = np.zeros(lx.shape, dtype=complex)
        la, lb = self.of.log_support
        knots = log_breakpoints(self.of)
        knots = knots[(knots > la) & (knots < lb)]
        if len(knots):
            # kinks inside the support: the midpoint extrapolation is no longer
            # valid, so split at the kinks of g(y) and g(xy) instead
            for i, v in enumerate(lx):
                out[i] = self._piecewise(v, knots)
            return out.reshape(np.shape(x))
        n = max(64, int(math.ceil(self.density * (lb - la))))
        chunk = max(1, 2_000_000 // n)
        for start in range(0, len(lx), chunk):
            sl = slice(start, start + chunk)
            out[sl] = self._refined(lx[sl], n)
        return out.reshape(np.shape(x))

    def _refined(self, lx, n):
        fine, _ = self._rule(lx, n)
        for _ in range(self.max_doublings):
            coarse = fine
            n *= 2
            fine, scale = self._rule(lx, n)
            err = np.abs(fine - coarse)
            if np.all(err <= self.rtol * scale + 1e-300):
                # midpoint error shrinks by 4 per halving on smooth integrands
                return fine + (fine - coarse) / 3.0
        bad = int(np.argmax(err / np.maximum(scale, 1e-300)))
        raise NumericError(
            "autocorrelation quadrature did not converge",
            estimates=(complex(coarse[bad]), complex(fine[bad])),
        )

    def _piecewise(self, lx, knots):
        la, lb = self.of.log_support
        lo, hi = max(la - lx, la), min(lb - lx, lb)
        if not hi > lo:
            return 0.0
        cuts = np.concatenate(([lo, hi], knots, knots - lx))
        edges = np.unique(cuts[(cuts >= lo) & (cuts <= hi)])
        x_node, w_node = np.polynomial.legendre.leggauss(8)
        ex = math.exp(lx)

        def rule(e):
            half = 0.5 * np.diff(e)
            mid = 0.5 * (e[1:] + e[:-1])
            u = (mid[:, None] + half[:, None] * x_node[None, :]).ravel()
            w = (half[:, None] * w_node[None, :]).ravel()
            y = np.exp(u)
            vals = self.of(ex * y) * np.conj(self.of(y)) * y
            return np.sum(vals * w), np.sum(np.abs(vals) * w)

        fine, scale = rule(edges)
        for _ in range(self.max_doublings + 3):
            coarse = fine
            edges = np.sort(np.concatenate((edges, 0.5 * (edges[1:] + edges[:-1]))))
            fine, scale = rule(edges)
            if abs(fine - coarse) <= self.rtol * scale + 1e-300:
                return fine
        raise NumericError("autocorrelation quadrature did not converge",
                           estimates=(complex(coarse), complex(fine)))

    def descriptor(self):
        return f"autocorr:of={self.of.descriptor()}"


def log_breakpoints(f: TestFunction) -> np.ndarray:
    """Log-abscissae where f or one of its derivatives may jump."""
    if isinstance(f, GridSampled):
        return np.log(np.asarray(f.xs))
    if isinstance(f, Star):
        return -log_breakpoints(f.of)[::-1]
    if isinstance(f, Combination):
        parts = [log_breakpoints(g) for _, g in f.terms]
        return np.unique(np.concatenate(parts)) if parts else np.zeros(0)
    if f.compact:
        return np.array(f.log_support)
    return np.zeros(0)


def _fmt_num(c):
    c = complex(c)
    if c.imag == 0:
        return repr(c.real)
    return repr(c).strip("()")


# ---------------------------------------------------------------------------
# descriptor grammar
# ---------------------------------------------------------------------------

_KIND_PARAMS = {
    "logbump": (LogBump, {"c": "center", "h": "half_width"}),
    "loggauss": (LogGaussian, {"c": "center", "w": "width", "r": "radius"}),
    "indicator": (Indicator, {"a": "a", "b": "b"}),
}


def parse_test_function(text: str) -> TestFunction:
    """Build a test function from a ``kind:params`` descriptor.

    Grammar::

        logbump:c=<center>,h=<log half-width>
        loggauss:c=<center>,w=<log width>[,r=<truncation radius>]
        indicator:a=<left>,b=<right>
        grid:x=<x1>|<x2>|...,y=<y1>|<y2>|...
        star:of=<descriptor>
        autocorr:of=<descriptor>
        combo:[<coef>*<descriptor>][<coef>*<descriptor>]...

    Raises ContractError on malformed input.
    """
    text = text.strip()
    kind, sep, rest = text.partition(":")
    if not sep:
        raise ContractError(f"missing ':' in test-function spec {text!r}")
    try:
        if kind in ("star", "autocorr"):
            if not rest.startswith("of="):
                raise ContractError(f"{kind} expects 'of=<spec>'")
            inner = parse_test_function(rest[3:])
            return Star(inner) if kind == "star" else Autocorrelation(inner)
        if kind == "combo":
            return Combination(tuple(_parse_combo_terms(rest)))
        params = {}
        for item in filter(None, rest.split(",")):
            key, eq, val = item.partition("=")
            if not eq:
                raise ContractError(f"bad parameter {item!r}")
            params[key.strip()] = val.strip()
        if kind == "grid":
            xs = [float(v) for v in params["x"].split("|")]
            ys = [_parse_num(v) for v in params["y"].split("|")]
            return GridSampled(tuple(xs), tuple(ys))
        if kind not in _KIND_PARAMS:
            raise ContractError(f"unknown test-function kind {kind!r}")
        cls, names = _KIND_PARAMS[kind]
        unknown = set(params) - set(names)
        if unknown:
            raise ContractError(f"unknown parameters {sorted(unknown)} for {kind}")
        return cls(**{names[k]: _parse_real(v) for k, v in params.items()})
    except (KeyError, ValueError) as exc:
        if isinstance(exc, ContractError):
            raise
        raise ContractError(f"malformed test-function spec {text!r}: {exc}") from None


def _parse_real(v: str) -> float:
    v = v.strip()
    consts = {"e": math.e, "pi": math.pi}
    if v.startswith("log(") and v.endswith(")"):
        return math.log(_parse_real(v[4:-1]))
    if v in consts:
        return consts[v]
    if "/" in v:
        num, den = v.split("/", 1)
        return _parse_real(num) / _parse_real(den)
    return float(v)


def _parse_num(v: str):
    v = v.strip()
    if "j" in v:
        return complex(v)
    return _parse_real(v)


def _parse_combo_terms(rest: str):
    depth, start = 0, None
    for i, ch in enumerate(rest):
        if ch == "[":
            if depth == 0:
                start = i + 1
            depth += 1
        elif ch == "]":
            depth -= 1
            if depth < 0:
                raise ContractError("unbalanced ']' in combo spec")
            if depth == 0:
                coef, star, spec = rest[start:i].partition("*")
                if not star:
                    raise ContractError("combo term must be <coef>*<spec>")
                yield _parse_num(coef), parse_test_function(spec)
        elif depth == 0 and not ch.isspace():
            raise ContractError(f"unexpected {ch!r} in combo spec")
    if depth:
        raise ContractError("unbalanced '[' in combo spec")


# ---------------------------------------------------------------------------
# lattice functions, characters, zeros
# ---------------------------------------------------------------------------


def _default_label(base: float):
    r = round(base)
    if abs(base - r) < 1e-12 and r >= 2:
        return int(r)
    return Q_LABEL


@dataclass(frozen=True, eq=False)
class PrimeLatticeFunction:
    """Finitely supported values on the geometric lattice base**k.

    ``values[i]`` is the value at ``base ** (k_min + i)``.  ``label`` names the
    torus coordinate of the lattice: the prime itself for integral bases and
    ``Q_LABEL`` otherwise (a q-lattice with q = 1/base).
    """

    base: float
    k_min: int = 0
    values: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=complex))
    label: object = None

    def __post_init__(self):
        if not self.base > 1:
            raise ContractError("lattice base must exceed 1")
        vals = np.array(self.values, dtype=complex).ravel()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "k_min", int(self.k_min))
        if self.label is None:
            object.__setattr__(self, "label", _default_label(self.base))

    @classmethod
    def from_dict(cls, base, values: Mapping[int, complex], label=None):
        if not values:
            return cls(base, 0, np.zeros(0, dtype=complex), label)
        lo, hi = min(values), max(values)
        arr = np.zeros(hi - lo + 1, dtype=complex)
        for k, v in values.items():
            arr[k - lo] = v
        return cls(base, lo, arr, label)

    @property
    def k_max(self) -> int:
        return self.k_min + len(self.values) - 1

    @property
    def ks(self) -> np.ndarray:
        return np.arange(self.k_min, self.k_min + len(self.values))

    @property
    def points(self) -> np.ndarray:
        return self.base ** self.ks.astype(float)

    def __getitem__(self, k: int) -> complex:
        i = k - self.k_min
        if 0 <= i < len(self.values):
            return complex(self.values[i])
        return 0j

    def items(self):
        return [(int(k), complex(v)) for k, v in zip(self.ks, self.values) if v != 0]

    def to_dict(self):
        return dict(self.items())

    def trimmed(self) -> "PrimeLatticeFunction":
        nz = np.flatnonzero(self.values)
        if len(nz) == 0:
            return PrimeLatticeFunction(self.base, 0, np.zeros(0, dtype=complex), self.label)
        return PrimeLatticeFunction(self.base, self.k_min + nz[0],
                                    self.values[nz[0]:nz[-1] + 1], self.label)

    def is_zero(self) -> bool:
        return not np.any(self.values)


@dataclass(frozen=True)
class TorusCharacter:
    """One angle in [0, 2pi) per label (a prime or the q-place)."""

    angles: Mapping

    def __post_init__(self):
        ang = dict(self.angles)
        for lab, th in ang.items():
            if not (0.0 <= th < TWO_PI):
                raise ContractError(f"angle for {lab!r} outside [0, 2pi): {th!r}")
        object.__setattr__(self, "angles", ang)

    def __getitem__(self, label):
        return self.angles[label]

    @property
    def labels(self):
        return tuple(self.angles)

    def z(self, label) -> complex:
        return complex(math.cos(self.angles[label]), math.sin(self.angles[label]))


@dataclass(frozen=True, eq=False)
class ZeroTable:
    """Ascending positive ordinates of nontrivial zeros, rho = 1/2 + i*gamma."""

    ordinates: np.ndarray
    provenance: str = "computed"

    def __post_init__(self):
        g = np.array(self.ordinates, dtype=float).ravel()
        if np.any(g <= 0) or np.any(np.diff(g) <= 0):
            raise ContractError("zero ordinates must be positive and strictly increasing")
        if self.provenance not in ("computed", "loaded"):
            raise ContractError(f"unknown provenance {self.provenance!r}")
        g.setflags(write=False)
        object.__setattr__(self, "ordinates", g)

    def __len__(self):
        return len(self.ordinates)

    def head(self, count: int) -> "ZeroTable":
        return ZeroTable(self.ordinates[:count], self.provenance)


@dataclass(frozen=True, eq=False)
class SpectralMeasureEstimate:
    edges: np.ndarray
    weights: np.ndarray
    total_mass: float
    first_moment: float
    mass_stderr: float = 0.0
    moment_stderr: float = 0.0


# ---------------------------------------------------------------------------
# Weil report
# ---------------------------------------------------------------------------

ARCH_METHODS = ("direct-integral", "q-paper", "q-fourier")


@dataclass(frozen=True)
class WeilReport:
    test_function: str
    primes: Mapping[int, float]
    w_fin: float
    arch_method: str
    arch_value: float
    total: float
    arch_q: float | None = None
    arch_K: int | None = None
    zeros_provenance: str | None = None
    zeros_count: int | None = None
    config: Mapping = field(default_factory=dict)

    def __post_init__(self):
        if self.arch_method not in ARCH_METHODS:
            raise ContractError(f"unknown archimedean method {self.arch_method!r}")
        object.__setattr__(self, "primes", {int(p): float(v) for p, v in self.primes.items()})
        slack = 1e-12 * max(1.0, abs(self.w_fin), abs(self.arch_value))
        if abs(self.total - (self.w_fin + self.arch_value)) > slack:
            raise ContractError("report total must equal w_fin + archimedean value")

    def to_json_obj(self) -> dict:
        return {
            "test_function": self.test_function,
            "primes": {str(p): v for p, v in sorted(self.primes.items())},
            "w_fin": self.w_fin,
            "arch": {"method": self.arch_method, "q": self.arch_q,
                     "K": self.arch_K, "value": self.arch_value},
            "total": self.total,
            "zeros": {"provenance": self.zeros_provenance, "count": self.zeros_count},
            "config": dict(self.config),
        }


def serialize_report(report: WeilReport) -> bytes:
    return json.dumps(report.to_json_obj(), sort_keys=True, indent=2,
                      allow_nan=False).encode("utf-8") + b"\n"


def parse_report(data: bytes) -> WeilReport:
    """Inverse of :func:`serialize_report`; raises ReportParseError with a byte offset."""
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ReportParseError("invalid utf-8", exc.start) from None
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        offset = len(text[:exc.pos].encode("utf-8"))
        raise ReportParseError(exc.msg, offset) from None
    end = len(data)
    try:
        arch, zeros = obj["arch"], obj["zeros"]
        return WeilReport(
            test_function=obj["test_function"],
            primes={int(p): float(v) for p, v in obj["primes"].items()},
            w_fin=float(obj["w_fin"]),
            arch_method=arch["method"],
            arch_value=float(arch["value"]),
            total=float(obj["total"]),
            arch_q=None if arch["q"] is None else float(arch["q"]),
            arch_K=None if arch["K"] is None else int(arch["K"]),
            zeros_provenance=zeros["provenance"],
            zeros_count=zeros["count"],
            config=obj.get("config", {}),
        )
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise ReportParseError(f"invalid report structure: {exc!r}", end) from None
