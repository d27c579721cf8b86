import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from weilbohr import zeta as zmod
from weilbohr.arith import factorize, is_prime, primes_upto
from weilbohr.domain import Combination, Indicator, LogBump, LogGaussian, ZeroTable
from weilbohr.errors import DomainError, IntegrityError, PoleError, ZeroFileError
from weilbohr.testfn import autocorrelate, project_mellin_vanishing
from weilbohr.zeta import (chebyshev_psi, digamma, explicit_formula_zero_side, find_zeros,
                           hardy_z, load_zeros, von_mangoldt_check, von_mangoldt_sieve,
                           zero_count, zeta_eval)


@pytest.mark.parametrize("s", [2.0, 0.5 + 14.134725j, 0.5 + 100j, -3.5, 0.3 - 7j, 1.5 + 1e-3j,
                               0.5 + 1000j])
def test_zeta_against_mpmath(s):
    ref = complex(mpmath.zeta(s))
    assert abs(zeta_eval(s) - ref) <= 1e-10 * max(1.0, abs(ref))


def test_zeta_special_values():
    assert zeta_eval(2.0) == pytest.approx(math.pi ** 2 / 6, rel=1e-14)
    assert zeta_eval(0.0) == pytest.approx(-0.5, abs=1e-14)
    with pytest.raises(PoleError):
        zeta_eval(1.0)


def test_zero_table_head(zeros100):
    g = zeros100.ordinates
    assert len(g) == 100
    assert g[0] == pytest.approx(14.134725142, abs=1e-8)
    assert g[99] == pytest.approx(236.524229666, abs=1e-8)
    assert np.all(np.diff(g) > 0)
    assert np.all(np.abs(zeta_eval(0.5 + 1j * g[:20])) <= 1e-6)


def test_zero_count():
    assert zero_count(20.0) == 1
    assert zero_count(100.0) == 29
    assert find_zeros(0).ordinates.size == 0
    with pytest.raises(DomainError):
        find_zeros(-1)


def test_missed_sign_change_is_integrity_error(monkeypatch):
    monkeypatch.setattr(zmod, "zero_count", lambda T: 999)
    with pytest.raises(IntegrityError):
        zmod.find_zeros(5)


def test_hardy_z_real_and_sign_change():
    assert hardy_z(14.0) * hardy_z(14.3) < 0


def test_load_zeros(tmp_path):
    p = tmp_path / "z.txt"
    p.write_text("# header\n14.134725141734693\n\n21.022039638771555  # second\n")
    z = load_zeros(p)
    assert len(z) == 2 and z.provenance == "loaded"
    for body, line in [("14.1\nabc\n", 2), ("14.1\n-3\n", 2), ("21\n14\n", 2), ("1\n2\n0\n", 3)]:
        p.write_text(body)
        with pytest.raises(ZeroFileError) as ei:
            load_zeros(p)
        assert ei.value.line == line
        assert f"line {line}" in str(ei.value)
    with pytest.raises(ZeroFileError):
        load_zeros(tmp_path / "missing.txt")


@pytest.mark.parametrize("s", [0.25 + 0.5j, 1.0, 0.5, 3.7 - 20j, 0.25 + 300j, -2.5 + 0.1j])
def test_digamma_against_mpmath(s):
    assert digamma(s) == pytest.approx(complex(mpmath.digamma(s)), rel=1e-12, abs=1e-13)


def test_digamma_special():
    assert digamma(1.0).real == pytest.approx(-zmod.EULER_GAMMA, abs=1e-14)
    with pytest.raises(PoleError):
        digamma(-2.0)


@settings(max_examples=100, deadline=None)
@given(st.floats(-20, 20), st.floats(-50, 50))
def test_digamma_recurrence(x, y):
    s = complex(x, y)
    if abs(s) < 1e-3 or (y == 0 and x <= 0 and abs(x - round(x)) < 1e-3):
        return
    lhs = digamma(s + 1)
    assert lhs == pytest.approx(digamma(s) + 1 / s, rel=1e-10, abs=1e-10)


def test_sieve_and_psi():
    lam = von_mangoldt_sieve(30)
    assert lam[1] == 0 and lam[6] == 0
    assert lam[8] == pytest.approx(math.log(2))
    assert lam[27] == pytest.approx(math.log(3))
    assert lam[29] == pytest.approx(math.log(29))
    assert chebyshev_psi(10) == pytest.approx(7.832015, abs=1e-6)
    assert chebyshev_psi(1.5) == 0.0
    assert list(primes_upto(20)) == [2, 3, 5, 7, 11, 13, 17, 19]
    assert is_prime(97) and not is_prime(91)
    assert factorize(360) == {2: 3, 3: 2, 5: 1}


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 5000))
def test_sieve_matches_factorization(n):
    lam = von_mangoldt_sieve(n)
    fac = factorize(n)
    expected = math.log(next(iter(fac))) if len(fac) == 1 else 0.0
    assert lam[n] == pytest.approx(expected, abs=1e-15)


def test_von_mangoldt_examples(zeros100, zeros150):
    small = zeros100.head(10)
    for x in (20.5, 100.5):
        gaps = [abs(von_mangoldt_check(x, zeros150.head(n)).gap) for n in (10, 50, 100, 150)]
        assert gaps[-1] <= gaps[0] * 1.1
        for a, b in zip(gaps, gaps[1:]):
            assert b <= a + 0.1 * gaps[0]
    r = von_mangoldt_check(20.5, small)
    assert r.prime_side == pytest.approx(chebyshev_psi(20.5))
    assert r.n_zeros == 10
    # at a prime power the prime side is the half-sum
    r = von_mangoldt_check(8.0, small)
    assert r.prime_side == pytest.approx(chebyshev_psi(7.5) + 0.5 * math.log(2))
    with pytest.raises(DomainError):
        von_mangoldt_check(1.0, small)


def test_zero_side_symmetry(zeros100):
    f = LogGaussian()
    zs = explicit_formula_zero_side(f, zeros100)
    # real f: pairing gamma and -gamma gives twice the real part
    from weilbohr.mellin import mellin_critical_line
    g = zeros100.ordinates
    direct = np.sum(mellin_critical_line(f, g) + mellin_critical_line(f, -g))
    assert zs.zero_sum == pytest.approx(direct.real, rel=1e-12)
    assert abs(direct.imag) <= 1e-12 * abs(direct)


def test_zero_side_degenerate(zeros100):
    zero_f = Combination(((0.0, LogBump(1.0, 0.3)),))
    assert explicit_formula_zero_side(zero_f, zeros100).value == 0
    empty = explicit_formula_zero_side(LogBump(1.0, 0.3), ZeroTable(np.zeros(0)))
    assert empty.warning and empty.zero_sum == 0


def test_zero_side_pole_terms_vanish():
    g = project_mellin_vanishing(LogBump(1.0, 0.1), LogBump(1.1, 0.1), LogBump(0.9, 0.1))
    zs = explicit_formula_zero_side(g, find_zeros(10))
    assert abs(zs.pole_terms) <= 1e-10


def test_zero_side_tail_warning(zeros100):
    # smooth functions decay fast enough; an indicator's transform decays like 1/t
    assert not explicit_formula_zero_side(LogGaussian(), zeros100).warning
    assert not explicit_formula_zero_side(autocorrelate(LogBump(1.0, 0.3)), zeros100).warning
    assert explicit_formula_zero_side(Indicator(1.0, 3.0), zeros100).warning
