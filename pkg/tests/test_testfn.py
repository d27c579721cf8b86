import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from weilbohr.domain import GridSampled, Indicator, LogBump, PrimeLatticeFunction, Star
from weilbohr.errors import ContractError, DegeneracyError, NumericError
from weilbohr.mellin import mellin_continuous, mellin_lattice
from weilbohr.testfn import (autocorrelate, haar_convolve, involution_star, lattice_autocorrelate,
                             lattice_conj_star, lattice_restrict, project_mellin_vanishing)

from conftest import random_lattice


def test_star_of_indicator():
    g = Indicator(1.0, 2.0)
    gs = involution_star(g)
    assert gs.support == (0.5, 1.0)
    x = np.array([0.6, 0.75, 0.9, 1.5])
    np.testing.assert_allclose(gs(x), np.where((x > 0.5) & (x < 1), 1 / x, 0.0))


def test_star_is_involution(rng):
    g = LogBump(1.7, 0.8)
    assert involution_star(involution_star(g)) is g
    x = np.exp(rng.uniform(-2, 2, 200))
    np.testing.assert_allclose(Star(Star(g))(x), g(x), rtol=1e-13, atol=1e-300)


def test_star_support_of_bump():
    h = 0.6
    a, b = involution_star(LogBump(2.0, h)).support
    assert a == pytest.approx(1 / (2 * math.exp(h)))
    assert b == pytest.approx(math.exp(h) / 2)


def test_autocorrelation_of_indicator():
    f = autocorrelate(Indicator(1.0, 2.0))
    assert f.evaluate(1.0) == pytest.approx(1.0, abs=1e-12)
    assert f.evaluate(1.5) == pytest.approx(1 / 3, abs=1e-12)
    assert f.evaluate(2.0) == 0.0
    assert f.support == (0.5, 2.0)


def test_autocorrelation_value_at_one_is_l2_norm():
    g = LogBump(1.1, 0.4)
    f = autocorrelate(g)
    y = np.exp(np.linspace(*g.log_support, 20001))
    ref = np.trapezoid(g(y) ** 2 * y, np.log(y))
    assert f.evaluate(1.0) == pytest.approx(ref, rel=1e-8)
    assert f.evaluate(1.0) > 0


def test_autocorrelation_conjugate_symmetry(rng):
    for g in (LogBump(1.2, 0.5), GridSampled((0.7, 1.0, 1.6), (0.2, 1.0, 0.4))):
        f = autocorrelate(g)
        x = np.exp(rng.uniform(-0.9, 0.9, 25))
        np.testing.assert_allclose(f(1 / x), x * f(x), rtol=1e-9, atol=1e-13)


def test_autocorrelation_nonconvergence_reports_estimates():
    f = type(autocorrelate(LogBump(1.0, 2.0)))(LogBump(1.0, 2.0), density=1, rtol=1e-16,
                                                max_doublings=1)
    with pytest.raises(NumericError) as ei:
        f(np.array([1.2]))
    assert len(ei.value.estimates) == 2


def test_lattice_autocorrelate_examples():
    G = PrimeLatticeFunction.from_dict(2, {0: 1.0, 1: 1.0})
    H = lattice_autocorrelate(G)
    assert H.to_dict() == {-1: 2.0, 0: 3.0, 1: 1.0}
    th = np.linspace(0, 2 * np.pi, 9)
    np.testing.assert_allclose(mellin_lattice(H, 0.5)(th), 3 + 2 * math.sqrt(2) * np.cos(th),
                               atol=1e-14)
    assert lattice_autocorrelate(PrimeLatticeFunction.from_dict(2, {1: 1.0})).to_dict() == {0: 2.0}
    assert lattice_autocorrelate(PrimeLatticeFunction(2, 0, [])).is_zero()
    assert lattice_autocorrelate(PrimeLatticeFunction(2, 0, [0.0, 0.0])).is_zero()


def test_lattice_autocorrelate_is_convolution_with_sharp(rng):
    G = random_lattice(rng, 3)
    H1 = lattice_autocorrelate(G)
    H2 = haar_convolve(G, lattice_conj_star(G))
    np.testing.assert_allclose(H1.values, H2.values)
    # direct defining sum H(b^k) = sum_j G(b^(k+j)) conj(G(b^j)) b^j
    for k in range(-8, 9):
        direct = sum(G[k + j] * np.conj(G[j]) * 3.0 ** j for j in range(-4, 5))
        assert H1[k] == pytest.approx(direct, abs=1e-10)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**31), st.sampled_from([2, 3, 5, 7, 1 / 0.9]),
       st.floats(-1.0, 2.0), st.floats(0, 2 * np.pi))
def test_convolution_theorem(seed, base, sigma, theta):
    rng = np.random.default_rng(seed)
    G = random_lattice(rng, base, -3, 2)
    G2 = random_lattice(rng, base, -1, 4)
    lhs = mellin_lattice(haar_convolve(G, G2), sigma)(theta)
    rhs = mellin_lattice(G, sigma)(theta) * mellin_lattice(G2, sigma)(theta)
    assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(rhs))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31))
def test_autocorrelation_positivity(seed):
    rng = np.random.default_rng(seed)
    G = random_lattice(rng, 5)
    th = np.linspace(0, 2 * np.pi, 64)
    vals = mellin_lattice(lattice_autocorrelate(G), 0.5)(th)
    assert np.all(vals.real >= -1e-12)
    np.testing.assert_allclose(vals, np.abs(mellin_lattice(G, 0.5)(th)) ** 2, atol=1e-10)


def test_haar_convolve_rejects_mixed_lattices():
    with pytest.raises(ContractError):
        haar_convolve(PrimeLatticeFunction(2, 0, [1.0]), PrimeLatticeFunction(3, 0, [1.0]))


def test_lattice_restrict_examples():
    # bump supported in (0.4, 2.5)
    bump = LogBump(1.0, math.log(2.5))
    F = lattice_restrict(bump, 2)
    assert sorted(k for k, v in F.items() if v != 0) == [-1, 0, 1]
    F5 = lattice_restrict(bump, 5)
    assert [k for k, v in F5.items() if v != 0] == [0]
    ind = lattice_restrict(Indicator(1.0, 10.0), 3)
    assert ind[1] == 1 and ind[2] == 1
    assert ind[0] == 0.5  # x = 1 is an endpoint: value halved
    assert all(ind[k] == 0 for k in (-2, -1, 3, 4))


def test_lattice_restrict_window():
    bump = LogBump(1.0, math.log(2.5))
    with pytest.raises(ContractError):
        lattice_restrict(bump, 2, window=(0, 1), auto_expand=False)
    F = lattice_restrict(bump, 2, window=(0, 1))
    assert F.k_min == -1 and F.k_max == 1
    F = lattice_restrict(bump, 2, window=(-3, 3), auto_expand=False)
    assert F.k_min == -3 and F.k_max == 3 and F[-3] == 0
    with pytest.raises(ContractError):
        lattice_restrict(bump, 1.0)


def test_projection_vanishes():
    g = project_mellin_vanishing(LogBump(1.0, 0.3), LogBump(1.5, 0.3), LogBump(2.0, 0.3))
    assert abs(mellin_continuous(g, 0.0)) <= 1e-10
    assert abs(mellin_continuous(g, 1.0)) <= 1e-10
    c = [c for c, _ in g.terms]
    assert c[0] == 1.0 and c[1] != 0 and c[2] != 0


def test_projection_idempotent():
    g = project_mellin_vanishing(LogBump(1.0, 0.3), LogBump(1.5, 0.3), LogBump(2.0, 0.3))
    assert project_mellin_vanishing(g, LogBump(1.5, 0.3), LogBump(2.0, 0.3)) is g


def test_projection_degenerate():
    g1 = LogBump(1.5, 0.3)
    with pytest.raises(DegeneracyError):
        project_mellin_vanishing(LogBump(1.0, 0.3), g1, g1)
