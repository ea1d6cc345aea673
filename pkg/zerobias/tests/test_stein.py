# Use of this source code is governed by a BSD 2-Clause
# license that can be found in the LICENSE file.

import math
from fractions import Fraction

import numpy as np
import pytest

from zerobias.distributions import pmf_binomial, pmf_poisson_truncated
from zerobias.errors import (BadParameter, EnvelopeViolated, GridTooShort,
                             TailNotCertified)
from zerobias.stein import (
    GrowthEnvelope, SolutionTree, SteinContext, TabulatedFunction,
    builtin_function, characterization_gap, default_grid_bound,
    forward_difference, indicator, monomial, poisson_expectation,
    polynomial, shift, shifted_difference, stein_residual, stein_solution,
    stein_solution_modified, table, tau, tau_power
)

from .corpus import builtin_functions, random_table

LAMBDAS = [0.1, 0.5, 1.0, 3.0]


def test_growth_envelope():
    envelope = GrowthEnvelope(2, 1.5)
    assert envelope(np.array([0, 1, 4])).tolist() == [2, 2, 16]
    assert envelope.holds_on([1, -2, 5.6])
    assert not envelope.holds_on([0, 0, 6])
    assert envelope.scaled(3) == GrowthEnvelope(6, 1.5)
    assert envelope.scaled(1, p=0) == GrowthEnvelope(2, 0)
    with pytest.raises(BadParameter):
        GrowthEnvelope(-1, 0)
    with pytest.raises(BadParameter):
        GrowthEnvelope(1, float('inf'))


def test_tabulated_function():
    f = TabulatedFunction([0, 1, 4], GrowthEnvelope(1, 2), label='x^2')
    assert f.grid_bound == 2
    assert f.grid.tolist() == [0, 1, 2]
    assert f(2) == 4
    assert f.restrict(1).values.tolist() == [0, 1]
    with pytest.raises(GridTooShort):
        f(3)
    with pytest.raises(GridTooShort):
        f.restrict(5)
    with pytest.raises(GridTooShort):
        TabulatedFunction([1], GrowthEnvelope(1, 0))
    with pytest.raises(EnvelopeViolated, match='f\\(2\\)'):
        TabulatedFunction([0, 1, 5], GrowthEnvelope(1, 2))
    with pytest.raises(BadParameter):
        TabulatedFunction([0, np.nan], GrowthEnvelope(1, 0))


def test_builtin_functions():
    h = polynomial([1, 0, 2], 4)
    assert h.values.tolist() == [1, 3, 9, 19, 33]
    assert h.envelope == GrowthEnvelope(3, 2)
    assert polynomial([0, 0], 3).values.tolist() == [0, 0, 0, 0]

    h = indicator([2, 0, 9], 4)
    assert h.values.tolist() == [1, 0, 1, 0, 0]
    assert h.label == '1{0,2,9}'

    h = monomial(0, 3)
    assert h.values.tolist() == [1, 1, 1, 1]
    assert monomial(0.5, 4).values.tolist() == [0, 1, 2 ** 0.5, 3 ** 0.5, 2]

    h = table([1, -2, 3], (3, 0))
    assert h.envelope == GrowthEnvelope(3, 0)

    h = builtin_function('table', 1, values=[1, -2, 3],
                         envelope=GrowthEnvelope(3, 0))
    assert h.values.tolist() == [1, -2]
    assert builtin_function('monomial', 5, power=1).values.tolist() == [
        0, 1, 2, 3, 4, 5
    ]
    with pytest.raises(BadParameter, match='unknown function kind'):
        builtin_function('spline', 5)


def test_forward_difference():
    f = monomial(2, 10)
    assert forward_difference(f, 0) is f
    diff = forward_difference(f, 1)
    assert diff.grid_bound == 9
    assert diff.values.tolist() == [2 * x + 1 for x in range(10)]
    assert forward_difference(f, 2).values.tolist() == [2] * 9
    assert not forward_difference(f, 3).values.any()
    assert diff.label == 'D^1(x^2)'

    # the propagated envelope holds for fast growing functions as well
    f = monomial(3, 30)
    for k in range(1, 5):
        forward_difference(f, k)

    with pytest.raises(GridTooShort):
        forward_difference(monomial(1, 2), 2)
    with pytest.raises(BadParameter):
        forward_difference(f, -1)


def test_shift_and_tau():
    f = monomial(2, 10)
    assert shift(f).values.tolist() == [(x + 1) ** 2 for x in range(10)]
    assert shifted_difference(f, 1).values.tolist() == [
        2 * x + 3 for x in range(9)
    ]
    assert tau(f).values.tolist() == [float(x + 1) for x in range(10)]

    g = monomial(3, 12)
    k = 3
    expected = [math.factorial(x) * (x + k) ** 3 / math.factorial(x + k)
                for x in range(10)]
    np.testing.assert_allclose(tau_power(g, k).values, expected, rtol=1e-13)
    with pytest.raises(GridTooShort):
        shift(monomial(1, 1))


@pytest.mark.parametrize('lam', LAMBDAS)
def test_poisson_expectation(lam):
    grid = 60
    one = poisson_expectation(monomial(0, grid), lam, 1e-12)
    assert abs(one.value - 1) < 1e-12
    assert one.tail_bound < 1e-12

    square = poisson_expectation(monomial(2, grid), lam, 1e-12)
    assert square.value == pytest.approx(lam + lam ** 2, abs=1e-11)

    with pytest.raises(GridTooShort):
        poisson_expectation(monomial(3, 4), 3.0, 1e-12)


@pytest.mark.parametrize('lam', LAMBDAS)
def test_stein_solution_residual(lam):
    grid = 60
    for name, h in builtin_functions(grid).items():
        center = poisson_expectation(h, lam, 1e-12).value
        f = stein_solution(h, lam, 1e-12)
        assert f.measured
        assert 1 <= f.grid_bound <= grid
        assert f.values[0] == 0
        residual = stein_residual(f, h, lam, center=center)
        assert np.abs(residual).max() <= 1e-9 * (1 + np.abs(h.values).max())


@pytest.mark.parametrize('lam', LAMBDAS)
def test_stein_solution_known(lam):
    # f = x + lambda solves x f(x) - lambda f(x+1) = x^2 - lambda - lambda^2
    f = stein_solution(monomial(2, 60), lam, 1e-12)
    x = f.grid[1:]
    np.testing.assert_allclose(f.values[1:], x + lam, rtol=0, atol=1e-9)

    # and f = 1 solves it for h(x) = x
    f = stein_solution(monomial(1, 60), lam, 1e-12)
    np.testing.assert_allclose(f.values[1:], 1.0, rtol=0, atol=1e-9)

    assert f.certificate < 1e-9


@pytest.mark.parametrize('lam', LAMBDAS)
def test_modified_stein_solution(lam):
    grid = 60
    for name, h in builtin_functions(grid).items():
        f = stein_solution_modified(h, lam, 1e-12)
        residual = stein_residual(f, h, lam)
        assert np.abs(residual).max() <= 1e-9 * (1 + np.abs(h.values).max())

        # the series representation at x = 1
        series = math.fsum(lam ** i / math.factorial(i) * h.values[i]
                           for i in range(1, 40))
        assert f.values[1] == pytest.approx(series / lam, rel=1e-9,
                                            abs=1e-12)


@pytest.mark.parametrize('lam', LAMBDAS)
def test_tau_identity(lam):
    grid = 60
    for name, h in builtin_functions(grid).items():
        lhs = stein_solution_modified(tau(h), lam, 1e-12)
        rhs = stein_solution_modified(h, lam, 1e-12)
        top = min(grid // 2, lhs.grid_bound, rhs.grid_bound - 1)
        x = np.arange(1, top + 1)
        deviation = np.abs(lhs.values[x] - rhs.values[x + 1] / x)
        assert deviation.max() <= 1e-9


def test_stein_solution_needs_room():
    with pytest.raises(TailNotCertified):
        stein_solution(monomial(1, 3), 5.0, 1e-12)
    # the series tail decays but P_lam(h) still misses too much mass
    with pytest.raises(TailNotCertified):
        stein_solution(monomial(1, 12), 5.0, 1e-12)
    with pytest.raises(TailNotCertified):
        stein_solution_modified(monomial(1, 3), 5.0, 1e-12)


def test_characterization_gap():
    f = monomial(2, 40)
    poisson = pmf_poisson_truncated(1.5, tail_tol=1e-15)
    assert abs(characterization_gap(poisson, f, poisson.mean)) < 1e-10

    # f(x) = x gives E[Z^2] - lambda E[Z + 1] = Var(Z) - lambda
    binomial = pmf_binomial(6, 0.25)
    gap = characterization_gap(binomial, monomial(1, 10), binomial.mean)
    assert gap == pytest.approx(binomial.variance - binomial.mean)


def test_default_grid_bound():
    assert default_grid_bound(0.3, 3, 0, 1) == 32 + 16
    assert default_grid_bound(2.0, 20, 3, 2) == 8 + 40 + 20 + 64


def test_stein_context():
    context = SteinContext(0.5, 1e-12, 40)
    h = context.tabulate('monomial', power=2)
    assert h.grid_bound == 40
    assert context.expectation(h).value == pytest.approx(0.75, abs=1e-11)
    f = context.solve(h)
    np.testing.assert_allclose(f.values[1:], f.grid[1:] + 0.5, atol=1e-9)
    assert 'lambda=0.5' in repr(context)

    with pytest.raises(TailNotCertified):
        SteinContext(5.0, 1e-12, 8)


def test_solution_tree():
    context = SteinContext(0.5, 1e-12, 40)
    tree = SolutionTree(monomial(2, 40), context)
    assert tree.root.label == 'x^2'

    # f_h = x + 0.5, so D f_h(x+1) = 1 and its Stein solution vanishes
    g = tree.function((1,))
    np.testing.assert_allclose(g.values, 1.0, atol=1e-9)
    np.testing.assert_allclose(tree.solution((1,)).values, 0.0, atol=1e-9)
    assert tree.expectation((1,)) == pytest.approx(1.0, abs=1e-9)
    assert tree.solution(()) is tree.solution([])
    assert len(tree) == 2
    assert set(tree.certificates()) == {(), (1,)}


def lower_sum_solution(points, lam, top):
    """f_h(1..top) for h = 1{points} and an integer lam, in exact arithmetic

    Only P_lam(h) carries the rounding of exp(-lam), and the lower sum
    weights it by at most (x-1)!/lam^x e^lam.
    """
    terms = [Fraction(lam ** i, math.factorial(i)) for i in range(top)]
    center = Fraction(math.exp(-lam)) * sum(terms[i] for i in points)
    values, partial = [], Fraction(0)
    for x in range(1, top + 1):
        partial += terms[x - 1] * ((1 if x - 1 in points else 0) - center)
        values.append(float(-partial * math.factorial(x - 1) / lam ** x))
    return np.array(values), float(center)


@pytest.mark.parametrize(('lam', 'upto'), [(20, 15), (40, 30)])
def test_stein_solution_for_large_means(lam, upto):
    points = range(upto + 1)
    h = indicator(points, 200)
    f = stein_solution(h, float(lam), 1e-12)
    assert f.certificate < 1e-12

    top = 3 * lam // 2
    assert f.grid_bound >= top
    expected, center = lower_sum_solution(points, lam, top)
    np.testing.assert_allclose(f.values[1:top + 1], expected, rtol=0,
                               atol=1e-10)

    residual = stein_residual(f, h, lam, center=center)
    assert np.abs(residual).max() <= 1e-9


@pytest.mark.parametrize('lam', LAMBDAS)
def test_stein_solution_growth(lam):
    # |f_h(x)| / x^(p-1) stays bounded, hence so does |f_h(x)| / x^p
    for name, h in builtin_functions(90).items():
        f = stein_solution(h, lam, 1e-12)
        x = f.grid[1:]
        p = h.envelope.p
        slower = np.abs(f.values[1:]) / x ** (p - 1.0)
        third = x.size // 3
        body, tail = slower[third:2 * third], slower[2 * third:]
        assert tail.max() <= body.max() * (1 + 1e-9) + 1e-9, name
        assert np.all(np.abs(f.values[1:]) / x ** p <= f.envelope.K), name


def test_difference_product_rule(rng):
    # D(fg)(x) = f(x+1) Dg(x) + g(x) Df(x)
    for _ in range(20):
        f, g = random_table(rng, 12), random_table(rng, 12)
        product = f.values * g.values
        fg = table(product, GrowthEnvelope(float(np.abs(product).max()), 0))
        lhs = forward_difference(fg, 1).values
        rhs = (shift(f).values * forward_difference(g, 1).values +
               g.values[:-1] * forward_difference(f, 1).values)
        np.testing.assert_allclose(lhs, rhs, rtol=0, atol=1e-14)


@pytest.mark.parametrize('lam', LAMBDAS)
def test_poisson_null(lam):
    poisson = pmf_poisson_truncated(lam, tail_tol=1e-15)
    for name, h in builtin_functions(60).items():
        value = poisson_expectation(h, lam, 1e-12).value
        scale = 1 + abs(value)
        assert abs(poisson.expect(h) - value) <= 1e-9 * scale, name

        f = stein_solution(h, lam, 1e-12)
        gap = characterization_gap(poisson, f, lam)
        assert abs(gap) <= 1e-9 * scale, name
