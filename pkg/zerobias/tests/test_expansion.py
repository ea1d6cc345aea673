# Use of this source code is governed by a BSD 2-Clause
# license that can be found in the LICENSE file.

import json
import logging
import math

import pytest

from zerobias.distributions import (pmf_bernoulli, pmf_binomial,
                                    pmf_from_weights, pmf_point_mass,
                                    pmf_poisson_truncated, zero_bias)
from zerobias.errors import BadParameter, GridTooShort, ZeroMean
from zerobias.expansion import (ExpansionReport, OrderRecord, SumModel,
                                check_order_improvement, expand)
from zerobias.oracle import exact_expectation
from zerobias.stein import (default_grid_bound, indicator, monomial,
                            poisson_expectation, shift, stein_solution)

from .corpus import builtin_functions, random_components

logger = logging.getLogger(__name__)


def grid_for(model, order, p=3):
    return default_grid_bound(model.lambda_w, model.support_bound, order, p)


def test_sum_model():
    components = [pmf_bernoulli(0.1), pmf_point_mass(0), pmf_binomial(3, 0.1)]
    model = SumModel(components)
    assert len(model) == 2
    assert model.dropped == 1
    assert model.lambda_w == pytest.approx(0.4)
    assert model.support_bound == 4
    assert model.zero_biased[0] == pmf_point_mass(0)
    assert model.leave_one_out[0].allclose(pmf_binomial(3, 0.1), atol=1e-15)
    assert model.leave_one_out[1].allclose(pmf_bernoulli(0.1), atol=1e-15)
    assert 'n=2' in repr(model)

    with pytest.raises(ZeroMean):
        SumModel([pmf_point_mass(0)])
    with pytest.raises(BadParameter):
        SumModel([])
    with pytest.raises(BadParameter):
        SumModel([0.3])


def test_zero_biased_sum(rng):
    # W* = W^(I) + X_I* is the zero-biased law of W
    for _ in range(20):
        model = SumModel(random_components(rng))
        assert model.zero_biased_sum().allclose(zero_bias(model.w),
                                                atol=1e-13)


@pytest.mark.parametrize('ps', [[0.1], [0.05, 0.2, 0.1], [0.3, 0.3]])
def test_order_zero_is_poisson(ps):
    model = SumModel([pmf_bernoulli(p) for p in ps])
    lam = model.lambda_w
    report = expand(model, monomial(2, grid_for(model, 0)), 0)
    record = report.record(0)
    assert record.C == pytest.approx(lam + lam ** 2, abs=1e-10)

    # E[W^2] = lambda + lambda^2 - sum p^2 for Bernoulli summands
    assert report.oracle_value == pytest.approx(
        lam + lam ** 2 - sum(p * p for p in ps), abs=1e-12
    )
    assert record.e_exact == pytest.approx(-sum(p * p for p in ps),
                                           abs=1e-10)
    assert record.e_recursive == pytest.approx(record.e_exact, abs=1e-9)


def test_bernoulli_first_order():
    # with X* = 0 only A(1) = -sum p^2 survives at order one, and
    # D f_h(x+1) = 1 for h(x) = x^2
    ps = [0.02, 0.05, 0.1, 0.04]
    model = SumModel([pmf_bernoulli(p) for p in ps])
    lam = model.lambda_w
    report = expand(model, monomial(2, grid_for(model, 2)), 2,
                    with_bounds=False)
    squares = math.fsum(p * p for p in ps)
    assert report.record(1).C == pytest.approx(lam + lam ** 2 - squares,
                                               abs=1e-10)
    assert abs(report.record(1).e_exact) <= 1e-10
    assert abs(report.record(2).e_exact) <= 1e-10


@pytest.mark.parametrize('lam', [0.2, 0.4, 1.0])
def test_poisson_summand_is_a_fixed_point(lam):
    poisson = pmf_poisson_truncated(lam, tail_tol=1e-14)
    model = SumModel([poisson])
    order = 2
    h = monomial(2, grid_for(model, order))
    report = expand(model, h, order, with_bounds=False)
    C_0 = report.record(0).C
    for record in report.per_order:
        assert abs(record.C - C_0) <= 1e-8 * (1 + abs(C_0))


def test_expansion_matches_exact_expectation(rng):
    for _ in range(12):
        model = SumModel(random_components(rng))
        order = int(rng.integers(0, 4))
        grid = grid_for(model, order)
        for name, h in builtin_functions(grid).items():
            report = expand(model, h, order, with_bounds=False)
            oracle = exact_expectation(model.components, h)
            assert report.oracle_value == oracle
            tolerance = 1e-9 * (1 + abs(oracle))
            for record in report.per_order:
                assert abs(record.C + record.e_recursive - oracle) <= \
                    tolerance, (name, record)
            assert report.diagnostics['dual_path_residual'] <= tolerance


def test_remainders_shrink_with_the_summands():
    def remainders(p):
        model = SumModel([pmf_bernoulli(p)] * 5)
        report = expand(model, indicator([0], grid_for(model, 2, p=0)), 2,
                        with_bounds=False)
        assert check_order_improvement(report) == []
        return [abs(r.e_exact) for r in report.per_order]

    coarse, fine = remainders(0.05), remainders(0.025)
    # e_0 = O(p^2) and e_1 = O(p^3)
    assert coarse[0] / fine[0] >= 3
    assert coarse[1] / fine[1] >= 3
    assert coarse[1] < coarse[0]


def test_square_remainders_improve_with_the_order():
    # for Bernoulli summands and h(x) = x^2 the first order is already exact,
    # so e_1 and e_2 both sit at rounding level and are only bounded
    def remainders(ps):
        model = SumModel([pmf_bernoulli(p) for p in ps])
        report = expand(model, monomial(2, grid_for(model, 2)), 2,
                        with_bounds=False)
        return [abs(r.e_exact) for r in report.per_order]

    ps = [0.05, 0.01, 0.03, 0.02, 0.04]
    coarse = remainders(ps)
    fine = remainders([p / 2 for p in ps])
    assert coarse[0] == pytest.approx(math.fsum(p * p for p in ps),
                                      abs=1e-10)
    assert coarse[1] < coarse[0]
    assert max(coarse[1:] + fine[1:]) <= 1e-10

    factor = coarse[0] / fine[0]
    logger.info('Halving every p reduces |e_0| by a factor %.6g', factor)
    assert factor >= 3


@pytest.mark.parametrize('component', [
    pmf_bernoulli(0.3), pmf_binomial(4, 0.2), pmf_from_weights([1, 0, 2, 1])
])
def test_single_component_error_identity(component):
    # E[h(X)] - P_lam(h) = lam (E[f_h(X* + 1)] - E[f_h(X + 1)])
    model = SumModel([component])
    lam = model.lambda_w
    for name, h in builtin_functions(grid_for(model, 0)).items():
        f = shift(stein_solution(h, lam, 1e-12))
        expected = lam * (zero_bias(component).expect(f) -
                          component.expect(f))
        gap = component.expect(h) - poisson_expectation(h, lam, 1e-12).value
        assert gap == pytest.approx(expected, abs=1e-9), name

        report = expand(model, h, 0, with_bounds=False)
        assert report.record(0).e_exact == pytest.approx(expected, abs=1e-9)


def test_expansion_for_a_large_mean():
    # lambda_W = 40, where the Stein solutions are built upwards below 40
    model = SumModel([pmf_binomial(50, 0.1)] * 8)
    h = indicator(range(31), grid_for(model, 1, p=0))
    report = expand(model, h, 1, with_bounds=False)
    assert report.diagnostics['stein_certificate'] < 1e-9
    for record in report.per_order:
        assert abs(record.C + record.e_recursive - report.oracle_value) <= \
            1e-8
    assert abs(report.record(0).e_exact) < 0.05


def test_check_order_improvement(caplog):
    records = [
        OrderRecord(k=0, C=1.0, e_recursive=0.0, e_exact=1e-3),
        OrderRecord(k=1, C=1.0, e_recursive=0.0, e_exact=-1e-2),
        OrderRecord(k=2, C=1.0, e_recursive=1e-4),
    ]
    report = ExpansionReport(order=2, per_order=records)
    with caplog.at_level(logging.WARNING, logger='zerobias'):
        violations = check_order_improvement(report)
    assert violations == [(1, 1e-3, 1e-2)]
    assert 'Order 1 remainder' in caplog.text


def test_expansion_diagnostics():
    model = SumModel([pmf_bernoulli(0.1), pmf_binomial(2, 0.05),
                      pmf_point_mass(0)])
    grid = grid_for(model, 2, p=2)
    report = expand(model, monomial(2, grid), 2)
    diagnostics = report.diagnostics
    assert diagnostics['grid_bound'] == grid
    assert diagnostics['components'] == 2
    assert diagnostics['dropped_components'] == 1
    assert diagnostics['p'] == 2
    assert diagnostics['stein_certificate'] < 1e-9
    assert diagnostics['tree_nodes'] >= 3
    assert 'seminorms_certified' in diagnostics
    for record in report.per_order:
        assert record.bound is not None
        assert record.bound_exact in (True, False)


def test_expansion_without_oracle():
    model = SumModel([pmf_bernoulli(0.1)] * 3)
    report = expand(model, monomial(1, grid_for(model, 1)), 1,
                    with_oracle=False, with_bounds=False)
    assert report.oracle_value is None
    assert all(r.e_exact is None for r in report.per_order)
    assert 'dual_path_residual' not in report.diagnostics
    assert report.record(1).ratio is None


def test_expansion_needs_a_long_enough_grid():
    model = [pmf_bernoulli(0.1)] * 3
    with pytest.raises(GridTooShort):
        expand(model, monomial(2, 5), 2)
    with pytest.raises(GridTooShort):
        expand(model, monomial(2, 60), 2, grid_bound=6)
    with pytest.raises(BadParameter):
        expand(model, monomial(2, 60), -1)


def test_report_round_trip():
    model = SumModel([pmf_bernoulli(0.1), pmf_binomial(3, 0.05)])
    report = expand(model, monomial(2, grid_for(model, 2, p=2)), 2)
    data = json.loads(json.dumps(report.to_dict()))
    assert ExpansionReport.from_dict(data) == report

    assert list(data) == ['order', 'orders', 'oracle', 'provenance']
    assert list(data['orders'][0]) == [
        'k', 'C', 'e_exact', 'e_via_eq11', 'bound', 'bound_certified'
    ]


@pytest.mark.integration
def test_high_order_expansion():
    model = SumModel([pmf_binomial(3, 0.03)] * 4 +
                     [pmf_bernoulli(0.05)] * 4)
    order = 5
    h = indicator([0, 1], grid_for(model, order, p=0))
    report = expand(model, h, order)
    oracle = report.oracle_value
    for record in report.per_order:
        assert abs(record.C + record.e_recursive - oracle) <= 1e-9
        assert record.bound >= abs(record.e_exact) - 1e-9
    assert abs(report.record(order).e_exact) < abs(report.record(0).e_exact)
