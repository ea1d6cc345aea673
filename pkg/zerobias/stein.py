# Use of this source code is governed by a BSD 2-Clause
# license that can be found in the LICENSE file.

import math
import logging
import numbers
from collections import namedtuple

import numpy as np
from scipy import stats
from scipy.special import gammaln

from .errors import (BadParameter, EnvelopeViolated, GridTooShort,
                     TailNotCertified)
from .utils import powers

__all__ = [
    'GrowthEnvelope',
    'TabulatedFunction',
    'SteinContext',
    'Expectation',
    'builtin_function',
    'polynomial',
    'indicator',
    'monomial',
    'table',
    'forward_difference',
    'shift',
    'tau',
    'tau_power',
    'poisson_expectation',
    'stein_solution',
    'stein_solution_modified',
    'stein_residual',
    'characterization_gap',
    'default_grid_bound',
    'shifted_difference',
    'SolutionTree',
]

logger = logging.getLogger(__name__)

# relative slack when checking tabulated values against their envelope
ENVELOPE_SLACK = 1e-9

EPS = np.finfo(np.float64).eps

Expectation = namedtuple('Expectation', ['value', 'tail_bound'])


class GrowthEnvelope:
    """Certificate |g(x)| <= K * max(x, 1)^p for every x >= 0

    Parameters
    ----------
    K : float
        Nonnegative scale; zero only for the zero function.
    p : float
        Nonnegative growth exponent.
    """

    __slots__ = ('K', 'p')

    def __init__(self, K, p):
        if not (K >= 0 and math.isfinite(K)):
            raise BadParameter(f'envelope scale must be finite and '
                               f'nonnegative, got {K!r}')
        if not (p >= 0 and math.isfinite(p)):
            raise BadParameter(f'envelope exponent must be finite and '
                               f'nonnegative, got {p!r}')
        self.K = float(K)
        self.p = float(p)

    def __call__(self, x):
        return self.K * powers(np.maximum(x, 1), self.p)

    def holds_on(self, values):
        values = np.asarray(values, dtype=np.float64)
        bound = self(np.arange(values.size))
        return bool(np.all(np.abs(values) <= bound * (1 + ENVELOPE_SLACK)))

    def scaled(self, factor, p=None):
        return GrowthEnvelope(self.K * factor, self.p if p is None else p)

    def __eq__(self, other):
        return (
            isinstance(other, GrowthEnvelope) and
            (self.K, self.p) == (other.K, other.p)
        )

    def __repr__(self):
        return f'<GrowthEnvelope K={self.K:.6g} p={self.p:g}>'


class TabulatedFunction:
    """Values of a function on the integer grid 0..M with a growth envelope

    Parameters
    ----------
    values : array-like
        f(0), ..., f(M); at least two entries.
    envelope : GrowthEnvelope
        Must dominate every tabulated value, EnvelopeViolated otherwise.
    certificate : float, default 0
        Upper bound on the absolute error of the tabulated values, nonzero for
        functions obtained by truncated series (Stein solutions).
    measured : bool, default False
        Whether the envelope was measured on the grid rather than derived.
    label : str, default None
        Human readable description used in diagnostics.
    """

    __slots__ = ('_values', 'envelope', 'certificate', 'measured', 'label')

    def __init__(self, values, envelope, certificate=0.0, measured=False,
                 label=None):
        values = np.array(values, dtype=np.float64, ndmin=1)
        if values.ndim != 1:
            raise BadParameter('tabulated values must be one dimensional')
        if values.size < 2:
            raise GridTooShort('a tabulated function needs a grid bound of at '
                               'least 1', required=1,
                               available=values.size - 1)
        if not np.all(np.isfinite(values)):
            raise BadParameter('tabulated values must be finite')
        if not envelope.holds_on(values):
            bound = envelope(np.arange(values.size))
            worst = int(np.argmax(np.abs(values) - bound))
            raise EnvelopeViolated(
                f'|f({worst})| = {abs(values[worst]):.6g} exceeds the '
                f'envelope {envelope.K:.6g} * max(x, 1)^{envelope.p:g}'
            )
        values.setflags(write=False)
        self._values = values
        self.envelope = envelope
        self.certificate = float(certificate)
        self.measured = measured
        self.label = label

    @property
    def values(self):
        return self._values

    @property
    def grid_bound(self):
        return self._values.size - 1

    @property
    def grid(self):
        return np.arange(self._values.size)

    def __call__(self, x):
        if np.any(np.asarray(x) > self.grid_bound):
            raise GridTooShort(
                f'{self} evaluated beyond its grid bound {self.grid_bound}',
                required=int(np.max(x)), available=self.grid_bound
            )
        return self._values[x]

    def restrict(self, grid_bound):
        if grid_bound > self.grid_bound:
            raise GridTooShort(
                f'cannot extend {self} to grid bound {grid_bound}',
                required=grid_bound, available=self.grid_bound
            )
        return TabulatedFunction(self._values[:grid_bound + 1], self.envelope,
                                 certificate=self.certificate,
                                 measured=self.measured, label=self.label)

    def __repr__(self):
        label = self.label or 'f'
        return (f'<TabulatedFunction {label} on [0, {self.grid_bound}] '
                f'{self.envelope!r}>')


def _check_grid_bound(grid_bound):
    if not isinstance(grid_bound, numbers.Integral) or grid_bound < 1:
        raise GridTooShort(f'grid bound must be an integer >= 1, got '
                           f'{grid_bound!r}', required=1)


def polynomial(coefficients, grid_bound):
    """h(x) = sum_i c_i x^i, envelope (sum |c_i|, degree)"""
    _check_grid_bound(grid_bound)
    coefficients = np.trim_zeros(np.asarray(coefficients, dtype=np.float64),
                                 'b')
    grid = np.arange(grid_bound + 1, dtype=np.float64)
    if coefficients.size == 0:
        return TabulatedFunction(np.zeros_like(grid), GrowthEnvelope(0, 0),
                                 label='0')
    # np.polyval wants the leading coefficient first
    values = np.polyval(coefficients[::-1], grid)
    envelope = GrowthEnvelope(np.abs(coefficients).sum(),
                              coefficients.size - 1)
    terms = ' + '.join(f'{c:g}x^{i}' for i, c in enumerate(coefficients) if c)
    return TabulatedFunction(values, envelope, label=terms)


def indicator(points, grid_bound):
    """h(x) = 1 if x belongs to `points`, envelope (1, 0)"""
    _check_grid_bound(grid_bound)
    values = np.zeros(grid_bound + 1)
    points = sorted(set(int(x) for x in points))
    for x in points:
        if x < 0:
            raise BadParameter(
                f'indicator points must be nonnegative, got {x}')
        if x <= grid_bound:
            values[x] = 1.0
    label = '1{' + ','.join(map(str, points)) + '}'
    return TabulatedFunction(values, GrowthEnvelope(1, 0), label=label)


def monomial(power, grid_bound):
    """h(x) = x^power with 0^0 = 1, envelope (1, power)"""
    _check_grid_bound(grid_bound)
    if power < 0:
        raise BadParameter(f'monomial power must be nonnegative, got {power}')
    values = powers(np.arange(grid_bound + 1), power)
    return TabulatedFunction(values, GrowthEnvelope(1, power),
                             label=f'x^{power:g}')


def table(values, envelope):
    """Raw table with a user supplied envelope, checked on the grid"""
    if not isinstance(envelope, GrowthEnvelope):
        envelope = GrowthEnvelope(*envelope)
    return TabulatedFunction(values, envelope, label='table')


_builtins = {
    'polynomial': lambda grid_bound, coefficients: polynomial(coefficients,
                                                              grid_bound),
    'indicator': lambda grid_bound, points: indicator(points, grid_bound),
    'monomial': lambda grid_bound, power: monomial(power, grid_bound),
    'table': lambda grid_bound, values, envelope: table(
        values[:grid_bound + 1] if grid_bound else values, envelope
    ),
}


def builtin_function(kind, grid_bound, **params):
    """Tabulate one of the builtin test functions

    Parameters
    ----------
    kind : str
        One of 'polynomial' (coefficients), 'indicator' (points),
        'monomial' (power) or 'table' (values, envelope).
    grid_bound : int
        Last grid point M; for tables it truncates the supplied values.
    """
    try:
        factory = _builtins[kind]
    except KeyError:
        raise BadParameter(f'unknown function kind `{kind}`, expected one of '
                           f'{", ".join(sorted(_builtins))}') from None
    return factory(grid_bound, **params)


def forward_difference(f, k):
    """k-th forward difference on the grid 0..M-k

    The envelope becomes (2^k (1+k)^p K, p): each of the 2^k binomially
    weighted terms is evaluated at most k points further out.
    """
    if not isinstance(k, numbers.Integral) or k < 0:
        raise BadParameter(f'difference order must be a nonnegative integer, '
                           f'got {k!r}')
    if k == 0:
        return f
    if f.grid_bound < k + 1:
        raise GridTooShort(
            f'{k}-th difference of {f} needs a grid bound of at least {k + 1}',
            required=k + 1, available=f.grid_bound
        )
    env = f.envelope
    envelope = env.scaled(2 ** k * (1 + k) ** env.p)
    label = f'D^{k}({f.label})' if f.label else None
    return TabulatedFunction(np.diff(f.values, n=k), envelope,
                             certificate=2 ** k * f.certificate,
                             measured=f.measured, label=label)


def shift(f):
    """g(x) = f(x + 1) on the grid 0..M-1, envelope (2^p K, p)"""
    if f.grid_bound < 2:
        raise GridTooShort(f'shifting {f} needs a grid bound of at least 2',
                           required=2, available=f.grid_bound)
    envelope = f.envelope.scaled(2 ** f.envelope.p)
    label = f'{f.label}(x+1)' if f.label else None
    return TabulatedFunction(f.values[1:], envelope,
                             certificate=f.certificate, measured=f.measured,
                             label=label)


def tau(f):
    """g(x) = f(x + 1) / (x + 1), envelope (2^p K, max(p - 1, 0))"""
    if f.grid_bound < 2:
        raise GridTooShort(f'tau of {f} needs a grid bound of at least 2',
                           required=2, available=f.grid_bound)
    env = f.envelope
    envelope = env.scaled(2 ** env.p, p=max(env.p - 1, 0))
    values = f.values[1:] / np.arange(1, f.grid_bound + 1)
    label = f'tau({f.label})' if f.label else None
    return TabulatedFunction(values, envelope, certificate=f.certificate,
                             measured=f.measured, label=label)


def tau_power(f, k):
    for _ in range(k):
        f = tau(f)
    return f


def _check_lambda(lam):
    if not (lam > 0 and math.isfinite(lam)):
        raise BadParameter(f'Poisson mean must be positive, got {lam!r}')


def _tail_ratio(lam, first, p):
    # bound on term(x + 1) / term(x) for x >= first of lam^x / x! * x^p
    return lam / (first + 1) * ((first + 1) / first) ** p


def poisson_expectation(f, lam, tail_tol):
    """P_lam(f) truncated where the certified tail drops below tail_tol

    The omitted tail sum_{x > M'} e^-lam lam^x / x! K x^p is dominated by a
    geometric series once consecutive terms shrink by at least half, so it
    is at most 2 (or 1 / (1 - ratio)) times the first omitted term.

    Returns
    -------
    Expectation(value, tail_bound)
    """
    _check_lambda(lam)
    K, p = f.envelope.K, f.envelope.p
    masses = stats.poisson.pmf(np.arange(f.grid_bound + 2), lam)

    for cut in range(f.grid_bound + 1):
        first = cut + 1
        ratio = _tail_ratio(lam, first, p)
        if ratio > 0.5:
            continue
        tail = masses[first] * K * first ** p / (1 - ratio)
        if tail < tail_tol:
            value = float(np.dot(masses[:first], f.values[:first]))
            logger.debug('Poisson(%g) expectation of %s truncated at %d, '
                         'tail <= %.3g', lam, f, cut, tail)
            return Expectation(value, float(tail))

    raise GridTooShort(
        f'Poisson({lam:g}) expectation of {f} cannot be certified below '
        f'{tail_tol:g} within the grid', available=f.grid_bound
    )


def _check_room(h, lam):
    ratio = _tail_ratio(lam, h.grid_bound + 1, h.envelope.p)
    if ratio > 0.5:
        raise TailNotCertified(
            f'grid bound {h.grid_bound} of {h} is too small for '
            f'Poisson({lam:g}): the series tail does not decay geometrically '
            f'yet'
        )
    return ratio


def _propagation_weights(lam, M, upwards):
    """Bounds on the factor turning a uniform error in h into one of f(x)

    The exact factors are (x-1)!/lam^x times sum_{i>=x} lam^i/i!, or
    sum_{i<x} for the points built upwards (x <= lam).
    """
    x = np.arange(1, M + 1, dtype=np.float64)
    weights = np.empty(M)
    above = x > lam
    # geometric domination of the upper sum once lam / (x+1) < 1
    weights[above] = (x[above] + 1) / (x[above] * (x[above] + 1 - lam))
    below = ~above
    if upwards:
        weights[below] = x[below] / lam
    else:
        weights[below] = np.exp(gammaln(x[below]) - x[below] * np.log(lam) +
                                lam)
    return weights


def _solve(h, lam, tail_tol, center=None, center_error=0.0, label=None):
    M = h.grid_bound
    K, p = h.envelope.K, h.envelope.p
    ratio = _check_room(h, lam)
    centered = h.values - (center or 0.0)

    # |f(M+1)| for the exact solution, which the backward recursion
    # replaces by 0
    start = (K * (M + 1) ** p + abs(center or 0.0)) / ((M + 1) * (1 - ratio))

    # the backward recursion multiplies errors by lam / x > 1 below lam, so
    # there the centered solution is built upwards from the lower sum
    # f(x) = -(x-1)!/lam^x sum_{i<x} lam^i/i! (h(i) - P_lam(h)),
    # which needs the equation at x = 0 as well
    lower = 0 if center is None else min(int(math.floor(lam)), M - 1)

    solution = np.zeros(M + 2)
    for x in range(M, lower, -1):
        solution[x] = (centered[x] + lam * solution[x + 1]) / x
    if lower:
        solution[1] = -centered[0] / lam
        for x in range(1, lower):
            solution[x + 1] = (x * solution[x] - centered[x]) / lam

    # the error at M+1 is damped by lam / x at every step down to x
    x = np.arange(1, M + 1)
    if start > 0:
        truncation = np.exp((M + 1 - x) * np.log(lam) + gammaln(x) -
                            gammaln(M + 1) + np.log(start))
    else:
        truncation = np.zeros(M)
    truncation[:lower] = 0.0

    weights = _propagation_weights(lam, M, upwards=bool(lower))
    # the centering inherits the errors of h as well
    inherited = h.certificate * (1 if center is None else 2)
    added = truncation + weights * center_error
    error = added + weights * inherited

    within = added < tail_tol
    if not within[lower]:
        raise TailNotCertified(
            f'the Stein solution of {h} for Poisson({lam:g}) cannot be '
            f'certified below {tail_tol:g} on a grid bounded by {M}'
        )
    out = M if within.all() else int(np.argmin(within))
    if out < 1:
        raise TailNotCertified(
            f'the Stein solution of {h} is certified on [0, {out}] only'
        )

    values = solution[:out + 1]
    scale = powers(np.maximum(np.arange(out + 1), 1), p)
    measured_K = 2 * float(np.max(np.abs(values) / scale))
    logger.debug('Stein solution of %s for Poisson(%g) certified on [0, %d] '
                 '(input grid %d, built upwards to %d)', h, lam, out, M,
                 lower)
    return TabulatedFunction(values, GrowthEnvelope(measured_K, p),
                             certificate=float(error[:out].max()),
                             measured=True, label=label)


def stein_solution(h, lam, tail_tol):
    """Solution f_h of x f(x) - lam f(x+1) = h(x) - P_lam(h)

    Above lam the polynomially growing solution is obtained by the backward
    recursion f(x) = (h(x) - P_lam(h) + lam f(x+1)) / x started from
    f(M+1) = 0; the error this start introduces shrinks by lam / x at each
    step. Up to lam it is built upwards from f(1) = -(h(0) - P_lam(h)) / lam,
    where errors shrink by x / lam instead. The output grid is cut where the
    certified error is still below tail_tol. f_h(0) is set to 0 and never
    used.

    Raises
    ------
    TailNotCertified
        If the grid of h is too short to certify the series tails, or the
        errors of the centering cannot be kept below tail_tol.
    """
    _check_lambda(lam)
    _check_room(h, lam)
    try:
        # centering errors reach f with weights of at most 2
        expectation = poisson_expectation(h, lam, tail_tol / 4)
    except GridTooShort as e:
        raise TailNotCertified(
            f'the Stein solution of {h} for Poisson({lam:g}) cannot be '
            f'centered: {e}'
        ) from e
    # rounding of the truncated dot product
    masses = stats.poisson.pmf(h.grid, lam)
    rounding = EPS * h.values.size * float(np.dot(masses, np.abs(h.values)))
    label = f'f[{h.label}]' if h.label else None
    return _solve(h, lam, tail_tol, center=expectation.value,
                  center_error=expectation.tail_bound + rounding, label=label)


def stein_solution_modified(h, lam, tail_tol):
    """Polynomially growing solution of x f(x) - lam f(x+1) = h(x), x >= 1"""
    _check_lambda(lam)
    label = f'g[{h.label}]' if h.label else None
    return _solve(h, lam, tail_tol, label=label)


def stein_residual(f, h, lam, center=None):
    """x f(x) - lam f(x+1) - (h(x) - center) on 1..M_f - 1

    `center` defaults to 0, i.e. the residual of the modified equation;
    pass P_lam(h) for the centered one.
    """
    center = 0.0 if center is None else center
    x = np.arange(1, f.grid_bound)
    return x * f.values[1:-1] - lam * f.values[2:] - (h.values[x] - center)


def characterization_gap(pmf, f, lam):
    """E[Z f(Z)] - lam E[f(Z + 1)], zero when Z is Poisson(lam)"""
    s = pmf.support_bound
    if f.grid_bound < s + 1:
        raise GridTooShort(f'{f} must cover [0, {s + 1}]', required=s + 1,
                           available=f.grid_bound)
    support = pmf.support
    lhs = np.dot(pmf.probs, support * f.values[:s + 1])
    rhs = lam * np.dot(pmf.probs, f.values[1:s + 2])
    return float(lhs - rhs)


def default_grid_bound(lambda_w, support, order, p):
    """Default tabulation grid for an expansion of the given order

    Covers the support of W, the bulk of the Poisson(lambda_w) mass and the
    shrinkage by differences, plus room for each of the order + 1 nested
    Stein solutions, which trim their certified grid.
    """
    base = max(32, math.ceil(4 * lambda_w + 8 * (order + p) + support))
    return int(base + 16 * (order + 1))


class SteinContext:
    """Poisson parameter, truncation tolerance and grid shared by a problem

    Parameters
    ----------
    lam : float
        Poisson mean (lambda_W when applied to a sum W).
    tail_tol : float
        Target for every certified truncation remainder.
    grid_bound : int
        Grid bound M used to tabulate test functions.
    """

    __slots__ = ('lam', 'tail_tol', 'grid_bound')

    def __init__(self, lam, tail_tol, grid_bound):
        _check_lambda(lam)
        _check_grid_bound(grid_bound)
        if not tail_tol > 0:
            raise BadParameter(f'tail tolerance must be positive, got '
                               f'{tail_tol!r}')
        first = grid_bound + 1
        ratio = _tail_ratio(lam, first, 0)
        tail = stats.poisson.sf(grid_bound, lam)
        if ratio > 0.5 or tail >= tail_tol:
            raise TailNotCertified(
                f'grid bound {grid_bound} leaves Poisson({lam:g}) tail mass '
                f'{tail:.3g}, above the tolerance {tail_tol:g}'
            )
        self.lam = float(lam)
        self.tail_tol = float(tail_tol)
        self.grid_bound = int(grid_bound)

    def tabulate(self, kind, **params):
        return builtin_function(kind, self.grid_bound, **params)

    def expectation(self, f):
        return poisson_expectation(f, self.lam, self.tail_tol)

    def solve(self, h):
        return stein_solution(h, self.lam, self.tail_tol)

    def solve_modified(self, h):
        return stein_solution_modified(h, self.lam, self.tail_tol)

    def __repr__(self):
        return (f'<SteinContext lambda={self.lam:g} tail_tol='
                f'{self.tail_tol:g} grid_bound={self.grid_bound}>')


def shifted_difference(f, k):
    """D^k f(x + 1), the argument handed down by the expansion recursion"""
    return forward_difference(shift(f), k)


class SolutionTree:
    """Memo of the functions visited by the expansion recursion

    The node reached by the path (j_1, ..., j_r) holds
    g = D^{j_r} f_{g'}(x + 1) where g' is the node of (j_1, ..., j_{r-1})
    and the root holds h itself. Keys are whole paths: the Stein solution
    does not commute with D, so paths with equal sums differ.
    """

    def __init__(self, h, context):
        self.context = context
        self._functions = {(): h}
        self._solutions = {}
        self._expectations = {}

    @property
    def root(self):
        return self._functions[()]

    def function(self, path):
        path = tuple(path)
        if path not in self._functions:
            parent = self.solution(path[:-1])
            self._functions[path] = shifted_difference(parent, path[-1])
        return self._functions[path]

    def solution(self, path):
        path = tuple(path)
        if path in self._solutions:
            logger.debug('Reusing the Stein solution of node %s', path)
        else:
            self._solutions[path] = self.context.solve(self.function(path))
        return self._solutions[path]

    def shifted_solution(self, path, k=0):
        return shifted_difference(self.solution(path), k)

    def expectation(self, path):
        path = tuple(path)
        if path not in self._expectations:
            value = self.context.expectation(self.function(path)).value
            self._expectations[path] = value
        return self._expectations[path]

    def certificates(self):
        """Certified errors of every Stein solution computed so far"""
        return {path: f.certificate for path, f in self._solutions.items()}

    def __len__(self):
        return len(self._functions)
