# Use of this source code is governed by a BSD 2-Clause
# license that can be found in the LICENSE file.

import logging
import numbers
from functools import reduce

import numpy as np
from scipy import stats

from .errors import (AllZero, NegativeWeight, BadParameter, ZeroMean,
                     DistributionError, GridTooShort)
from .utils import binomial_coefficients, powers

__all__ = [
    'FinitePmf',
    'MomentKey',
    'pmf_from_weights',
    'pmf_point_mass',
    'pmf_bernoulli',
    'pmf_binomial',
    'pmf_poisson_truncated',
    'pmf_geometric_truncated',
    'convolve',
    'convolve_all',
    'zero_bias',
    'binom_moment',
    'binom_moment_product',
    'raw_moment',
]

logger = logging.getLogger(__name__)

NORMALIZATION_TOL = 1e-12


class FinitePmf:
    """Probability mass function on {0, 1, ..., s}

    Instances are immutable: the probabilities are kept in a read-only numpy
    array whose last entry is positive (unless s == 0), so `support_bound`
    is canonical. Use the `pmf_*` constructors rather than instantiating
    directly; they normalize and trim.

    Parameters
    ----------
    probs : array-like
        Nonnegative masses indexed by 0..s, summing to 1 within 1e-12.
    """

    __slots__ = ('_probs', '_mean')

    def __init__(self, probs):
        probs = np.array(probs, dtype=np.float64, ndmin=1)
        if probs.ndim != 1 or probs.size == 0:
            raise DistributionError('probabilities must form a non-empty '
                                    'one dimensional sequence')
        if not np.all(np.isfinite(probs)):
            raise DistributionError('probabilities must be finite')
        if np.any(probs < 0):
            raise NegativeWeight('probabilities must be nonnegative')
        total = probs.sum()
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise DistributionError(
                f'probabilities sum to {total!r} instead of 1'
            )
        if probs.size > 1 and probs[-1] == 0:
            raise DistributionError('trailing probability must be positive, '
                                    'trim the support first')
        probs.setflags(write=False)
        self._probs = probs
        self._mean = float(np.dot(np.arange(probs.size), probs))

    @property
    def probs(self):
        return self._probs

    @property
    def mean(self):
        return self._mean

    @property
    def support_bound(self):
        return self._probs.size - 1

    @property
    def support(self):
        return np.arange(self._probs.size)

    @property
    def variance(self):
        return raw_moment(self, 2) - self._mean ** 2

    def pmf(self, x):
        if 0 <= x <= self.support_bound:
            return float(self._probs[x])
        return 0.0

    def expect(self, g):
        """E[g(X)] for a tabulated function or a vectorizable callable"""
        values = getattr(g, 'values', None)
        if values is None:
            values = np.asarray(g(self.support), dtype=np.float64)
        else:
            if g.grid_bound < self.support_bound:
                raise GridTooShort(
                    f'function is tabulated on [0, {g.grid_bound}] but the '
                    f'support reaches {self.support_bound}',
                    required=self.support_bound, available=g.grid_bound
                )
            values = values[:self._probs.size]
        return float(np.dot(self._probs, values))

    def allclose(self, other, atol=1e-12):
        size = max(self._probs.size, other.probs.size)
        a = np.zeros(size)
        b = np.zeros(size)
        a[:self._probs.size] = self._probs
        b[:other.probs.size] = other.probs
        return bool(np.all(np.abs(a - b) <= atol))

    def __eq__(self, other):
        if not isinstance(other, FinitePmf):
            return NotImplemented
        return np.array_equal(self._probs, other.probs)

    def __hash__(self):
        return hash(self._probs.tobytes())

    def __len__(self):
        return self._probs.size

    def __repr__(self):
        masses = ', '.join(f'{x}: {p:.6g}' for x, p in enumerate(self._probs))
        return f'<FinitePmf {{{masses}}} mean={self._mean:.6g}>'


class MomentKey:
    """Order of a binomial moment with an optional polynomial weight

    Selects E[C(Y, k) * Y^p]; p == 0 is the plain binomial moment.
    """

    __slots__ = ('k', 'p')

    def __init__(self, k, p=0.0):
        if not isinstance(k, numbers.Integral) or k < 0:
            raise BadParameter(f'moment order must be a nonnegative integer, '
                               f'got {k!r}')
        if p < 0:
            raise BadParameter(f'moment weight must be nonnegative, got {p!r}')
        self.k = int(k)
        self.p = float(p)

    def __eq__(self, other):
        return (
            isinstance(other, MomentKey) and
            (self.k, self.p) == (other.k, other.p)
        )

    def __hash__(self):
        return hash((self.k, self.p))

    def __repr__(self):
        return f'<MomentKey k={self.k} p={self.p}>'


def _trimmed(probs):
    nonzero = np.flatnonzero(probs)
    if nonzero.size == 0:
        raise AllZero('every weight is zero')
    return probs[:nonzero[-1] + 1]


def pmf_from_weights(weights):
    """Normalize nonnegative weights into a FinitePmf

    Trailing zero weights are dropped so the support bound is canonical.
    """
    weights = np.array(weights, dtype=np.float64, ndmin=1)
    if np.any(weights < 0):
        raise NegativeWeight('weights must be nonnegative')
    if not np.all(np.isfinite(weights)):
        raise BadParameter('weights must be finite')
    weights = _trimmed(weights)
    return FinitePmf(weights / weights.sum())


def pmf_point_mass(value=0):
    if not isinstance(value, numbers.Integral) or value < 0:
        raise BadParameter(f'point mass location must be a nonnegative '
                           f'integer, got {value!r}')
    probs = np.zeros(int(value) + 1)
    probs[-1] = 1.0
    return FinitePmf(probs)


def _check_probability(p):
    if not 0 < p < 1:
        raise BadParameter(f'success probability must lie in (0, 1), '
                           f'got {p!r}')


def _check_tail_tol(tail_tol):
    if not 0 < tail_tol < 1:
        raise BadParameter(f'tail tolerance must lie in (0, 1), '
                           f'got {tail_tol!r}')


def pmf_bernoulli(p):
    _check_probability(p)
    return FinitePmf([1.0 - p, p])


def pmf_binomial(n, p):
    _check_probability(p)
    if not isinstance(n, numbers.Integral) or n < 1:
        raise BadParameter(f'number of trials must be a positive integer, '
                           f'got {n!r}')
    probs = stats.binom.pmf(np.arange(n + 1), n, p)
    return pmf_from_weights(probs)


def pmf_poisson_truncated(lam, tail_tol=1e-12):
    """Poisson(lam) cut at the least M with P(X > M) < tail_tol

    The retained masses are renormalized, so the result is an exact
    FinitePmf whose mean differs from lam by less than ~tail_tol * M.
    """
    if not lam > 0:
        raise BadParameter(f'Poisson mean must be positive, got {lam!r}')
    _check_tail_tol(tail_tol)

    bound = 0
    while stats.poisson.sf(bound, lam) >= tail_tol:
        bound += 1
    logger.debug('Truncating Poisson(%g) at %d (tail tolerance %g)',
                 lam, bound, tail_tol)
    return pmf_from_weights(stats.poisson.pmf(np.arange(bound + 1), lam))


def pmf_geometric_truncated(p, tail_tol=1e-12):
    """Geometric law P(X=x) = (1-p)^x p on {0, 1, ...}, truncated

    The support bound is the least M with (1-p)^(M+1) < tail_tol.
    """
    _check_probability(p)
    _check_tail_tol(tail_tol)

    bound = int(np.ceil(np.log(tail_tol) / np.log1p(-p))) - 1
    bound = max(bound, 0)
    while (1 - p) ** (bound + 1) >= tail_tol:
        bound += 1
    while bound > 0 and (1 - p) ** bound < tail_tol:
        bound -= 1
    support = np.arange(bound + 1)
    return pmf_from_weights(p * (1 - p) ** support)


def convolve(a, b):
    """Law of the sum of two independent variables"""
    return FinitePmf(_normalized(np.convolve(a.probs, b.probs)))


def convolve_all(pmfs):
    return reduce(convolve, pmfs, pmf_point_mass(0))


def _normalized(probs):
    probs = _trimmed(np.clip(probs, 0.0, None))
    return probs / probs.sum()


def zero_bias(x):
    """Poisson zero-biased law: P(X* = y) = (y + 1) P(X = y + 1) / E[X]"""
    lam = x.mean
    if lam <= 0:
        raise ZeroMean('zero bias transform needs a positive mean')
    if x.support_bound == 0:
        raise ZeroMean('zero bias transform needs a positive mean')
    probs = np.arange(1, x.support_bound + 1) * x.probs[1:] / lam
    return FinitePmf(_normalized(probs))


def binom_moment(y, key):
    """E[C(Y, k) * Y^p] with C(y, k) = 0 for y < k and 0^0 = 1"""
    if not isinstance(key, MomentKey):
        key = MomentKey(*key) if isinstance(key, tuple) else MomentKey(key)
    weights = binomial_coefficients(y.support, key.k)
    if key.p:
        weights = weights * powers(y.support, key.p)
    return float(np.dot(y.probs, weights))


def binom_moment_product(y, j):
    """Product of the binomial moments m_Y^(j_1) ... m_Y^(j_d)

    `j` is a Composition or any sequence of positive parts; the empty
    composition gives 1.
    """
    parts = getattr(j, 'parts', j)
    result = 1.0
    for part in parts:
        result *= binom_moment(y, MomentKey(part))
    return result


def raw_moment(x, p):
    """E[X^p] with 0^0 = 1"""
    if p < 0:
        raise BadParameter(f'moment exponent must be nonnegative, got {p!r}')
    return float(np.dot(x.probs, powers(x.support, p)))
