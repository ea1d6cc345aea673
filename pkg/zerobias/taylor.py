# Use of this source code is governed by a BSD 2-Clause
# license that can be found in the LICENSE file.

import math
import numbers
import itertools
from collections import namedtuple

import numpy as np
import toolz

from .distributions import MomentKey, binom_moment, convolve
from .errors import BadParameter, GridTooShort
from .stein import forward_difference
from .utils import binomial_coefficients

__all__ = [
    'Composition',
    'enumerate_compositions',
    'compositions_of',
    'alternating_moment_sums',
    'delta_remainder',
    'taylor_expand',
    'epsilon_remainder',
    'reverse_taylor_expand',
    'zero_bias_weights',
    'TaylorExpansion',
]

TaylorExpansion = namedtuple('TaylorExpansion', ['main', 'remainder'])


class Composition:
    """Ordered tuple of positive integers J = (j_1, ..., j_d)

    `head` is J without its last part and `last` is its last part; both are
    undefined for the empty composition.
    """

    __slots__ = ('parts',)

    def __init__(self, parts=()):
        parts = tuple(parts)
        for part in parts:
            if not isinstance(part, numbers.Integral) or part < 1:
                raise BadParameter(f'composition parts must be positive '
                                   f'integers, got {parts!r}')
        self.parts = tuple(int(part) for part in parts)

    @property
    def total(self):
        return sum(self.parts)

    @property
    def length(self):
        return len(self.parts)

    @property
    def sign(self):
        return -1 if len(self.parts) % 2 else 1

    @property
    def head(self):
        if not self.parts:
            raise ValueError('the empty composition has no head')
        return Composition(self.parts[:-1])

    @property
    def last(self):
        if not self.parts:
            raise ValueError('the empty composition has no last part')
        return self.parts[-1]

    def __bool__(self):
        return bool(self.parts)

    def __iter__(self):
        return iter(self.parts)

    def __len__(self):
        return len(self.parts)

    def __eq__(self, other):
        return isinstance(other, Composition) and self.parts == other.parts

    def __lt__(self, other):
        return (self.total, self.parts) < (other.total, other.parts)

    def __hash__(self):
        return hash(self.parts)

    def __repr__(self):
        return f'Composition{self.parts!r}'


def compositions_of(total):
    """All compositions of exactly `total`, lexicographically ordered"""
    if total == 0:
        return [Composition()]
    result = []
    for length in range(1, total + 1):
        for cuts in itertools.combinations(range(1, total), length - 1):
            bounds = (0,) + cuts + (total,)
            result.append(Composition(b - a for a, b in toolz.sliding_window(
                2, bounds
            )))
    return sorted(result, key=lambda c: c.parts)


def enumerate_compositions(n_max):
    """Every composition with total at most n_max, the empty one included

    There are 2^n_max of them, ordered by increasing total.
    """
    if not isinstance(n_max, numbers.Integral) or n_max < 0:
        raise BadParameter(f'n_max must be a nonnegative integer, got '
                           f'{n_max!r}')
    return list(toolz.concat(compositions_of(m) for m in range(n_max + 1)))


def alternating_moment_sums(y, n_max):
    """sum over |J| = j of (-1)^d m_Y^(J), for j = 0..n_max"""
    moments = {}

    def product(composition):
        result = 1.0
        for part in composition:
            if part not in moments:
                moments[part] = binom_moment(y, MomentKey(part))
            result *= moments[part]
        return result

    return [
        math.fsum(c.sign * product(c) for c in compositions_of(j))
        for j in range(n_max + 1)
    ]


def _check_order(order):
    if not isinstance(order, numbers.Integral) or order < 0:
        raise BadParameter(f'expansion order must be a nonnegative integer, '
                           f'got {order!r}')


def delta_remainder(f, order, x, y):
    """Remainder of the discrete Taylor formula of the given order

    E[sum_{0 <= j_1 < ... < j_{n+1} < Y} D^{n+1} f(X + j_1)], evaluated with
    the count C(y - 1 - j_1, n) of admissible tails for each first index.
    """
    _check_order(order)
    if y.support_bound <= order:
        # no strictly increasing (order+1)-tuple fits below Y
        return 0.0

    required = x.support_bound + y.support_bound
    if f.grid_bound < required:
        raise GridTooShort(
            f'remainder of order {order} needs {f} on [0, {required}]',
            required=required, available=f.grid_bound
        )
    diff = forward_difference(f, order + 1).values

    # kernel[j] = E[C(Y - 1 - j, order)], the weight of D^{n+1} f(X + j)
    width = y.support_bound - order
    kernel = np.array([
        np.dot(y.probs, binomial_coefficients(y.support - 1 - j, order))
        for j in range(width)
    ])
    inner = np.array([
        np.dot(kernel, diff[s:s + width]) for s in range(x.support_bound + 1)
    ])
    return float(np.dot(x.probs, inner))


def taylor_expand(f, order, x, y):
    """E[f(X + Y)] = sum_k m_Y^(k) E[D^k f(X)] + remainder"""
    _check_order(order)
    terms = []
    for k in range(order + 1):
        moment = binom_moment(y, MomentKey(k))
        if moment == 0:
            continue
        terms.append(moment * x.expect(forward_difference(f, k)))
    return TaylorExpansion(math.fsum(terms), delta_remainder(f, order, x, y))


def epsilon_remainder(f, order, x, y):
    """Remainder of the reverse Taylor formula of the given order

    Minus the alternating composition sum of the Taylor remainders
    delta_{n-|J|}(D^{|J|} f, X, Y) weighted by m_Y^(J).
    """
    _check_order(order)
    if y.support_bound == 0:
        return 0.0
    weights = alternating_moment_sums(y, order)
    terms = []
    for j, weight in enumerate(weights):
        if weight == 0:
            continue
        terms.append(weight * delta_remainder(forward_difference(f, j),
                                              order - j, x, y))
    return -math.fsum(terms)


def reverse_taylor_expand(f, order, x, y, xy=None):
    """E[f(X)] = sum_J (-1)^d m_Y^(J) E[D^|J| f(X + Y)] + remainder

    `xy` is the law of X + Y, computed by convolution when omitted.
    """
    _check_order(order)
    if xy is None:
        xy = convolve(x, y)
    weights = alternating_moment_sums(y, order)
    terms = [
        weight * xy.expect(forward_difference(f, j))
        for j, weight in enumerate(weights) if weight != 0
    ]
    return TaylorExpansion(math.fsum(terms),
                           epsilon_remainder(f, order, x, y))


def zero_bias_weights(x, x_star, n_max, absolute=False):
    """Composition weights coupling X with its zero-biased version X*

    For j = 1..n_max returns the sum over compositions J with |J| = j of
    (-1)^(d-1) m_X^(J°) (m_X*^(J†) - m_X^(J†)). With `absolute` the sign is
    dropped and the difference becomes a sum, as the recursive error
    estimate needs. Index 0 is always 0.
    """
    moments = [binom_moment(x, MomentKey(k)) for k in range(n_max + 1)]
    biased = [binom_moment(x_star, MomentKey(k)) for k in range(n_max + 1)]

    def weight(composition):
        head = 1.0
        for part in composition.head:
            head *= moments[part]
        last = composition.last
        if absolute:
            return head * (biased[last] + moments[last])
        return -composition.sign * head * (biased[last] - moments[last])

    weights = [0.0]
    for j in range(1, n_max + 1):
        weights.append(math.fsum(weight(c) for c in compositions_of(j)))
    return weights
