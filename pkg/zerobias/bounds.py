# Use of this source code is governed by a BSD 2-Clause
# license that can be found in the LICENSE file.

import math
import logging
import numbers
from collections import namedtuple
from typing import List

import numpy as np

from .distributions import (MomentKey, binom_moment, binom_moment_product,
                            raw_moment)
from .errors import BadParameter, GridTooShort
from .stein import SolutionTree, SteinContext
from .taylor import compositions_of, zero_bias_weights
from .utils import Annotable, powers

__all__ = [
    'NormEstimate',
    'BoundReport',
    'seminorm',
    'growth_factor',
    'bound_label',
    'delta_bound',
    'epsilon_bound',
    'e0_bound',
    'recursive_e_bound',
    'expansion_bound',
]

logger = logging.getLogger(__name__)

NormEstimate = namedtuple(
    'NormEstimate', ['value', 'p', 'order', 'measured_on', 'exact']
)


class BoundReport(Annotable):
    """Estimate of |e_N(h)| with the seminorms it rests on

    `exact` holds when every seminorm behind the value showed a decaying
    tail on its grid ("grid-certified"); otherwise the supremum was only
    measured on the grid ("grid-measured").
    """
    order: int
    value: float
    norms: List[NormEstimate] = []

    @property
    def exact(self):
        return all(norm.exact for norm in self.norms)

    @property
    def label(self):
        return bound_label(self.exact)


def bound_label(exact):
    return 'grid-certified' if exact else 'grid-measured'


def growth_factor(p):
    """max(2^(p-1), 1), from (a + b)^p <= factor * (a^p + b^p)"""
    return max(2.0 ** (p - 1), 1.0)


def seminorm(f, order, p):
    """sup_{x >= 1} |D^{order+1} f(x)| / x^p, measured on the grid

    The maximum is taken over x in [1, M - order - 1]. The estimate is
    flagged exact when the ratio does not increase over the last quarter
    of that range, or vanishes altogether.
    """
    if not isinstance(order, numbers.Integral) or order < 0:
        raise BadParameter(f'seminorm order must be a nonnegative integer, '
                           f'got {order!r}')
    if p < 0:
        raise BadParameter(f'seminorm exponent must be nonnegative, got {p!r}')
    M = f.grid_bound
    if M < order + 3:
        raise GridTooShort(
            f'seminorm of order {order} needs a grid bound of at least '
            f'{order + 3}', required=order + 3, available=M
        )

    diff = np.diff(f.values, n=order + 1)[1:]
    x = np.arange(1, diff.size + 1)
    ratios = np.abs(diff) / powers(x, p)
    value = float(ratios.max())

    tail = ratios[-max(ratios.size // 4, 2):]
    exact = value == 0 or bool(np.all(np.diff(tail) <= 1e-12 * value))
    return NormEstimate(value, float(p), int(order), (1, int(diff.size)),
                        exact)


def _norm_value(f_norm):
    return getattr(f_norm, 'value', f_norm)


def _check_k(order, k):
    if not (isinstance(k, numbers.Integral) and 0 <= k <= order):
        raise BadParameter(f'k must be an integer in [0, {order}], got {k!r}')


def _moment_block(x, y, m, p):
    # E[X^p] m_Y^(m) + m_Y^(m),p
    return (raw_moment(x, p) * binom_moment(y, MomentKey(m)) +
            binom_moment(y, MomentKey(m, p)))


def delta_bound(f_norm, x, y, order, k, p):
    """Bound on |delta_{N-k}(D^k f(x+1), X, Y)| given ||f||_{N,p}"""
    _check_k(order, k)
    value = _norm_value(f_norm)
    if value == 0:
        return 0.0
    return growth_factor(p) * value * _moment_block(x, y, order - k + 1, p)


def epsilon_bound(f_norm, x, y, order, k, p):
    """Bound on |eps_{N-k}(D^k f(x+1), X, Y)| given ||f||_{N,p}

    Every delta term of the reverse Taylor remainder is bounded separately,
    weighted by m_Y^(J) for J running over the compositions with
    |J| <= N - k.
    """
    _check_k(order, k)
    value = _norm_value(f_norm)
    if value == 0:
        return 0.0
    n = order - k
    terms = []
    for total in range(n + 1):
        weight = math.fsum(binom_moment_product(y, c)
                           for c in compositions_of(total))
        if weight == 0:
            continue
        terms.append(weight * _moment_block(x, y, n - total + 1, p))
    return growth_factor(p) * value * math.fsum(terms)


class _RecursiveBound:
    """Walks the solution tree bounding e_n(g) at every node

    Inner remainders are bounded by recursion as well, never by their
    exact values, and each inner Stein solution gets its own seminorm.
    """

    def __init__(self, model, tree, order, p):
        self.model = model
        self.tree = tree
        self.p = p
        self.norms = []
        self._memo = {}
        self._weights = [
            zero_bias_weights(x, xs, order, absolute=True)
            for x, xs in zip(model.components, model.zero_biased)
        ]

    def __call__(self, path, n):
        key = (tuple(path), n)
        if key not in self._memo:
            if n == 0:
                self._memo[key] = self._base(path)
            else:
                self._memo[key] = self._step(path, n)
        return self._memo[key]

    def _members(self):
        model = self.model
        return zip(model.lambdas, model.components, model.zero_biased,
                   model.leave_one_out)

    def _base(self, path):
        p = self.p
        norm = seminorm(self.tree.solution(path), 0, p)
        self.norms.append(norm)
        if norm.value == 0:
            return 0.0
        terms = []
        for lam, x, xs, rest in self._members():
            spread = raw_moment(x, 2) + lam ** 2 - lam
            terms.append(
                raw_moment(rest, p) * spread +
                lam * (raw_moment(xs, p + 1) + raw_moment(x, p + 1))
            )
        return growth_factor(p) * norm.value * math.fsum(terms)

    def _step(self, path, n):
        p = self.p
        norm = seminorm(self.tree.solution(path), n, p)
        self.norms.append(norm)
        terms = []
        for i, (lam, x, xs, rest) in enumerate(self._members()):
            weights = self._weights[i]
            inner = math.fsum(
                weights[j] * self(path + (j,), n - j)
                for j in range(1, n + 1) if weights[j] != 0
            )
            reverse = math.fsum(
                binom_moment(xs, MomentKey(k)) *
                epsilon_bound(norm, rest, x, n, k, p)
                for k in range(n + 1)
            )
            forward = delta_bound(norm, rest, xs, n, 0, p)
            terms.append(lam * (inner + reverse + forward))
        return math.fsum(terms)


def _prepare(model, h, p, tail_tol, tree):
    if tree is None:
        context = SteinContext(model.lambda_w, tail_tol, h.grid_bound)
        tree = SolutionTree(h, context)
    p = h.envelope.p if p is None else p
    return tree, float(p)


def e0_bound(model, h, p=None, tail_tol=1e-12, tree=None):
    """Bound on |E[h(W)] - P_lambda_W(h)| from ||f_h||_{0,p}

    Parameters
    ----------
    model : SumModel
    h : TabulatedFunction
    p : float, default None
        Growth exponent; the exponent of h's envelope when omitted.
    tail_tol : float
        Tolerance of the Stein solution, unused when `tree` is given.
    tree : SolutionTree, default None
        Shared memo of Stein solutions rooted at h.
    """
    tree, p = _prepare(model, h, p, tail_tol, tree)
    return _RecursiveBound(model, tree, 0, p)((), 0)


def recursive_e_bound(model, h, order, p=None, tail_tol=1e-12, tree=None):
    """Recursive bound on |e_N(h)|, reducing to `e0_bound` for N = 0"""
    return expansion_bound(model, h, order, p=p, tail_tol=tail_tol,
                           tree=tree).value


def expansion_bound(model, h, order, p=None, tail_tol=1e-12, tree=None):
    if not isinstance(order, numbers.Integral) or order < 0:
        raise BadParameter(f'expansion order must be a nonnegative integer, '
                           f'got {order!r}')
    tree, p = _prepare(model, h, p, tail_tol, tree)
    walker = _RecursiveBound(model, tree, order, p)
    value = walker((), order)
    logger.debug('Order %d remainder bound %.6g from %d seminorms', order,
                 value, len(walker.norms))
    return BoundReport(order=int(order), value=float(value),
                       norms=walker.norms)
