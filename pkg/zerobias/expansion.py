# Use of this source code is governed by a BSD 2-Clause
# license that can be found in the LICENSE file.

import math
import logging
import numbers
from typing import List, Optional

import numpy as np

from .bounds import expansion_bound
from .distributions import (FinitePmf, MomentKey, binom_moment, convolve,
                            pmf_from_weights, pmf_point_mass, zero_bias)
from .errors import BadParameter, GridTooShort, ZeroMean
from .oracle import exact_expectation
from .stein import SolutionTree, SteinContext
from .taylor import delta_remainder, epsilon_remainder, zero_bias_weights
from .utils import Annotable

__all__ = [
    'SumModel',
    'OrderRecord',
    'ExpansionReport',
    'expand',
    'check_order_improvement',
]

logger = logging.getLogger(__name__)

# report key of the remainder obtained through the recursion
RECURSIVE_KEY = 'e_via_eq11'


class SumModel:
    """Sum W = X_1 + ... + X_n of independent nonnegative integer variables

    Components with zero mean (the point mass at 0) carry no weight in the
    expansion and have no zero-biased law, so they are dropped; W is
    unchanged by that.

    Parameters
    ----------
    components : iterable of FinitePmf
        Laws of the summands X_i, at least one with a positive mean.
    """

    def __init__(self, components):
        components = list(components)
        if not components:
            raise BadParameter('a sum needs at least one component')
        for i, component in enumerate(components):
            if not isinstance(component, FinitePmf):
                raise BadParameter(f'component {i} must be a FinitePmf, got '
                                   f'{type(component).__name__}')

        kept = [c for c in components if c.mean > 0]
        if not kept:
            raise ZeroMean('every component is the point mass at 0')
        self.dropped = len(components) - len(kept)
        if self.dropped:
            logger.debug('Dropping %d zero mean components', self.dropped)

        self.components = tuple(kept)
        self.lambdas = tuple(c.mean for c in kept)
        self.lambda_w = math.fsum(self.lambdas)
        self.zero_biased = tuple(zero_bias(c) for c in kept)

        # W^(i) from prefix and suffix partial sums
        prefix = [pmf_point_mass(0)]
        for component in kept:
            prefix.append(convolve(prefix[-1], component))
        suffix = [pmf_point_mass(0)]
        for component in reversed(kept):
            suffix.append(convolve(suffix[-1], component))
        suffix.reverse()
        self.w = prefix[-1]
        self.leave_one_out = tuple(
            convolve(prefix[i], suffix[i + 1]) for i in range(len(kept))
        )

    @property
    def support_bound(self):
        return self.w.support_bound

    def zero_biased_sum(self):
        """Law of W* = W^(I) + X_I* with P(I = i) = lambda_i / lambda_W

        It coincides with the zero-biased law of W itself.
        """
        weights = np.zeros(self.w.support_bound + 1)
        for lam, rest, biased in zip(self.lambdas, self.leave_one_out,
                                     self.zero_biased):
            probs = convolve(rest, biased).probs
            weights[:probs.size] += lam / self.lambda_w * probs
        return pmf_from_weights(weights)

    def __len__(self):
        return len(self.components)

    def __repr__(self):
        return (f'<SumModel n={len(self)} lambda_W={self.lambda_w:.6g} '
                f'support=[0, {self.support_bound}]>')


class OrderRecord(Annotable):
    k: int
    C: float
    e_recursive: float
    e_exact: Optional[float] = None
    bound: Optional[float] = None
    bound_exact: Optional[bool] = None

    @property
    def ratio(self):
        """bound / |e_k|, None when either is unavailable or e_k is 0"""
        if self.bound is None or not self.e_exact:
            return None
        return self.bound / abs(self.e_exact)


class ExpansionReport(Annotable):
    order: int
    per_order: List[OrderRecord]
    oracle_value: Optional[float] = None
    diagnostics: dict = {}

    def record(self, k):
        return self.per_order[k]

    def to_dict(self):
        orders = []
        for record in self.per_order:
            entry = {'k': record.k, 'C': record.C}
            if record.e_exact is not None:
                entry['e_exact'] = record.e_exact
            entry[RECURSIVE_KEY] = record.e_recursive
            if record.bound is not None:
                entry['bound'] = record.bound
                entry['bound_certified'] = record.bound_exact
            orders.append(entry)
        result = {'order': self.order, 'orders': orders}
        if self.oracle_value is not None:
            result['oracle'] = self.oracle_value
        result['provenance'] = dict(self.diagnostics)
        return result

    @classmethod
    def from_dict(cls, data):
        records = [
            OrderRecord(
                k=entry['k'], C=entry['C'],
                e_recursive=entry[RECURSIVE_KEY],
                e_exact=entry.get('e_exact'),
                bound=entry.get('bound'),
                bound_exact=entry.get('bound_certified')
            )
            for entry in data['orders']
        ]
        return cls(order=data['order'], per_order=records,
                   oracle_value=data.get('oracle'),
                   diagnostics=dict(data.get('provenance', {})))


class _Recursion:
    """Memoized C_n and e_n over the nodes of a SolutionTree

    C_n(g) = C_0(g) + sum_j A(j) C_{n-j}(D^j f_g(x+1)) with C_0(g) the
    Poisson(lambda_W) expectation of g, and A(j) = sum_i lambda_i a_i(j).
    e_n(g) follows the same recursion plus, for every component, the
    reverse Taylor remainders of D^k f_g(x+1) over (W^(i), X_i) and the
    Taylor remainder of f_g(x+1) over (W^(i), X_i*). No term uses E[h(W)].
    """

    def __init__(self, model, tree, order):
        self.model = model
        self.tree = tree
        per_component = [
            zero_bias_weights(x, xs, order)
            for x, xs in zip(model.components, model.zero_biased)
        ]
        self.weights = [
            math.fsum(lam * w[j] for lam, w in zip(model.lambdas,
                                                   per_component))
            for j in range(order + 1)
        ]
        self.biased_moments = [
            [binom_moment(xs, MomentKey(k)) for k in range(order + 1)]
            for xs in model.zero_biased
        ]
        self.hits = 0
        self._corrections = {}
        self._remainders = {}

    def _children(self, path, n):
        for j in range(1, n + 1):
            if self.weights[j] != 0:
                yield self.weights[j], path + (j,), n - j

    def correction(self, path, n):
        key = (path, n)
        if key in self._corrections:
            self.hits += 1
            return self._corrections[key]
        terms = [self.tree.expectation(path)]
        for weight, child, rest in self._children(path, n):
            terms.append(weight * self.correction(child, rest))
        self._corrections[key] = value = math.fsum(terms)
        return value

    def remainder(self, path, n):
        key = (path, n)
        if key in self._remainders:
            self.hits += 1
            return self._remainders[key]
        terms = [
            weight * self.remainder(child, rest)
            for weight, child, rest in self._children(path, n)
        ]

        model = self.model
        members = zip(model.lambdas, model.components, model.zero_biased,
                      model.leave_one_out, self.biased_moments)
        for lam, x, xs, rest, moments in members:
            parts = [
                delta_remainder(self.tree.shifted_solution(path), n, rest, xs)
            ]
            for k in range(n + 1):
                if moments[k] == 0:
                    continue
                shifted = self.tree.shifted_solution(path, k)
                parts.append(moments[k] *
                             epsilon_remainder(shifted, n - k, rest, x))
            terms.append(lam * math.fsum(parts))

        self._remainders[key] = value = math.fsum(terms)
        return value


def _check_order(order):
    if not isinstance(order, numbers.Integral) or order < 0:
        raise BadParameter(f'expansion order must be a nonnegative integer, '
                           f'got {order!r}')


def expand(model, h, order, grid_bound=None, tail_tol=1e-12,
           with_oracle=True, with_bounds=True, p=None):
    """Expand E[h(W)] = C_k(h) + e_k(h) for every k up to `order`

    Parameters
    ----------
    model : SumModel or iterable of FinitePmf
    h : TabulatedFunction
        Test function; its grid must reach support(W) + order + 2.
    order : int
        Highest expansion order N.
    grid_bound : int, default None
        Restrict h to this grid bound first.
    tail_tol : float, default 1e-12
        Target of every certified truncation.
    with_oracle : bool, default True
        Compute E[h(W)] by convolution and record e_k = E[h(W)] - C_k.
    with_bounds : bool, default True
        Attach the recursive remainder bound to every order.
    p : float, default None
        Growth exponent for the bounds, h's envelope exponent by default.

    Returns
    -------
    ExpansionReport
    """
    if not isinstance(model, SumModel):
        model = SumModel(model)
    _check_order(order)
    if grid_bound is not None:
        h = h.restrict(grid_bound)
    required = model.support_bound + order + 2
    if h.grid_bound < required:
        raise GridTooShort(
            f'expanding to order {order} needs h on [0, {required}], it is '
            f'tabulated on [0, {h.grid_bound}]',
            required=required, available=h.grid_bound
        )
    p = h.envelope.p if p is None else float(p)

    logger.info('Expanding E[h(W)] for %s up to order %d on grid bound %d',
                model, order, h.grid_bound)
    context = SteinContext(model.lambda_w, tail_tol, h.grid_bound)
    tree = SolutionTree(h, context)
    recursion = _Recursion(model, tree, order)
    oracle = exact_expectation(model.components, h) if with_oracle else None

    records = []
    for k in range(order + 1):
        C = recursion.correction((), k)
        e_recursive = recursion.remainder((), k)
        record = dict(k=k, C=float(C), e_recursive=float(e_recursive))
        if oracle is not None:
            record['e_exact'] = float(oracle - C)
        if with_bounds:
            bound = expansion_bound(model, h, k, p=p, tree=tree)
            record['bound'] = bound.value
            record['bound_exact'] = bound.exact
        records.append(OrderRecord(**record))
        logger.debug('Order %d: C=%.12g e=%.6g', k, C, e_recursive)

    certificates = tree.certificates().values()
    diagnostics = {
        'grid_bound': h.grid_bound,
        'tail_tol': float(tail_tol),
        'lambda_w': model.lambda_w,
        'support_bound': model.support_bound,
        'components': len(model),
        'dropped_components': model.dropped,
        'p': p,
        'poisson_tail': context.expectation(h).tail_bound,
        'stein_certificate': max(certificates, default=0.0),
        'tree_nodes': len(tree),
        'memo_hits': recursion.hits,
    }
    if oracle is not None:
        diagnostics['dual_path_residual'] = max(
            abs(r.e_recursive - r.e_exact) for r in records
        )
    if with_bounds:
        diagnostics['seminorms_certified'] = all(
            r.bound_exact for r in records
        )
    logger.info('Expansion finished after %d Stein solutions',
                len(tree.certificates()))

    return ExpansionReport(order=int(order), per_order=records,
                           oracle_value=oracle, diagnostics=diagnostics)


def check_order_improvement(report, tolerance=1e-12):
    """Orders k at which |e_k| exceeds |e_{k-1}| by more than `tolerance`

    Uses the exact remainders when the report has them. Violations are
    logged, not raised.

    Returns
    -------
    list of (k, |e_{k-1}|, |e_k|)
    """
    values = [
        abs(r.e_exact if r.e_exact is not None else r.e_recursive)
        for r in report.per_order
    ]
    violations = []
    for k in range(1, len(values)):
        if values[k] > values[k - 1] + tolerance:
            logger.warning('Order %d remainder %.6g is larger than the order '
                           '%d remainder %.6g', k, values[k], k - 1,
                           values[k - 1])
            violations.append((k, values[k - 1], values[k]))
    return violations
