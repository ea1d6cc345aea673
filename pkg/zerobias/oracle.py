# Use of this source code is governed by a BSD 2-Clause
# license that can be found in the LICENSE file.
#
# Ground truth computed by plain loops over the supports. Nothing here goes
# through the moment, difference or convolution helpers of the expansion so
# that the two paths can witness each other.

import math
import itertools

from .errors import GridTooShort, TooLarge

__all__ = [
    'exact_pmf',
    'exact_expectation',
    'brute_delta',
    'brute_taylor_main',
    'MAX_BRUTE_SUPPORT',
    'MAX_BRUTE_ORDER',
]

MAX_BRUTE_SUPPORT = 25
MAX_BRUTE_ORDER = 6


def _masses(pmf):
    return [float(p) for p in pmf.probs]


def exact_pmf(components):
    """Masses of X_1 + ... + X_n, convolved left to right"""
    result = [1.0]
    for component in components:
        masses = _masses(component)
        combined = [0.0] * (len(result) + len(masses) - 1)
        for a, p in enumerate(result):
            if p == 0:
                continue
            for b, q in enumerate(masses):
                combined[a + b] += p * q
        result = combined
    return result


def exact_expectation(components, h):
    masses = exact_pmf(components)
    values = h.values
    if len(values) < len(masses):
        raise GridTooShort(
            f'h is tabulated on [0, {len(values) - 1}] but the sum reaches '
            f'{len(masses) - 1}',
            required=len(masses) - 1, available=len(values) - 1
        )
    return math.fsum(p * float(values[x]) for x, p in enumerate(masses))


def _difference(values, order, z):
    # D^order f(z) = sum_i (-1)^(order-i) C(order, i) f(z + i)
    if z + order >= len(values):
        raise GridTooShort(f'D^{order} f({z}) needs f({z + order})',
                           required=z + order, available=len(values) - 1)
    return math.fsum((-1) ** (order - i) * math.comb(order, i) *
                     float(values[z + i]) for i in range(order + 1))


def brute_delta(f, order, x, y):
    """Taylor remainder by enumerating every 0 <= j_1 < ... < j_{N+1} < y"""
    if y.support_bound > MAX_BRUTE_SUPPORT or order > MAX_BRUTE_ORDER:
        raise TooLarge(
            f'brute force enumeration is limited to supports up to '
            f'{MAX_BRUTE_SUPPORT} and orders up to {MAX_BRUTE_ORDER}'
        )
    terms = []
    for xv, px in enumerate(_masses(x)):
        if px == 0:
            continue
        for yv, py in enumerate(_masses(y)):
            if py == 0:
                continue
            for indices in itertools.combinations(range(yv), order + 1):
                terms.append(px * py *
                             _difference(f.values, order + 1, xv + indices[0]))
    return math.fsum(terms)


def brute_taylor_main(f, order, x, y):
    """sum_k E[C(Y, k)] E[D^k f(X)] by literal binomial sums"""
    terms = []
    for k in range(order + 1):
        moment = math.fsum(py * math.comb(yv, k)
                           for yv, py in enumerate(_masses(y)))
        if moment == 0:
            continue
        mean = math.fsum(px * _difference(f.values, k, xv)
                         for xv, px in enumerate(_masses(x)))
        terms.append(moment * mean)
    return math.fsum(terms)
