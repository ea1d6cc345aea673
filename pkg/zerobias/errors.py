# Use of this source code is governed by a BSD 2-Clause
# license that can be found in the LICENSE file.

from contextlib import contextmanager

__all__ = [
    'ZerobiasError',
    'DistributionError',
    'AllZero',
    'NegativeWeight',
    'BadParameter',
    'ZeroMean',
    'GridError',
    'GridTooShort',
    'EnvelopeViolated',
    'TailNotCertified',
    'TooLarge',
    'ConfigErrors',
    'collect_errors',
]


class ZerobiasError(Exception):
    pass


class DistributionError(ZerobiasError, ValueError):
    pass


class AllZero(DistributionError):
    pass


class NegativeWeight(DistributionError):
    pass


class BadParameter(DistributionError):
    pass


class ZeroMean(DistributionError):
    pass


class GridError(ZerobiasError):
    pass


class GridTooShort(GridError):

    def __init__(self, message, required=None, available=None):
        super().__init__(message)
        self.required = required
        self.available = available


class EnvelopeViolated(GridError):
    pass


class TailNotCertified(GridError):
    pass


class TooLarge(ZerobiasError):
    pass


class ConfigErrors(ZerobiasError):
    """Collection of configuration problems

    Each message should name the offending field, e.g. `variables[1].p`.
    """

    def __init__(self, errors=None):
        self.errors = list(errors or [])
        super().__init__('\n'.join(self.errors))

    def add(self, message):
        self.errors.append(message)
        self.args = ('\n'.join(self.errors),)

    def merge(self, other):
        for message in other.errors:
            self.add(message)

    def __bool__(self):
        return bool(self.errors)

    def __len__(self):
        return len(self.errors)

    def __iter__(self):
        return iter(self.errors)


@contextmanager
def collect_errors(and_raise=True, prefix=''):
    """Gather ConfigErrors raised (or added) inside the block

    Validation helpers either call `errors.add()` on the yielded collection
    or raise ConfigErrors directly; both end up in one exception raised when
    the block exits.
    """
    errors = ConfigErrors()
    try:
        yield errors
    except ConfigErrors as e:
        for message in e.errors:
            errors.add(f'{prefix}{message}')
    finally:
        if errors and and_raise:
            raise errors
