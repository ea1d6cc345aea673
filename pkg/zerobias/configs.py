# Use of this source code is governed by a BSD 2-Clause
# license that can be found in the LICENSE file.

import json
import logging
import numbers
from pathlib import Path
from typing import List, Optional

import toolz
from ruamel.yaml import YAML, YAMLError

from .distributions import (pmf_bernoulli, pmf_binomial, pmf_from_weights,
                            pmf_geometric_truncated, pmf_point_mass,
                            pmf_poisson_truncated)
from .errors import ConfigErrors, collect_errors
from .expansion import SumModel, expand
from .stein import GrowthEnvelope, builtin_function, default_grid_bound
from .utils import Annotable

__all__ = [
    'Config',
    'VariableSpec',
    'EnvelopeSpec',
    'FunctionSpec',
    'ReportOptions',
    'ProblemConfig',
]

logger = logging.getLogger(__name__)


# Parameter checkers return an error message or None


def _real(value):
    return isinstance(value, numbers.Real) and not isinstance(value, bool)


def _integer(value):
    return isinstance(value, numbers.Integral) and not isinstance(value, bool)


def _probability(value):
    if not (_real(value) and 0 < value < 1):
        return f'expected a probability in (0, 1), got {value!r}'


def _positive(value):
    if not (_real(value) and value > 0):
        return f'expected a positive number, got {value!r}'


def _nonnegative(value):
    if not (_real(value) and value >= 0):
        return f'expected a nonnegative number, got {value!r}'


def _count(value):
    if not (_integer(value) and value >= 1):
        return f'expected a positive integer, got {value!r}'


def _index(value):
    if not (_integer(value) and value >= 0):
        return f'expected a nonnegative integer, got {value!r}'


def _numbers(value):
    if not (isinstance(value, list) and value and all(map(_real, value))):
        return f'expected a non-empty list of numbers, got {value!r}'


def _weights(value):
    message = _numbers(value)
    if message:
        return message
    if any(w < 0 for w in value):
        return 'weights must be nonnegative'
    if not any(value):
        return 'at least one weight must be positive'


def _indices(value):
    if not (isinstance(value, list) and all(_index(x) is None
                                            for x in value)):
        return f'expected a list of nonnegative integers, got {value!r}'


def _table(value):
    message = _numbers(value)
    if message:
        return message
    if len(value) < 2:
        return 'a table needs at least two values'


def _envelope(value):
    if not isinstance(value, dict):
        return f'expected a mapping with K and p, got {value!r}'


# kind -> ({required parameter: checker}, {optional parameter: checker})
_variable_kinds = {
    'bernoulli': ({'p': _probability}, {}),
    'binomial': ({'n': _count, 'p': _probability}, {}),
    'poisson': ({'lambda': _positive}, {'tail_tol': _probability}),
    'geometric': ({'p': _probability}, {'tail_tol': _probability}),
    'point': ({'value': _index}, {}),
    'pmf': ({'weights': _weights}, {}),
}

_function_kinds = {
    'polynomial': ({'coefficients': _numbers}, {}),
    'indicator': ({}, {'points': _indices, 'upto': _index}),
    'monomial': ({'power': _nonnegative}, {}),
    'table': ({'values': _table, 'envelope': _envelope}, {}),
}


def _check_params(kind, params, kinds, errors):
    if kind not in kinds:
        errors.add(f'kind: unknown kind `{kind}`, expected one of '
                   f'{", ".join(sorted(kinds))}')
        return
    required, optional = kinds[kind]
    for name in sorted(set(params) - set(required) - set(optional)):
        errors.add(f'{name}: unknown parameter for kind `{kind}`')
    for name, checker in toolz.merge(required, optional).items():
        if name not in params:
            if name in required:
                errors.add(f'{name}: missing required parameter')
            continue
        message = checker(params[name])
        if message:
            errors.add(f'{name}: {message}')


def _split(data, own):
    """Separate the declared fields of a spec from its kind parameters"""
    if not isinstance(data, dict):
        raise ConfigErrors([f'expected a mapping, got {data!r}'])
    fields = {k: v for k, v in data.items() if k in own}
    params = {k: v for k, v in data.items() if k not in own}
    return fields, params


class Config(Annotable):

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict):
            raise ConfigErrors([f'expected a mapping, got {data!r}'])
        return cls(**cls._coerced(data))

    @classmethod
    def _coerced(cls, data):
        # JSON and YAML write 1 for 1.0
        result = dict(data)
        for name, field in cls.__fields__.items():
            value = result.get(name)
            if field.type in (float, Optional[float]) and _integer(value):
                result[name] = float(value)
        return result


class VariableSpec(Config):
    """One distribution in the sum, replicated `count` times

    Every key besides `kind` and `count` is a parameter of the kind, e.g.
    `{"kind": "binomial", "n": 4, "p": 0.05}`.
    """
    kind: str
    count: int = 1
    params: dict = {}

    @classmethod
    def from_dict(cls, data):
        fields, params = _split(data, {'kind', 'count'})
        return cls(**fields, params=params)

    def validate(self, errors):
        message = _count(self.count)
        if message:
            errors.add(f'count: {message}')
        _check_params(self.kind, self.params, _variable_kinds, errors)

    def build(self, tail_tol=1e-12):
        params = self.params
        kind = self.kind
        if kind == 'bernoulli':
            pmf = pmf_bernoulli(params['p'])
        elif kind == 'binomial':
            pmf = pmf_binomial(params['n'], params['p'])
        elif kind == 'poisson':
            pmf = pmf_poisson_truncated(params['lambda'],
                                        params.get('tail_tol', tail_tol))
        elif kind == 'geometric':
            pmf = pmf_geometric_truncated(params['p'],
                                          params.get('tail_tol', tail_tol))
        elif kind == 'point':
            pmf = pmf_point_mass(params['value'])
        else:
            pmf = pmf_from_weights(params['weights'])
        return [pmf] * self.count

    def describe(self):
        params = ', '.join(f'{k}={v}' for k, v in sorted(self.params.items()))
        suffix = f' x{self.count}' if self.count > 1 else ''
        return f'{self.kind}({params}){suffix}'


class EnvelopeSpec(Config):
    K: float
    p: float = 0.0

    def validate(self, errors):
        for name in ('K', 'p'):
            message = _nonnegative(getattr(self, name))
            if message:
                errors.add(f'{name}: {message}')

    def build(self):
        return GrowthEnvelope(self.K, self.p)


class FunctionSpec(Config):
    """The test function h, tabulated on demand"""
    kind: str
    params: dict = {}

    @classmethod
    def from_dict(cls, data):
        fields, params = _split(data, {'kind'})
        return cls(**fields, params=params)

    def validate(self, errors):
        _check_params(self.kind, self.params, _function_kinds, errors)
        if self.kind == 'indicator':
            given = {'points', 'upto'} & set(self.params)
            if len(given) != 1:
                errors.add('points: exactly one of `points` and `upto` is '
                           'required for an indicator')
        if self.kind == 'table' and isinstance(self.params.get('envelope'),
                                               dict):
            with collect_errors(and_raise=False,
                                prefix='envelope.') as envelope_errors:
                EnvelopeSpec.from_dict(self.params['envelope'])
            errors.merge(envelope_errors)

    @property
    def growth_exponent(self):
        params = self.params
        if self.kind == 'polynomial':
            nonzero = [i for i, c in enumerate(params['coefficients']) if c]
            return float(max(nonzero, default=0))
        elif self.kind == 'monomial':
            return float(params['power'])
        elif self.kind == 'table':
            return float(params['envelope'].get('p', 0.0))
        return 0.0

    def build(self, grid_bound):
        params = dict(self.params)
        if self.kind == 'indicator' and 'upto' in params:
            params['points'] = list(range(params.pop('upto') + 1))
        if self.kind == 'table':
            params['envelope'] = EnvelopeSpec.from_dict(
                params['envelope']
            ).build()
        return builtin_function(self.kind, grid_bound, **params)

    def describe(self):
        params = ', '.join(f'{k}={v}' for k, v in sorted(self.params.items()))
        return f'{self.kind}({params})'


class ReportOptions(Config):
    include_bounds: bool = True
    include_oracle: bool = True
    format: str = 'json'

    def validate(self, errors):
        if self.format not in ('json', 'text'):
            errors.add(f'format: expected `json` or `text`, got '
                       f'{self.format!r}')


class ProblemConfig(Config):
    """Sum of variables, test function and expansion order of one run

    Parameters
    ----------
    order : int
        Expansion order N, nonnegative.
    variables : list of VariableSpec
        Summands of W, at least one.
    function : FunctionSpec
        The test function h.
    grid_bound : int, optional
        Tabulation grid; derived from lambda_W, the support of W, the order
        and the growth of h when omitted.
    tail_tol : float, default 1e-12
        Tolerance of every truncated series.
    report : ReportOptions
    """
    order: int = 0
    variables: List[VariableSpec]
    function: FunctionSpec
    grid_bound: Optional[int] = None
    tail_tol: float = 1e-12
    report: ReportOptions = ReportOptions()

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict):
            raise ConfigErrors([f'configuration must be a mapping, got '
                                f'{type(data).__name__}'])
        data = dict(data)
        with collect_errors() as errors:
            variables = data.get('variables')
            if isinstance(variables, list):
                specs = []
                for i, item in enumerate(variables):
                    with collect_errors(and_raise=False,
                                        prefix=f'variables[{i}].') as found:
                        specs.append(VariableSpec.from_dict(item))
                    errors.merge(found)
                data['variables'] = specs

            nested = [('function', FunctionSpec), ('report', ReportOptions)]
            for name, spec in nested:
                if isinstance(data.get(name), dict):
                    with collect_errors(and_raise=False,
                                        prefix=f'{name}.') as found:
                        data[name] = spec.from_dict(data[name])
                    errors.merge(found)

            if not errors:
                return cls(**cls._coerced(data))

    @classmethod
    def load_from(cls, path):
        """Read a JSON or YAML problem description"""
        path = Path(path)
        if not path.exists():
            raise ConfigErrors([f"configuration file '{path}' does not exist"])

        logger.info('Loading configuration from %s', path)
        try:
            with path.open('r') as fp:
                if path.suffix in ('.yaml', '.yml'):
                    data = YAML(typ='safe').load(fp)
                else:
                    data = json.load(fp)
        except IOError as e:
            raise ConfigErrors([f'unable to open configuration file {path}: '
                                f'{e}'])
        except (ValueError, YAMLError) as e:
            raise ConfigErrors([f'unable to parse configuration file {path}: '
                                f'{e}'])
        return cls.from_dict(data)

    def validate(self, errors):
        message = _index(self.order)
        if message:
            errors.add(f'order: {message}')
        if not self.variables:
            errors.add('variables: at least one variable is required')
        if self.grid_bound is not None and self.grid_bound < 1:
            errors.add(f'grid_bound: expected a positive integer, got '
                       f'{self.grid_bound!r}')
        if not 0 < self.tail_tol < 1:
            errors.add(f'tail_tol: expected a number in (0, 1), got '
                       f'{self.tail_tol!r}')

    def components(self):
        return list(toolz.concat(v.build(self.tail_tol)
                                 for v in self.variables))

    def model(self):
        return SumModel(self.components())

    def resolve_grid_bound(self, model):
        if self.grid_bound is not None:
            return self.grid_bound
        grid_bound = default_grid_bound(model.lambda_w, model.support_bound,
                                        self.order,
                                        self.function.growth_exponent)
        logger.info('Using the default grid bound %d', grid_bound)
        return grid_bound

    def run(self):
        model = self.model()
        h = self.function.build(self.resolve_grid_bound(model))
        return expand(model, h, self.order, tail_tol=self.tail_tol,
                      with_oracle=self.report.include_oracle,
                      with_bounds=self.report.include_bounds)
