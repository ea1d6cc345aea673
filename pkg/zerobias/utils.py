# Use of this source code is governed by a BSD 2-Clause
# license that can be found in the LICENSE file.

import copy
import inspect
from typing import ClassVar

import numpy as np
import typeguard

from .errors import ConfigErrors

__all__ = [
    'Annotable',
    'binomial_coefficients',
    'powers',
]


# typeguard<3 takes the argument name first, later versions dropped it and
# raise TypeCheckError instead of TypeError
_LEGACY_TYPEGUARD = 'argname' in inspect.signature(
    typeguard.check_type
).parameters
_TypeCheckError = getattr(typeguard, 'TypeCheckError', TypeError)


def check_type(name, value, expected):
    try:
        if _LEGACY_TYPEGUARD:
            typeguard.check_type(name, value, expected)
        else:
            typeguard.check_type(value, expected)
    except (TypeError, _TypeCheckError) as e:
        raise TypeError(f'type of {name} must be {expected}: {e}') from None


# Declarative, type checked records


class MISSING:
    pass


class Field:

    __slots__ = ('name', 'type', 'default')

    def __init__(self, name, type, default):
        self.name = name
        self.type = type
        self.default = default
        if default is not MISSING:
            self.validate(default)

    def with_default(self, new_default):
        return Field(name=self.name, type=self.type, default=new_default)

    def validate(self, value):
        check_type(self.name, value, self.type)


class AnnotableMeta(type):

    def __new__(metacls, clsname, bases, attrs):
        cls = super().__new__(metacls, clsname, bases, attrs)
        # only the annotations of the class body, lazily evaluated ones too
        annotations = {
            name: type
            for name, type in inspect.get_annotations(cls).items()
            if getattr(type, '__origin__', None) is not ClassVar
        }

        fields = {}
        for base in reversed(bases):
            fields.update(getattr(base, '__fields__', {}))

        # inherited fields with overridden defaults
        for name, field in list(fields.items()):
            if name in attrs and name not in annotations:
                fields[name] = field.with_default(attrs[name])

        for name, type in annotations.items():
            default = attrs.get(name, MISSING)
            fields[name] = Field(name, type=type, default=default)

        cls.__fields__ = fields
        return cls


class Annotable(metaclass=AnnotableMeta):
    """Record whose annotated attributes are checked with typeguard

    Every problem found during construction is collected and raised at once
    as ConfigErrors, so a config file reports all of its bad fields in one
    go. Subclasses may override `validate` to add semantic checks; it must
    append messages to the passed ConfigErrors instead of raising.
    """

    def __init__(self, **kwargs):
        errors = ConfigErrors()

        unknown = set(kwargs) - set(self.__fields__)
        for name in sorted(unknown):
            errors.add(f'{name}: unknown field')

        for name, field in self.__fields__.items():
            if name in kwargs:
                value = kwargs[name]
            elif field.default is MISSING:
                errors.add(f'{name}: missing required field')
                continue
            else:
                value = copy.copy(field.default)

            try:
                field.validate(value)
            except TypeError:
                errors.add(f'{name}: expected {_type_name(field.type)}, got '
                           f'{type(value).__name__} ({value!r})')
                continue
            setattr(self, name, value)

        if not errors:
            self.validate(errors)
        if errors:
            raise errors

    def validate(self, errors):
        pass

    def __repr__(self):
        classname = self.__class__.__name__
        values = ' '.join(f'{k}={v!r}' for k, v in self._values())
        return f'<{classname} {values}>'

    def __eq__(self, other):
        return (
            type(self) == type(other) and
            self.asdict() == other.asdict()
        )

    def _values(self):
        for name in self.__fields__.keys():
            yield (name, getattr(self, name))

    def asdict(self):
        return dict(self._values())

    def replace(self, **kwargs):
        return type(self)(**{**self.asdict(), **kwargs})


def _type_name(tp):
    return getattr(tp, '__name__', None) or str(tp).replace('typing.', '')


# Numerical helpers


def binomial_coefficients(values, k):
    """C(y, k) for every y in `values` by the multiplicative recurrence

    C(y, k) = prod_{i=1..k} (y - k + i) / i, zero where y < k. Avoids the
    factorials, which overflow long before the coefficients do.
    """
    values = np.asarray(values, dtype=np.float64)
    result = np.ones_like(values)
    for i in range(1, k + 1):
        result *= (values - k + i) / i
    result[values < k] = 0.0
    return result


def powers(values, p):
    """values ** p with the convention 0 ** 0 == 1"""
    values = np.asarray(values, dtype=np.float64)
    if p == 0:
        return np.ones_like(values)
    return np.power(values, p)
