# Use of this source code is governed by a BSD 2-Clause
# license that can be found in the LICENSE file.

import json
import textwrap

import toolz
from tabulate import tabulate

from .bounds import bound_label
from .distributions import MomentKey, binom_moment

__all__ = [
    'Formatter',
    'JsonFormatter',
    'TextFormatter',
    'ModelFormatter',
    'formatter_for',
]


class Formatter:
    """Base class to render reports through a string layout

    Parameters
    ----------
    layout : str, default None
        string template used as a layout for the output
    context : dict, default None
        variables passed to the layout
    """

    layout = '{body}'
    context = {}

    def __init__(self, layout=None, context=None):
        layout = layout or self.layout  # class' default
        if isinstance(layout, str):
            self.layout = textwrap.dedent(layout)
        else:
            raise ValueError('Formatter template must be an instance of str')

        self.context = toolz.merge(context or {}, self.context)

    def render_context(self, subject):
        raise NotImplementedError()

    def render(self, subject):
        context = toolz.merge(self.render_context(subject), self.context)
        return self.layout.format(**context).strip() + '\n'


class JsonFormatter(Formatter):
    """Machine readable report; the field order is fixed"""

    def render_context(self, report):
        return dict(body=json.dumps(report.to_dict(), indent=2))


def _number(value):
    return '-' if value is None else value


class TextFormatter(Formatter):

    layout = """
        Expansion of E[h(W)] up to order {order}
        {oracle}

        {table}

        {provenance}
    """

    columns = ['k', 'C_k', 'e_k', 'bound_k', 'norms', 'bound/|e_k|']

    def render_context(self, report):
        rows = []
        for record in report.per_order:
            e = record.e_exact
            if e is None:
                e = record.e_recursive
            if record.bound is None:
                label = '-'
            else:
                label = bound_label(record.bound_exact)
            rows.append([record.k, record.C, e, _number(record.bound), label,
                         _number(record.ratio)])
        table = tabulate(rows, headers=self.columns, tablefmt='rst',
                         floatfmt='.10g')

        if report.oracle_value is None:
            oracle = 'E[h(W)] not computed'
        else:
            oracle = f'E[h(W)] = {report.oracle_value:.15g}'

        provenance = tabulate(sorted(report.diagnostics.items()),
                              headers=['provenance', 'value'],
                              tablefmt='simple')
        return dict(order=report.order, oracle=oracle, table=table,
                    provenance=provenance)


class ModelFormatter(Formatter):
    """Summary of the components of a sum, for `zerobias desc`"""

    layout = """
        W = {count} independent components, lambda_W = {lambda_w:.10g},
        support of W in [0, {support}]

        {table}
    """

    columns = ['i', 'mean', 'support', 'm^(1)', 'm^(2)', 'E[X*]', 'm*^(2)']

    def render_context(self, model):
        rows = []
        for i, (x, xs) in enumerate(zip(model.components, model.zero_biased)):
            rows.append([
                i, x.mean, x.support_bound,
                binom_moment(x, MomentKey(1)), binom_moment(x, MomentKey(2)),
                xs.mean, binom_moment(xs, MomentKey(2))
            ])
        table = tabulate(rows, headers=self.columns, tablefmt='rst',
                         floatfmt='.8g')
        return dict(count=len(model), lambda_w=model.lambda_w,
                    support=model.support_bound, table=table)


_formatters = {
    'json': JsonFormatter,
    'text': TextFormatter,
}


def formatter_for(name):
    try:
        return _formatters[name]()
    except KeyError:
        raise ValueError(f'Unknown output format `{name}`, expected one of '
                         f'{", ".join(sorted(_formatters))}') from None
