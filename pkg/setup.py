# Use of this source code is governed by a BSD 2-Clause
# license that can be found in the LICENSE file.

import sys
from setuptools import setup


if sys.version_info < (3, 10):
    sys.exit('Python < 3.10 is not supported due to inspect.get_annotations')


def readme():
    with open('README.md') as f:
        return f.read()


setup(
    name='zerobias',
    description='Poisson asymptotic expansions for sums of independent '
                'integer valued variables via the zero bias transformation',
    keywords=['poisson', 'stein', 'zero-bias', 'asymptotic-expansion'],
    long_description=readme(),
    long_description_content_type='text/markdown',
    use_scm_version=True,
    packages=['zerobias'],
    setup_requires=['setuptools_scm'],
    python_requires='>=3.10',
    install_requires=[
        'click',
        'numpy',
        'python-dotenv',
        'ruamel.yaml',
        'scipy',
        'tabulate',
        'toolz',
        'typeguard'
    ],
    tests_require=['pytest>=3.9', 'mock'],
    entry_points={
        'console_scripts': [
            'zerobias = zerobias.cli:main'
        ]
    },
    zip_safe=False,
)
