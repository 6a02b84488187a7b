import re
from setuptools import setup, find_packages
from codecs import open
from os import path

here = path.abspath(path.dirname(__file__))

with open(path.join(here, 'README.rst'), encoding='utf-8') as f:
    long_description = f.read()

# the package imports numpy and scipy, read the metadata without importing it
with open(path.join(here, 'modeconv', '__init__.py'), encoding='utf-8') as f:
    init = f.read()


def _meta(name):
    return re.search(r"^__{}__ = .*'(.+)'$".format(name), init, re.M).group(1)


setup(
    name='wg-modeconv',

    description='Thin-ligament mode converters for acoustic waveguides',
    long_description=long_description,

    version=_meta('version'),

    url='https://github.com/modeconv/wg-modeconv',

    author=_meta('author'),
    author_email=_meta('email'),

    license='MIT',

    classifiers=[
        'Development Status :: 3 - Alpha',

        'Intended Audience :: Science/Research',
        'Intended Audience :: Developers',

        'Topic :: Scientific/Engineering',
        'Topic :: Scientific/Engineering :: Physics',
        'Topic :: Scientific/Engineering :: Mathematics',

        'License :: OSI Approved :: MIT License',

        'Programming Language :: Python :: 3',
        'Programming Language :: Python :: 3.7',
        'Programming Language :: Python :: 3.8',
        'Programming Language :: Python :: 3.9',
        'Programming Language :: Python :: 3.10',
    ],

    keywords='waveguide helmholtz finite-element scattering mode-conversion',

    packages=find_packages(exclude=['docs', 'tests']),

    include_package_data=True,

    install_requires=[
        'numpy',
        'scipy',
        'triangle',
    ],

    python_requires='>=3.7',

    extras_require={
        'test': [
            'pytest',
            'hypothesis',
            'coverage',
        ],
    },

    entry_points={
        'console_scripts': [
            'modeconv = modeconv.cli:main',
        ],
    },
)
