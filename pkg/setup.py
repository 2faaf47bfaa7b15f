"""Build hook for the optional compiled kernel extension.

The package is pure Python plus one optional Cython extension
(atcgrade.kernels._speedups). If Cython or a C compiler is missing the
build falls through and the pure-Python kernels are used at runtime.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "atcgrade.kernels._speedups",
                ["src/atcgrade/kernels/_speedups.pyx"],
                optional=True,
            )
        ],
        language_level=3,
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
