"""Build script for the optional compiled kernels.

The Cython extension is skipped when Cython is unavailable; ``lsbm.kernels``
then falls back to the NumPy/SciPy implementation.
"""

import os

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("LSBM_NO_EXT"):
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [
                Extension(
                    "lsbm._kernels",
                    ["src/lsbm/_kernels.pyx"],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={
                "language_level": "3",
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
            },
        )

setup(ext_modules=ext_modules)
