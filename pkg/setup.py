"""Build script for the compiled insertion kernel.

The package works without the extension (a pure-Python twin is selected at
import time); building it is what makes full-scale scenarios fast.
"""

from setuptools import Extension, setup

try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "arrpsim._insertion_c",
                ["src/arrpsim/_insertion_c.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
