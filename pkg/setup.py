"""Build script for the optional compiled kernel extension.

The package works without the extension (a numpy fallback is selected at
import time), so the build is marked optional and failures are non-fatal.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "finet.backend._ckernels",
                sources=["src/finet/backend/_ckernels.pyx"],
                extra_compile_args=["-O3"],
                optional=True,
            )
        ],
        language_level=3,
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
