"""Build script for the optional compiled EM kernel.

The package works without the extension (a pure numpy fallback is selected
at import time), so any failure to compile is non-fatal.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "lfrps._emcore",
                ["src/lfrps/_emcore.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
