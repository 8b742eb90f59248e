"""Build the optional Cython kernel extension.

The package works without the extension (qlstm.kernels falls back to the
numpy implementation at import time), so a missing Cython/compiler only
costs speed, never correctness.
"""

from setuptools import Extension, setup

try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "qlstm._kernels",
                ["src/qlstm/_kernels.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
