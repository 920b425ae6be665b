"""Build script: compiles the optional Cython kernel extension.

The package works without the extension (the NumPy kernels are selected
at import time), so a failed compile only costs speed, not correctness.
"""

import sys

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Build the extension if possible; warn and continue otherwise."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler or toolchain missing
            self._warn(exc)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            self._warn(exc)

    @staticmethod
    def _warn(exc):
        print(
            f"warning: compiled kernels unavailable ({exc}); "
            "falling back to the NumPy implementation",
            file=sys.stderr,
        )


ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext = Extension(
        "flowsentry.neural._kernels_cy",
        sources=["src/flowsentry/neural/_kernels_cy.pyx"],
        include_dirs=[numpy.get_include()],
        extra_compile_args=["-O3"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    ext_modules = cythonize([ext], language_level=3)
except ImportError:
    pass

setup(ext_modules=ext_modules, cmdclass={"build_ext": OptionalBuildExt})
