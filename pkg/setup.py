"""Build script: compiles the optional Cython kernel extension.

The package works without the extension (a pure-Python kernel backend is
selected at import time), so compilation failures are downgraded to a
warning rather than aborting the install.
"""

import sys

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools.extension import Extension

    ext_modules = cythonize(
        [
            Extension(
                "searchsim._kernels.core",
                sources=["src/searchsim/_kernels/core.pyx"],
                include_dirs=[numpy.get_include()],
                # -ffp-contract=off keeps float arithmetic identical to the
                # pure backend (no fused multiply-add surprises).
                extra_compile_args=["-O2", "-ffp-contract=off"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "initializedcheck": False,
        },
    )
except Exception as exc:  # pragma: no cover - depends on toolchain
    sys.stderr.write(f"warning: Cython extension skipped ({exc}); "
                     "falling back to pure-Python kernels\n")
    ext_modules = []

setup(ext_modules=ext_modules)
