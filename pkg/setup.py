"""Build script for the optional compiled sampler/embedding kernels.

The package is fully functional without the extension (a pure numpy
fallback is selected at import time); set ISSUETRACE_PURE=1 to skip the
compile step entirely.
"""

import os

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("ISSUETRACE_PURE"):
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "issuetrace._core",
                ["src/issuetrace/_core.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
