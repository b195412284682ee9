"""Build script for the optional compiled kernels.

The package works without them: if Cython or a C compiler is missing the
build falls back to a pure Python install and ``dtcsim._core`` selects the
numpy implementation at import time.
"""
import os
import sys

from setuptools import setup

ext_modules = []
if os.environ.get("DTCSIM_NO_EXT") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "dtcsim._core._kernels",
                    ["src/dtcsim/_core/_kernels.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except Exception as exc:  # pragma: no cover - build environment dependent
        print(f"dtcsim: building without compiled kernels ({exc})", file=sys.stderr)
        ext_modules = []

setup(ext_modules=ext_modules)
