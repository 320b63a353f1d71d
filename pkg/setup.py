"""Build script for the optional compiled kernel core.

The package works without the extension; ``fracsymm._core`` only speeds up
the hot loops (kernel evaluation and the Riesz double sum).
"""
import os

import numpy as np
from setuptools import setup

ext_modules = []
if os.environ.get("FRACSYMM_NO_EXT", "") != "1":
    try:
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "fracsymm._core",
                    ["src/fracsymm/_core.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
