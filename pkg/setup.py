"""Build script: compiles the backward-sweep kernel when Cython and a C
compiler are available.  The package works without it (pure-numpy fallback
selected at import time); set ETSDDP_SKIP_EXT=1 to force a pure install.
"""

import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("ETSDDP_SKIP_EXT") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "etsddp._kernel",
                    sources=["src/etsddp/_kernel.pyx"],
                    include_dirs=[np.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            language_level=3,
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
