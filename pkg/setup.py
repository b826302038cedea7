import os

import numpy as np
from setuptools import setup

ext_modules = []
if not os.environ.get("ERGOPROP_NO_EXT"):
    try:
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "ergoprop._kernels._core",
                    ["src/ergoprop/_kernels/_core.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        # Pure-python install still works; the import-time selector falls
        # back to the numpy kernels.
        ext_modules = []

setup(ext_modules=ext_modules)
