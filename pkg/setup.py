import os

from setuptools import setup

ext_modules = []
if os.environ.get("LAGDMC_NO_EXT") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext = Extension(
            "lagdmc._kernels._core",
            ["src/lagdmc/_kernels/_core.pyx"],
            include_dirs=[np.get_include()],
            define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        )
        ext_modules = cythonize([ext], language_level="3")
    except ImportError:
        # Pure-python fallback is selected at import time; the compiled
        # kernel is an optimization, not a requirement.
        ext_modules = []

setup(ext_modules=ext_modules)
