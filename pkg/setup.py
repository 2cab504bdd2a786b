import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("SCARP_PURE") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "scarp._kernels._core",
                    ["src/scarp/_kernels/_core.pyx"],
                    extra_compile_args=["-O3"],
                )
            ],
            language_level=3,
        )
    except ImportError:
        # No Cython available: install runs with the pure-Python kernels.
        ext_modules = []

setup(ext_modules=ext_modules)
