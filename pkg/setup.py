"""Build script: compiles the optional C kernel extension.

Set R3NET_SKIP_EXT=1 to force a pure-Python install; the package falls
back to the numpy kernels at import time when the extension is missing.
"""

import os

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("R3NET_SKIP_EXT"):
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "r3net._kernels._fast",
                    ["src/r3net/_kernels/_fast.pyx"],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={
                "language_level": 3,
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
                "initializedcheck": False,
            },
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
