"""Build script: compiles the optional fast geometry kernel.

The package works without the extension (a vectorised NumPy fallback is
selected at import time), so failures here should not block a pure-Python
install: build with ``TIP_SKIP_EXT=1 pip install .`` to skip the extension.
"""

import os

from setuptools import setup

ext_modules = []
if not os.environ.get("TIP_SKIP_EXT"):
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "tip._speedups",
                sources=["src/tip/_speedups.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
