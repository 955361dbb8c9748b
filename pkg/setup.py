"""Build script: compiles the optional kernel extension when Cython is available.

The package is fully functional without the extension (a numpy fallback is
selected at import); `python bench/bench_kernels.py` compares the two.
"""

import numpy as np
from setuptools import setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        "src/respq/_kernels/_core.pyx",
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules, include_dirs=[np.get_include()])
