import sys

import numpy
from setuptools import Extension, setup

# The compiled kernels are an optional speedup: if Cython or a C compiler is
# missing we fall back to the NumPy implementations selected at import time.
try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "capillary._kernels",
                ["src/capillary/_kernels.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
except Exception as exc:  # pragma: no cover
    print(f"warning: building without compiled kernels ({exc})", file=sys.stderr)
    extensions = []

setup(ext_modules=extensions)
