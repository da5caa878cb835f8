import os

import numpy
from setuptools import Extension, setup

# UPS_NO_EXT=1 skips the compiled core; the package then runs on the
# pure-Python fallback.
ext_modules = []
if not os.environ.get("UPS_NO_EXT"):
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "ups._core",
                ["src/ups/_core.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
