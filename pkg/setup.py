from setuptools import Extension, setup
from Cython.Build import cythonize

# The compiled kernel is optional: if it fails to build, the package falls
# back to the pure-Python implementation at import time.
ext_modules = cythonize(
    [
        Extension(
            "onoff_privacy._kernels",
            ["src/onoff_privacy/_kernels.pyx"],
            language="c++",
            extra_compile_args=["-O3"],
            optional=True,
        )
    ],
    language_level=3,
)

setup(ext_modules=ext_modules)
