"""Build script: compiles the optional Cython kernel extension.

The package works without the extension (a pure-numpy implementation is
selected at import time), so a failed compile only costs speed. Build with
``pip install -e . --no-build-isolation``.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "crsphere._kernels",
                ["src/crsphere/_kernels.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    print("Cython or numpy not available; building without the compiled kernels.")

setup(ext_modules=ext_modules)
