import os

from setuptools import Extension, setup

# The compiled graph kernels are optional: the package falls back to the
# pure-Python implementation in porsim._graphcore._pure when the extension
# is absent or PORSIM_PURE_PYTHON=1 is set.
ext_modules = []
if os.environ.get("PORSIM_SKIP_EXT") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "porsim._graphcore._speedups",
                    ["src/porsim/_graphcore/_speedups.pyx"],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
