import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("FSEVSIM_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [
                Extension(
                    "fsevsim._kernels",
                    ["src/fsevsim/_kernels.pyx"],
                    # contraction into FMA would break bit-parity with the Python fallback
                    extra_compile_args=["-O2", "-ffp-contract=off"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
