"""Build the optional Cython kernels; the package still installs without them."""
import os

from setuptools import setup

ext_modules = []
if not os.environ.get("NBRANK_NO_EXT"):
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "nbrank._ckernels",
                    ["src/nbrank/_ckernels.pyx"],
                    include_dirs=[np.get_include()],
                    # keep float arithmetic identical to the Python fallback
                    extra_compile_args=["-O2", "-ffp-contract=off"],
                )
            ],
            compiler_directives={"language_level": 3},
        )

setup(ext_modules=ext_modules)
