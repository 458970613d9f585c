import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

ext_modules = []
if cythonize is not None:
    ext_modules = cythonize(
        [
            Extension(
                "diffmarch._core",
                sources=["src/diffmarch/_core.pyx"],
                include_dirs=[np.get_include()],
                # -ffp-contract=off: no FMA contraction, so the compiled
                # kernels stay bitwise-identical to the pure-Python backend.
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        language_level=3,
    )

setup(ext_modules=ext_modules)
