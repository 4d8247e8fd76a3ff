import os

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("COINSIFT_SKIP_EXT"):
    import numpy as np
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "coinsift._ckern",
                ["src/coinsift/_ckern.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                # -ffp-contract=off: no FMA contraction, so the compiled
                # kernels are bit-identical to the numpy fallback.
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        language_level=3,
    )

setup(ext_modules=ext_modules)
