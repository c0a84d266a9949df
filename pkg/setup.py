import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

extensions = [
    Extension(
        "mutualcover._ckernels",
        ["src/mutualcover/_ckernels.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=["-O2", "-ffp-contract=off"],
        # the pure-Python kernels take over if the compiler is missing
        optional=True,
    ),
]

setup(ext_modules=cythonize(extensions, compiler_directives={"language_level": 3}))
