import os

import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

extra_compile_args = ["-O3", "-fno-math-errno"]
extra_link_args = []
if os.environ.get("SPLATFORGE_NO_OPENMP", "") != "1":
    extra_compile_args.append("-fopenmp")
    extra_link_args.append("-fopenmp")

extensions = [
    Extension(
        "splatforge.rasterizer._kernels",
        ["src/splatforge/rasterizer/_kernels.pyx"],
        include_dirs=[np.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=extra_compile_args,
        extra_link_args=extra_link_args,
    )
]

setup(
    ext_modules=cythonize(
        extensions,
        compiler_directives={"language_level": "3"},
    )
)
