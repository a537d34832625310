import numpy
from Cython.Build import cythonize
from setuptools import Extension, setup

split_ext = Extension(
    "infodemic.kernels._split_cy",
    ["src/infodemic/kernels/_split_cy.pyx"],
    include_dirs=[numpy.get_include()],
    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
)

setup(ext_modules=cythonize([split_ext], language_level=3))
