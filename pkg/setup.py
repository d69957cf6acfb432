import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

define_macros = [("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")]

extensions = [
    Extension(
        "isdsim._kernel._core",
        ["src/isdsim/_kernel/_core.pyx"],
        define_macros=define_macros,
        extra_compile_args=["-O3"],
    )
]

setup(
    ext_modules=cythonize(extensions, language_level="3") if cythonize else [],
    include_dirs=[numpy.get_include()],
)
