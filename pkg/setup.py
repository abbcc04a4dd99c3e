import os

from setuptools import Extension, setup


def extensions():
    if os.environ.get("SBF_SKIP_EXT"):
        return []
    import numpy
    from Cython.Build import cythonize

    ext = Extension(
        "sbf._simkern",
        ["src/sbf/_simkern.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O3", "-march=native", "-funroll-loops"],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"})


setup(ext_modules=extensions())
