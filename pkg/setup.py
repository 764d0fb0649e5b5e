"""Build the optional compiled kernel extension.

    python3 setup.py build_ext --inplace

The package works without it (numpy fallback selected at import); a failed
extension build therefore only costs speed.
"""

from setuptools import Extension, setup

try:
    import numpy
    from Cython.Build import cythonize
except ImportError:
    extensions = []
else:
    extensions = cythonize(
        [
            Extension(
                "conepart._kernels._core",
                ["src/conepart/_kernels/_core.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
                optional=True,
            )
        ],
        language_level=3,
    )

setup(ext_modules=extensions)
