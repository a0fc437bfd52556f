"""Build script: compiles the optional fast kernel extension.

The package works without the extension (a NumPy fallback is selected at
import time), so a failed Cython build only costs speed.
"""

from setuptools import setup
from setuptools.extension import Extension

try:
    import numpy
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "cecap._kernels._fast",
                ["src/cecap/_kernels/_fast.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                # -ffast-math lets gcc use the SIMD exp from libmvec in the
                # grid loops; every exponent here is finite and the mixture
                # density is floored at a normal double, so the relaxed
                # semantics are safe
                extra_compile_args=["-O3", "-ffast-math", "-ftree-vectorize"],
                extra_link_args=["-lmvec", "-lm"],
            )
        ],
        language_level=3,
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
